"""Command-line entry point: hilmod verify | classify | fisher | moments.

Reports go to stdout (or --output) as JSON; logs go to stderr. Exit codes:
0 when every check passes, 1 when a check fails or a mathematical hypothesis
does not hold, 2 on invalid input.
"""

import logging
from pathlib import Path
from typing import Annotated, Any, NoReturn

import typer

from app.application.reports import Report
from app.application.run_config import RunConfig
from app.application.use_cases import (
    CHECK_NAMES,
    classify_preserver,
    compute_fisher,
    compute_moments,
    verify_suite,
)
from app.core.errors import HilmodError, HypothesisError, ValidationError
from app.core.logging import configure_logging
from app.infrastructure.io.json_codec import (
    dumps,
    parse_black_box,
    parse_fisher_input,
    parse_moments_input,
)

logger = logging.getLogger(__name__)

# Order matters: subclasses must come before base class for isinstance checks
EXIT_CODES: tuple[tuple[type[HilmodError], int], ...] = (
    (ValidationError, 2),
    (HypothesisError, 1),
    (HilmodError, 1),  # Base class last
)

cli = typer.Typer(name="hilmod", no_args_is_help=True, add_completion=False)

DOption = Annotated[int | None, typer.Option("--d", help="Module rank d")]
NOption = Annotated[int | None, typer.Option("--n", help="Spectrum size n")]
SeedOption = Annotated[int | None, typer.Option("--seed", help="Root seed for every random stream")]
TrialsOption = Annotated[int | None, typer.Option("--trials", help="Trials per check")]
TolOption = Annotated[float | None, typer.Option("--tol", help="Zero / rank / pass threshold")]
MaxOrderOption = Annotated[int | None, typer.Option("--max-order", help="Highest cumulant order checked")]
InputOption = Annotated[Path, typer.Option("--input", help="Input JSON file")]
OutputOption = Annotated[Path | None, typer.Option("--output", help="Write the report here instead of stdout")]
LogLevelOption = Annotated[str | None, typer.Option("--log-level", help="Overrides HILMOD_LOG_LEVEL")]


def _exit_code(exc: HilmodError) -> int:
    for error_class, code in EXIT_CODES:
        if isinstance(exc, error_class):
            return code
    return 1


def _emit(payload: dict[str, Any], output: Path | None) -> None:
    text = dumps(payload)
    if output is None:
        typer.echo(text, nl=False)
    else:
        output.write_text(text)
        logger.info("Report written to %s", output)


def _finish(report: Report, output: Path | None) -> NoReturn:
    _emit(report.to_json(), output)
    raise typer.Exit(code=0 if report.passed else 1)


def _fail(exc: HilmodError, command: str, output: Path | None) -> NoReturn:
    code = _exit_code(exc)
    logger.error("%s failed: %s%s", command, exc.message, f" ({exc.details})" if exc.details else "")
    _emit(
        {"command": command, "error": type(exc).__name__, "message": exc.message, "details": exc.details},
        output,
    )
    raise typer.Exit(code=code)


@cli.command()
def verify(
    d: DOption = None,
    n: NOption = None,
    seed: SeedOption = None,
    trials: TrialsOption = None,
    tol: TolOption = None,
    max_order: MaxOrderOption = None,
    check: Annotated[
        list[str] | None, typer.Option("--check", help=f"Run only these checks: {', '.join(CHECK_NAMES)}")
    ] = None,
    output: OutputOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Run the seeded property checks."""
    configure_logging(log_level)
    try:
        config = RunConfig.build(d=d, n=n, seed=seed, trials=trials, tol=tol, max_order=max_order)
        unknown = sorted(set(check or ()) - set(CHECK_NAMES))
        if unknown:
            raise ValidationError(message=f"Unknown check(s): {', '.join(unknown)}", details=f"Known: {CHECK_NAMES}")
        report = verify_suite(config, only=check)
    except HilmodError as e:
        _fail(e, "verify", output)
    _finish(report, output)


@cli.command()
def classify(
    input: InputOption,
    seed: SeedOption = None,
    tol: TolOption = None,
    output: OutputOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Recover the canonical form of a rank-one preserver from its generator table."""
    configure_logging(log_level)
    try:
        phi = parse_black_box(input)
        config = RunConfig.build(d=phi.d, n=phi.n, seed=seed, tol=tol)
        report = classify_preserver(phi, config)
    except HilmodError as e:
        _fail(e, "classify", output)
    _finish(report, output)


@cli.command()
def fisher(
    input: InputOption,
    seed: SeedOption = None,
    tol: TolOption = None,
    max_order: MaxOrderOption = None,
    output: OutputOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Free Fisher information of a semicircular variable with covariance T -> A T B."""
    configure_logging(log_level)
    try:
        cov, tau = parse_fisher_input(input)
        config = RunConfig.build(d=cov.d, n=cov.n, seed=seed, tol=tol, max_order=max_order)
        report = compute_fisher(cov, tau, config)
    except HilmodError as e:
        _fail(e, "fisher", output)
    _finish(report, output)


@cli.command()
def moments(
    input: InputOption,
    tol: TolOption = None,
    output: OutputOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Semicircular moment by recursion and by the pairing sum."""
    configure_logging(log_level)
    try:
        cov, coeffs = parse_moments_input(input)
        config = RunConfig.build(d=cov.d, n=cov.n, tol=tol)
        report = compute_moments(cov, coeffs, config)
    except HilmodError as e:
        _fail(e, "moments", output)
    _finish(report, output)


if __name__ == "__main__":
    cli()
