from pydantic import BaseModel

from app.application.reports import CheckResult, Report
from app.application.run_config import RunConfig
from app.domain.free_prob import OperatorTrace, SandwichCovariance, fisher_information
from app.infrastructure.io.json_codec import ComplexPair


class FisherResult(BaseModel):
    """Free Fisher information, numerically and in closed form."""

    numeric: ComplexPair
    closed_form: ComplexPair
    deviation: float
    max_order_checked: int
    condition_deviations: dict[str, float]


def compute_fisher(cov: SandwichCovariance, tau: OperatorTrace, config: RunConfig) -> Report:
    """Compute tau E(xi xi*) and tau(B^-1* A^-1*) for the covariance T -> A T B.

    The conjugate-variable conditions are checked up to config.max_order.

    Args:
        cov: The covariance (A, B); both must be pointwise invertible.
        tau: Trace on L(H_A) built from a faithful algebra state.
        config: Run configuration.

    Returns:
        Report with checks "fisher-closed-form" and "conjugate-variable".

    Raises:
        NotInvertibleError: If A or B is singular at some spectrum point.
    """
    report = fisher_information(cov, tau, config.tol, max_order=config.max_order, seed=config.seed)
    result = FisherResult(
        numeric=(report.numeric.real, report.numeric.imag),
        closed_form=(report.closed_form.real, report.closed_form.imag),
        deviation=report.deviation,
        max_order_checked=report.max_order_checked,
        condition_deviations=report.condition_deviations,
    )
    conditions = max(report.condition_deviations.values(), default=0.0)
    checks = [
        CheckResult(
            name="fisher-closed-form",
            trials=1,
            max_deviation=report.deviation,
            passed=report.deviation <= config.tol,
            wall_time_s=0.0,
        ),
        CheckResult(
            name="conjugate-variable",
            trials=1,
            max_deviation=conditions,
            passed=conditions <= config.tol,
            wall_time_s=0.0,
        ),
    ]
    return Report(command="fisher", config=config.model_dump(), checks=checks, result=result.model_dump(mode="json"))
