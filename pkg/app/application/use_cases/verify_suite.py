"""Seeded property checks over random instances, one check per structural statement.

Every trial draws from its own stream derive_rng(seed, check name, trial), so
a check's outcome does not depend on which other checks run or in what order.
Each trial returns a scaled deviation; 0.0 / 1.0 encode yes-no outcomes.
"""

import logging
from collections.abc import Callable

import numpy as np

from app.application.reports import CheckResult, Report, Trial, run_check
from app.application.run_config import RunConfig
from app.core.errors import KernelViolationError, NoGlobalScalarError, NotProportionalError
from app.domain.algebra import SpectrumAlgebraElement, is_invertible
from app.domain.free_prob import (
    MomentWord,
    OperatorTrace,
    SandwichCovariance,
    cumulant,
    fisher_information,
    moment_pairing_oracle,
    semicircular_moment,
    verify_conjugate_variable,
)
from app.domain.module import (
    ModuleVector,
    OperatorMatrix,
    adjoint,
    pointwise_rank,
    theta,
    theta_left_factor,
)
from app.domain.preserver import (
    PreserverKind,
    PreserverType,
    StructuredPreserver,
    TrichotomyCase,
    apply_structured,
    black_box_from_structured,
    classify,
    detect_type,
    extend_to_operator,
    extract_global_scalar,
    factor_functional,
    proportionality_factor,
    rank_one_sum_trichotomy,
    reconstruction_residual,
    surjectivity_invertibility_check,
    witness_residual,
)
from app.domain.sampling import (
    derive_rng,
    random_ci_vector,
    random_element,
    random_invertible_element,
    random_invertible_operator,
    random_operator,
    random_vector,
)

logger = logging.getLogger(__name__)

# Random b's per cumulant order inside the conjugate-variable check
SUITE_BATCH = 5

TrialFactory = Callable[[RunConfig], Trial]


def _scaled(deviation: float, scale: float) -> float:
    return deviation / max(1.0, scale)


def _rng(config: RunConfig, name: str, index: int) -> np.random.Generator:
    return derive_rng(config.seed, name, index)


def _random_preserver(rng: np.random.Generator, config: RunConfig, index: int) -> StructuredPreserver:
    kind = PreserverKind.LINEAR if index % 2 == 0 else PreserverKind.TRANSPOSE
    left = random_invertible_operator(rng, config.d, config.n)
    right = random_invertible_operator(rng, config.d, config.n)
    return StructuredPreserver(kind, left, right)


def _vanish_at(x: ModuleVector, t: int) -> ModuleVector:
    values = np.array(x.values)
    values[:, t] = 0.0
    return ModuleVector(values)


def _corruption_point(base: ModuleVector, rng: np.random.Generator) -> int | None:
    """A spectrum point where a kick orthogonal to base is nonzero; none exists when d = 1 and base never vanishes."""
    if base.d > 1:
        return int(rng.integers(base.n))
    candidates = np.flatnonzero(np.linalg.norm(base.values, axis=0) == 0.0)
    return int(rng.choice(candidates)) if candidates.size else None


def _orthogonal_kick(base: ModuleVector, rng: np.random.Generator, t: int) -> ModuleVector:
    """A vector that is zero except at t, where it is orthogonal to base(t) (or arbitrary if base(t) = 0)."""
    kick = rng.standard_normal(base.d) + 1j * rng.standard_normal(base.d)
    b = base.at(t)
    norm_sq = float(np.vdot(b, b).real)
    if norm_sq > 0.0:
        kick = kick - (np.vdot(b, kick) / norm_sq) * b
    values = np.zeros((base.d, base.n), dtype=np.complex128)
    values[:, t] = kick / np.linalg.norm(kick)
    return ModuleVector(values)


# Module and functional checks


def theta_kernel(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "theta-kernel", index)
        x = random_vector(rng, config.d, config.n)
        y = random_ci_vector(rng, config.d, config.n)
        recovered = theta_left_factor(theta(x, y), y, config.tol)
        zero = theta_left_factor(OperatorMatrix.zeros(config.d, config.n), y, config.tol)
        return max(_scaled((recovered - x).max_abs(), x.max_abs()), zero.max_abs())

    return trial


def functional_factorization(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "functional-factorization", index)
        phi = random_vector(rng, config.d, config.n)
        if config.n > 1 and index % 2:
            phi = _vanish_at(phi, int(rng.integers(config.n)))
        b = random_element(rng, config.n)
        recovered = factor_functional(phi, phi.scale(b), config.tol)
        support = np.linalg.norm(phi.values, axis=0) > 0.0
        deviation = _scaled(float(np.max(np.abs(recovered.values - b.values)[support])), b.norm())

        t = _corruption_point(phi, rng)
        if t is None:
            return deviation
        try:
            factor_functional(phi, phi.scale(b) + _orthogonal_kick(phi, rng, t), config.tol)
        except KernelViolationError:
            return deviation
        return 1.0

    return trial


def vector_proportionality(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "vector-proportionality", index)
        g1 = random_vector(rng, config.d, config.n)
        if config.n > 1 and index % 2:
            g1 = _vanish_at(g1, int(rng.integers(config.n)))
        a = random_element(rng, config.n)
        recovered = proportionality_factor(g1, g1.scale(a), config.tol)
        support = np.linalg.norm(g1.values, axis=0) > 0.0
        deviation = _scaled(float(np.max(np.abs(recovered.values - a.values)[support])), a.norm())

        t = _corruption_point(g1, rng)
        if t is None:
            return deviation
        try:
            proportionality_factor(g1, g1.scale(a) + _orthogonal_kick(g1, rng, t), config.tol)
        except NotProportionalError:
            return deviation
        return 1.0

    return trial


def _trichotomy_instance(
    rng: np.random.Generator, d: int, n: int, case: TrichotomyCase
) -> tuple[ModuleVector, ...]:
    x1, x2 = random_vector(rng, d, n), random_vector(rng, d, n)
    match case:
        case TrichotomyCase.G1_MULTIPLE_OF_G2:
            g2 = random_ci_vector(rng, d, n)
            alpha = random_invertible_element(rng, n)
            g1 = g2.scale(alpha)
            return x1, g1, x2, g2, x1.scale(alpha.star()) + x2, g2
        case TrichotomyCase.G2_MULTIPLE_OF_G1:
            g1 = random_ci_vector(rng, d, n)
            alpha = random_invertible_element(rng, n)
            g2 = g1.scale(alpha)
            return x1, g1, x2, g2, x1 + x2.scale(alpha.star()), g1
        case TrichotomyCase.X_FACTORS:
            g1, g2 = random_ci_vector(rng, d, n), random_ci_vector(rng, d, n)
            x3 = random_vector(rng, d, n)
            beta1, beta2 = random_element(rng, n), random_element(rng, n)
            g3 = g1.scale(beta1.star()) + g2.scale(beta2.star())
            return x3.scale(beta1), g1, x3.scale(beta2), g2, x3, g3


def rank_one_sum_trichotomy_check(config: RunConfig) -> Trial:
    cases = list(TrichotomyCase)

    def trial(index: int) -> float:
        rng = _rng(config, "rank-one-sum-trichotomy", index)
        x1, g1, x2, g2, x3, g3 = _trichotomy_instance(rng, config.d, config.n, cases[index % len(cases)])
        witness = rank_one_sum_trichotomy(x1, g1, x2, g2, x3, g3, config.tol)
        scale = max(v.max_abs() for v in (x1, g1, x2, g2, x3))
        return _scaled(witness_residual(witness, x1, g1, x2, g2, x3), scale)

    return trial


def trichotomy_invertible_coefficient(config: RunConfig) -> Trial:
    """Instances with g1, g2 supported on disjoint coordinates and g3 coordinate invertible."""

    def trial(index: int) -> float:
        if config.d < 2:
            return 0.0
        rng = _rng(config, "trichotomy-invertible-coefficient", index)
        d, n = config.d, config.n
        split = int(rng.integers(1, d))
        order = rng.permutation(d)
        g1 = np.zeros((d, n), dtype=np.complex128)
        g2 = np.zeros((d, n), dtype=np.complex128)
        for k in order[:split]:
            g1[k] = random_invertible_element(rng, n).values
        for k in order[split:]:
            g2[k] = random_invertible_element(rng, n).values
        v1, v2 = ModuleVector(g1), ModuleVector(g2)
        beta1 = random_invertible_element(rng, n)
        beta2 = random_invertible_element(rng, n) if index % 2 else SpectrumAlgebraElement.zero(n)
        x3 = random_vector(rng, d, n)
        g3 = v1.scale(beta1.star()) + v2.scale(beta2.star())
        x1, x2 = x3.scale(beta1), x3.scale(beta2)

        witness = rank_one_sum_trichotomy(x1, v1, x2, v2, x3, g3, config.tol)
        if witness.case is not TrichotomyCase.X_FACTORS or witness.invertible_flag is None:
            return 1.0
        flagged = witness.coefficients[0] if witness.invertible_flag == "beta1" else witness.coefficients[1]
        if not is_invertible(flagged, config.tol):
            return 1.0
        return _scaled(witness_residual(witness, x1, v1, x2, v2, x3), x3.max_abs())

    return trial


# Preserver checks


def type_dichotomy(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "type-dichotomy", index)
        p = _random_preserver(rng, config, index)
        detected = detect_type(black_box_from_structured(p), config.tol, config.seed)
        # With d = 1 both forms coincide and the row type wins the tie
        expected = (
            PreserverType.ROW_TYPE
            if p.kind is PreserverKind.LINEAR or config.d == 1
            else PreserverType.COLUMN_TYPE
        )
        return 0.0 if detected is expected else 1.0

    return trial


def global_scalar(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "global-scalar", index)
        d, n = config.d, config.n
        map_a = random_invertible_operator(rng, d, n)
        lam = random_element(rng, n)
        recovered = extract_global_scalar(map_a, map_a.scale(lam), config.tol)
        deviation = _scaled(float(np.max(np.abs(recovered.values - lam.values))), lam.norm())
        if d < 2:
            return deviation

        diag = [SpectrumAlgebraElement.scalar(float(k + 1), n) for k in range(d)]
        try:
            extract_global_scalar(OperatorMatrix.identity(d, n), OperatorMatrix.diagonal(diag), config.tol)
        except NoGlobalScalarError:
            return deviation
        return 1.0

    return trial


def rank_one_classification(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "rank-one-classification", index)
        p = _random_preserver(rng, config, index)
        phi = black_box_from_structured(p)
        recovered = classify(phi, config.tol, config.seed)
        kind_ok = recovered.kind is p.kind or config.d == 1
        if not kind_ok:
            return 1.0

        residual = reconstruction_residual(phi, recovered)
        x = random_vector(rng, config.d, config.n)
        f = random_ci_vector(rng, config.d, config.n)
        ranks = pointwise_rank(p(theta(x, f)), config.tol)
        if any(r != 1 for r in ranks):
            return 1.0
        return residual

    return trial


def operator_extension(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "operator-extension", index)
        d, n = config.d, config.n
        p = _random_preserver(rng, config, index)
        t = random_operator(rng, d, n)
        direct = apply_structured(p, t)
        via_generators = extend_to_operator(black_box_from_structured(p), t)
        deviation = _scaled((direct - via_generators).max_abs(), direct.max_abs())

        left, right = random_operator(rng, d, n), random_operator(rng, d, n)
        conj_linear = left @ adjoint(t).entrywise_star() @ right.entrywise_star()
        canonical = StructuredPreserver.from_conjugate_linear(left, right)(t)
        return max(deviation, _scaled((conj_linear - canonical).max_abs(), conj_linear.max_abs()))

    return trial


def surjectivity_invertibility(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "surjectivity-invertibility", index)
        d, n = config.d, config.n
        p = _random_preserver(rng, config, index)
        singular = index % 4 == 3
        if singular:
            left = np.array(p.left.values)
            left[:, int(rng.integers(d)), int(rng.integers(n))] = 0.0
            p = StructuredPreserver(p.kind, OperatorMatrix(left), p.right)
        report = surjectivity_invertibility_check(p, config.tol)
        expected = not singular
        ok = report.surjective is expected and report.left_invertible is expected and report.right_invertible
        return 0.0 if ok else 1.0

    return trial


# Free probability checks


def _random_covariance(rng: np.random.Generator, d: int, n: int) -> SandwichCovariance:
    return SandwichCovariance(random_operator(rng, d, n), random_operator(rng, d, n))


def semicircular_cumulants(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "semicircular-cumulants", index)
        d, n = config.d, config.n
        cov = _random_covariance(rng, d, n)
        c = OperatorMatrix.identity(d, n)
        worst = 0.0
        for order in range(1, config.max_order + 1):
            coeffs = [random_operator(rng, d, n) for _ in range(order - 1)]
            value = cumulant(MomentWord.pure(coeffs), cov, c)
            moment = semicircular_moment(cov, coeffs)
            oracle = moment_pairing_oracle(cov, coeffs)
            target = cov.apply(coeffs[0]) if order == 2 else OperatorMatrix.zeros(d, n)
            worst = max(
                worst,
                _scaled((value - target).max_abs(), max(target.max_abs(), moment.max_abs())),
                _scaled((moment - oracle).max_abs(), moment.max_abs()),
            )
        return worst

    return trial


def conjugate_variable(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "conjugate-variable", index)
        d, n = config.d, config.n
        cov = SandwichCovariance(random_invertible_operator(rng, d, n), random_invertible_operator(rng, d, n))
        report = verify_conjugate_variable(
            cov,
            OperatorTrace.uniform(n),
            config.max_order,
            seed=config.seed + index,
            batch=SUITE_BATCH,
            tol=config.tol,
        )
        return report.max_deviation

    return trial


def fisher_closed_form(config: RunConfig) -> Trial:
    def trial(index: int) -> float:
        rng = _rng(config, "fisher-closed-form", index)
        d, n = config.d, config.n
        cov = SandwichCovariance(random_invertible_operator(rng, d, n), random_invertible_operator(rng, d, n))
        report = fisher_information(cov, OperatorTrace.uniform(n), config.tol)
        return _scaled(report.deviation, abs(report.closed_form))

    return trial


CHECKS: tuple[tuple[str, TrialFactory], ...] = (
    ("theta-kernel", theta_kernel),
    ("functional-factorization", functional_factorization),
    ("vector-proportionality", vector_proportionality),
    ("rank-one-sum-trichotomy", rank_one_sum_trichotomy_check),
    ("trichotomy-invertible-coefficient", trichotomy_invertible_coefficient),
    ("type-dichotomy", type_dichotomy),
    ("global-scalar", global_scalar),
    ("rank-one-classification", rank_one_classification),
    ("operator-extension", operator_extension),
    ("surjectivity-invertibility", surjectivity_invertibility),
    ("semicircular-cumulants", semicircular_cumulants),
    ("conjugate-variable", conjugate_variable),
    ("fisher-closed-form", fisher_closed_form),
)

CHECK_NAMES = tuple(name for name, _ in CHECKS)


def verify_suite(config: RunConfig, only: list[str] | None = None) -> Report:
    """Run every property check (or the named subset) for config.trials trials.

    Args:
        config: Validated run configuration.
        only: Optional subset of CHECK_NAMES to run.

    Returns:
        Report with one CheckResult per check; empty when config.trials is 0.
    """
    report = Report(command="verify", config=config.model_dump())
    if config.trials == 0:
        logger.warning("trials=0: nothing to verify, returning an empty report")
        return report

    selected = [(name, factory) for name, factory in CHECKS if only is None or name in only]
    results: list[CheckResult] = []
    for name, factory in selected:
        results.append(run_check(name, config.trials, config.tol, factory(config)))
    report.checks = results
    return report
