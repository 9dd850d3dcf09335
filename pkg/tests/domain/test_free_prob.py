import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import DimensionError, NotInvertibleError, OrderLimitError, ValidationError
from app.domain.algebra import AlgebraState, SpectrumAlgebraElement
from app.domain.free_prob import (
    MAX_CUMULANT_ORDER,
    MAX_MOMENT_ORDER,
    Letter,
    MomentWord,
    OperatorTrace,
    SandwichCovariance,
    conjugate_data,
    cumulant,
    evaluate_nested,
    fisher_information,
    fold_word,
    joint_moment,
    moment_pairing_oracle,
    semicircular_moment,
    verify_conjugate_variable,
)
from app.domain.module import OperatorMatrix
from app.domain.noncrossing import NonCrossingPartition
from app.domain.sampling import random_element, random_invertible_operator, random_operator


def scalar_op(z: complex) -> OperatorMatrix:
    return OperatorMatrix(np.full((1, 1, 1), z, dtype=np.complex128))


def diag_op(*values: complex) -> OperatorMatrix:
    return OperatorMatrix.diagonal([SpectrumAlgebraElement.scalar(v, 1) for v in values])


def identity_cov(d: int = 1, n: int = 1) -> SandwichCovariance:
    return SandwichCovariance(OperatorMatrix.identity(d, n), OperatorMatrix.identity(d, n))


def random_cov(rng: np.random.Generator, d: int = 2, n: int = 2) -> SandwichCovariance:
    return SandwichCovariance(random_invertible_operator(rng, d, n), random_invertible_operator(rng, d, n))


# Moments


@pytest.mark.parametrize(("m", "expected"), [(2, 1), (4, 2), (6, 5), (8, 14)])
def test_scalar_moments_are_catalan(m: int, expected: int) -> None:
    one = OperatorMatrix.identity(1, 1)
    value = semicircular_moment(identity_cov(), [one] * (m - 1))
    assert_allclose(value.values, [[[expected]]])


def test_odd_moments_vanish(rng: np.random.Generator) -> None:
    """Moments of odd order are zero."""
    cov = random_cov(rng)
    coeffs = [random_operator(rng, 2, 2) for _ in range(2)]
    assert semicircular_moment(cov, coeffs).max_abs() == 0.0
    assert semicircular_moment(cov, []).max_abs() == 0.0


def test_second_moment_is_covariance(rng: np.random.Generator) -> None:
    """E(X b X) = A b B."""
    cov = random_cov(rng)
    b = random_operator(rng, 2, 2)
    assert semicircular_moment(cov, [b]).allclose(cov.apply(b), atol=1e-12)


def test_fourth_moment_expansion(rng: np.random.Generator) -> None:
    """The two non-crossing pairings of four letters."""
    cov = random_cov(rng)
    b1, b2, b3 = (random_operator(rng, 2, 2) for _ in range(3))
    expected = cov.apply(b1) @ b2 @ cov.apply(b3) + cov.apply(b1 @ cov.apply(b2) @ b3)
    assert semicircular_moment(cov, [b1, b2, b3]).allclose(expected, atol=1e-10)


@pytest.mark.parametrize("m", [2, 4, 6, 8])
def test_recursion_agrees_with_pairing_oracle(rng: np.random.Generator, m: int) -> None:
    """The first-pairing recursion equals the explicit sum over pairings."""
    cov = random_cov(rng)
    coeffs = [random_operator(rng, 2, 2) for _ in range(m - 1)]
    recursion = semicircular_moment(cov, coeffs)
    oracle = moment_pairing_oracle(cov, coeffs)
    assert (recursion - oracle).max_abs() <= 1e-9 * max(1.0, oracle.max_abs())


def test_moment_order_limit() -> None:
    one = OperatorMatrix.identity(1, 1)
    with pytest.raises(OrderLimitError):
        semicircular_moment(identity_cov(), [one] * MAX_MOMENT_ORDER)
    with pytest.raises(OrderLimitError):
        moment_pairing_oracle(identity_cov(), [one] * MAX_MOMENT_ORDER)


def test_moment_rejects_mismatched_coefficients() -> None:
    with pytest.raises(DimensionError):
        semicircular_moment(identity_cov(d=2), [OperatorMatrix.identity(3, 1)])


def replace_at(coeffs: list[OperatorMatrix], position: int, value: OperatorMatrix) -> list[OperatorMatrix]:
    return [value if i == position else c for i, c in enumerate(coeffs)]


@pytest.mark.parametrize("position", range(5))
def test_moment_is_multilinear_in_each_coefficient(rng: np.random.Generator, position: int) -> None:
    """Replacing one coefficient by b + alpha b' splits the moment into two, alpha in A."""
    cov = random_cov(rng)
    coeffs = [random_operator(rng, 2, 2) for _ in range(5)]
    other = random_operator(rng, 2, 2)
    alpha = random_element(rng, 2)

    combined = semicircular_moment(cov, replace_at(coeffs, position, coeffs[position] + other.scale(alpha)))
    swapped = semicircular_moment(cov, replace_at(coeffs, position, other))
    split = semicircular_moment(cov, coeffs) + swapped.scale(alpha)

    assert (combined - split).max_abs() <= 1e-9 * max(1.0, combined.max_abs())


# Nested evaluation


def test_evaluate_nested_pairings(rng: np.random.Generator) -> None:
    cov = random_cov(rng)
    b1, b2, b3 = (random_operator(rng, 2, 2) for _ in range(3))

    def block_value(inner: tuple[OperatorMatrix, ...]) -> OperatorMatrix:
        return cov.apply(inner[0])

    nested = evaluate_nested(NonCrossingPartition(((1, 4), (2, 3))), [b1, b2, b3], block_value)
    assert nested.allclose(cov.apply(b1 @ cov.apply(b2) @ b3), atol=1e-12)
    adjacent = evaluate_nested(NonCrossingPartition(((1, 2), (3, 4))), [b1, b2, b3], block_value)
    assert adjacent.allclose(cov.apply(b1) @ b2 @ cov.apply(b3), atol=1e-12)


def test_evaluate_nested_rejects_size_mismatch() -> None:
    one = OperatorMatrix.identity(1, 1)
    with pytest.raises(DimensionError):
        evaluate_nested(NonCrossingPartition(((1, 2),)), [one, one], lambda inner: one)


# Words with xi


def test_moment_word_validation() -> None:
    with pytest.raises(ValidationError):
        MomentWord(())
    with pytest.raises(DimensionError):
        MomentWord((Letter.X, Letter.X), ())
    assert MomentWord.pure([scalar_op(1)] * 3).order == 4


def test_fold_word_moves_c_into_next_coefficient() -> None:
    b, c = scalar_op(3), scalar_op(2)
    coeffs, cap = fold_word(MomentWord((Letter.XI, Letter.X), (b,)), c)
    assert_allclose(coeffs[0].values, [[[6]]])
    assert cap is None
    coeffs, cap = fold_word(MomentWord((Letter.X, Letter.XI), (b,)), c)
    assert_allclose(coeffs[0].values, [[[3]]])
    assert cap is not None
    assert_allclose(cap.values, [[[2]]])


def test_joint_moment_with_trailing_xi(rng: np.random.Generator) -> None:
    cov = random_cov(rng)
    b, c = random_operator(rng, 2, 2), random_operator(rng, 2, 2)
    value = joint_moment(MomentWord((Letter.X, Letter.XI), (b,)), cov, c)
    assert value.allclose(cov.apply(b) @ c, atol=1e-12)
    leading = joint_moment(MomentWord((Letter.XI, Letter.X), (b,)), cov, c)
    assert leading.allclose(cov.apply(c @ b), atol=1e-12)


# Cumulants


def test_first_cumulant_vanishes(rng: np.random.Generator) -> None:
    """k1(X) = 0."""
    cov = random_cov(rng)
    assert cumulant(MomentWord((Letter.X,)), cov, OperatorMatrix.identity(2, 2)).max_abs() == 0.0


def test_second_cumulant_is_covariance(rng: np.random.Generator) -> None:
    """k2(X, bX) = A b B."""
    cov = random_cov(rng)
    b = random_operator(rng, 2, 2)
    value = cumulant(MomentWord.pure([b]), cov, OperatorMatrix.identity(2, 2))
    assert value.allclose(cov.apply(b), atol=1e-12)


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_higher_cumulants_vanish(rng: np.random.Generator, m: int) -> None:
    """Cumulants of order three and up vanish for a semicircular element."""
    cov = random_cov(rng)
    word = MomentWord.pure([random_operator(rng, 2, 2) for _ in range(m - 1)])
    value = cumulant(word, cov, OperatorMatrix.identity(2, 2))
    scale = max(1.0, semicircular_moment(cov, word.coefficients).max_abs())
    assert value.max_abs() <= 1e-9 * scale


def test_cumulant_order_limit() -> None:
    one = OperatorMatrix.identity(1, 1)
    with pytest.raises(OrderLimitError):
        cumulant(MomentWord.pure([one] * MAX_CUMULANT_ORDER), identity_cov(), one)


@pytest.mark.parametrize(("m", "position"), [(2, 0), (3, 1), (4, 0), (4, 2), (5, 3)])
def test_cumulant_is_multilinear_in_each_coefficient(rng: np.random.Generator, m: int, position: int) -> None:
    """Linearity of k_m over A in one coefficient of a word that starts with xi."""
    cov = random_cov(rng)
    c = random_operator(rng, 2, 2)
    coeffs = [random_operator(rng, 2, 2) for _ in range(m - 1)]
    other = random_operator(rng, 2, 2)
    alpha = random_element(rng, 2)
    letters = (Letter.XI, *(Letter.X for _ in range(m - 1)))

    def k(values: list[OperatorMatrix]) -> OperatorMatrix:
        return cumulant(MomentWord(letters, tuple(values)), cov, c)

    combined = k(replace_at(coeffs, position, coeffs[position] + other.scale(alpha)))
    split = k(coeffs) + k(replace_at(coeffs, position, other)).scale(alpha)
    scale = max(1.0, joint_moment(MomentWord(letters, tuple(coeffs)), cov, c).max_abs())

    assert (combined - split).max_abs() <= 1e-9 * scale


# Trace


def test_trace_is_normalized_and_cyclic(rng: np.random.Generator) -> None:
    """tau(1) = 1 and tau(MK) = tau(KM)."""
    tau = OperatorTrace(AlgebraState.from_weights([0.25, 0.75]))
    assert tau.apply(OperatorMatrix.identity(3, 2)) == pytest.approx(1.0)
    m, k = random_operator(rng, 3, 2), random_operator(rng, 3, 2)
    assert tau.apply(m @ k) == pytest.approx(tau.apply(k @ m), abs=1e-12)


def test_trace_rejects_other_spectrum() -> None:
    with pytest.raises(DimensionError):
        OperatorTrace.uniform(2).apply(OperatorMatrix.identity(2, 3))


# Conjugate variable


def test_conjugate_data_scalar() -> None:
    """A = 2, B = 1 gives c = 1/2 and eta acting as the identity."""
    c, eta = conjugate_data(SandwichCovariance(scalar_op(2), scalar_op(1)))
    assert_allclose(c.values, [[[0.5]]])
    assert_allclose(eta.apply(scalar_op(7)).values, [[[7]]])


def test_conjugate_variable_scalar() -> None:
    report = verify_conjugate_variable(
        SandwichCovariance(scalar_op(2), scalar_op(1)), OperatorTrace.uniform(1), max_order=4, batch=3
    )
    assert set(report.deviations) == {"k1", "k2", "k3", "k4"}
    assert report.passed(1e-9)


def test_conjugate_variable_random(rng: np.random.Generator) -> None:
    report = verify_conjugate_variable(random_cov(rng), OperatorTrace.uniform(2), max_order=4, seed=7, batch=3)
    assert report.max_deviation <= 1e-8


def test_conjugate_variable_limits(rng: np.random.Generator) -> None:
    cov = random_cov(rng)
    with pytest.raises(OrderLimitError):
        verify_conjugate_variable(cov, OperatorTrace.uniform(2), max_order=1)
    with pytest.raises(OrderLimitError):
        verify_conjugate_variable(cov, OperatorTrace.uniform(2), max_order=7)
    with pytest.raises(DimensionError):
        verify_conjugate_variable(cov, OperatorTrace.uniform(3), max_order=2)


def test_singular_covariance_has_no_conjugate_variable() -> None:
    cov = SandwichCovariance(diag_op(1, 0), OperatorMatrix.identity(2, 1))
    with pytest.raises(NotInvertibleError):
        conjugate_data(cov)
    with pytest.raises(NotInvertibleError):
        fisher_information(cov, OperatorTrace.uniform(1))


# Fisher information


@pytest.mark.parametrize(
    ("cov", "expected"),
    [
        (SandwichCovariance(scalar_op(2), scalar_op(1)), 0.5),
        (SandwichCovariance(diag_op(1, 2), OperatorMatrix.identity(2, 1)), 0.75),
        (identity_cov(d=2), 1.0),
    ],
)
def test_fisher_information_examples(cov: SandwichCovariance, expected: float) -> None:
    """Values that can be checked by hand on d <= 2, n = 1."""
    report = fisher_information(cov, OperatorTrace.uniform(1))
    assert report.numeric == pytest.approx(expected, abs=1e-12)
    assert report.closed_form == pytest.approx(expected, abs=1e-12)
    assert report.max_order_checked == 0


def test_fisher_numeric_matches_closed_form(rng: np.random.Generator) -> None:
    """A random d = 3 covariance under a non-uniform trace."""
    tau = OperatorTrace(AlgebraState.from_weights([0.4, 0.6]))
    report = fisher_information(random_cov(rng, d=3), tau, max_order=3, seed=1)
    assert report.deviation <= 1e-9 * max(1.0, abs(report.closed_form))
    assert report.max_order_checked == 3
    assert set(report.condition_deviations) == {"k1", "k2", "k3"}


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_fisher_numeric_matches_closed_form_over_grid(d: int, n: int) -> None:
    """Twelve seeded covariances per (d, n), with the conditions up to k5 checked on the first."""
    rng = np.random.default_rng(100 * d + n)
    tau = OperatorTrace.uniform(n)
    for index in range(12):
        cov = random_cov(rng, d=d, n=n)
        report = fisher_information(cov, tau, max_order=5 if index == 0 else None, seed=index)
        assert report.deviation <= 1e-9 * max(1.0, abs(report.closed_form))
        assert all(value <= 1e-8 for value in report.condition_deviations.values())


def test_conjugate_variable_fifth_cumulant_vanishes(rng: np.random.Generator) -> None:
    """k5(xi, b1 X, ..., b4 X) = 0 for a random covariance on d = 3, n = 2."""
    report = verify_conjugate_variable(random_cov(rng, d=3), OperatorTrace.uniform(2), max_order=5, seed=3, batch=4)
    assert set(report.deviations) == {"k1", "k2", "k3", "k4", "k5"}
    assert report.deviations["k5"] <= 1e-8
    assert report.max_deviation <= 1e-8
