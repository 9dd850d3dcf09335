import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import DimensionError, NotInvertibleError, ValidationError
from app.domain.algebra import AlgebraState, SpectrumAlgebraElement
from app.domain.module import (
    ModuleVector,
    OperatorMatrix,
    adjoint,
    basis_vector,
    finite_rank_expand,
    inner_product,
    is_coordinate_invertible,
    is_pointwise_invertible,
    operator_inverse,
    pointwise_determinant,
    pointwise_rank,
    sum_thetas,
    theta,
    theta_left_factor,
)
from app.domain.sampling import random_ci_vector, random_element, random_operator, random_vector


def vec(*coords: list[complex]) -> ModuleVector:
    return ModuleVector(np.array(coords, dtype=np.complex128))


# Inner product


def test_inner_product_single_coordinate() -> None:
    """x = [(1,2),(0,0)], y = [(1,1),(0,0)] gives (1,2)."""
    x = vec([1, 2], [0, 0])
    y = vec([1, 1], [0, 0])
    assert_allclose(inner_product(x, y).values, [1, 2])


def test_basis_is_orthonormal() -> None:
    """<e_i, e_j> is 1 on the diagonal and 0 off it at every point."""
    for i in range(3):
        for j in range(3):
            expected = np.ones(2) if i == j else np.zeros(2)
            assert_allclose(inner_product(basis_vector(i, 3, 2), basis_vector(j, 3, 2)).values, expected)


def test_inner_product_is_a_linear_in_first_argument(rng: np.random.Generator) -> None:
    """Linear in the first slot, conjugate linear in the second."""
    x, y = random_vector(rng, 3, 2), random_vector(rng, 3, 2)
    alpha = random_element(rng, 2)
    assert inner_product(x.scale(alpha), y).allclose(alpha * inner_product(x, y))
    assert inner_product(x, y.scale(alpha)).allclose(alpha.star() * inner_product(x, y))


def test_inner_product_is_hermitian_and_positive(rng: np.random.Generator) -> None:
    """<x, y>* = <y, x> and <x, x> >= 0 pointwise."""
    x, y = random_vector(rng, 2, 3), random_vector(rng, 2, 3)
    assert inner_product(x, y).star().allclose(inner_product(y, x))
    xx = inner_product(x, x).values
    assert np.all(xx.real >= 0)
    assert_allclose(xx.imag, 0.0, atol=1e-15)
    assert AlgebraState.uniform(3).apply(inner_product(x, x)).real >= 0


def test_vector_norm_matches_inner_product() -> None:
    """Norm of a vector with entries 3 and 4 at one point is 5."""
    x = vec([3, 0], [4, 1])
    assert x.norm() == pytest.approx(5.0)


def test_dimension_mismatch_rejected() -> None:
    """Vectors of different rank d cannot be paired."""
    with pytest.raises(DimensionError):
        inner_product(basis_vector(0, 2, 2), basis_vector(0, 3, 2))


# Rank-one operators


def test_theta_matrix_unit() -> None:
    """d=2, n=1: theta(e1, e2) = [[0,1],[0,0]]."""
    m = theta(basis_vector(0, 2, 1), basis_vector(1, 2, 1))
    assert_allclose(m.values[:, :, 0], [[0, 1], [0, 0]])


def test_theta_acts_as_rank_one_map(rng: np.random.Generator) -> None:
    """theta(x, y) xi = x <xi, y>."""
    x, y, xi = (random_vector(rng, 3, 2) for _ in range(3))
    assert theta(x, y).apply(xi).allclose(x.scale(inner_product(xi, y)), atol=1e-12)


def test_theta_scalar_identities(rng: np.random.Generator) -> None:
    """Multipliers move between the two slots of theta with a star."""
    x, y = random_vector(rng, 2, 3), random_vector(rng, 2, 3)
    alpha = random_element(rng, 3)
    assert theta(x, y.scale(alpha)).allclose(theta(x.scale(alpha.star()), y), atol=1e-12)
    assert theta(x, y).scale(alpha).allclose(theta(x.scale(alpha), y), atol=1e-12)


def test_theta_composition(rng: np.random.Generator) -> None:
    """theta(x, y) theta(u, v) = theta(x <u, y>, v)."""
    x, y, u, v = (random_vector(rng, 3, 2) for _ in range(4))
    left = theta(x, y) @ theta(u, v)
    assert left.allclose(theta(x.scale(inner_product(u, y)), v), atol=1e-12)


def test_theta_left_factor_recovers_x(rng: np.random.Generator) -> None:
    """x is read back from theta(x, y) through an invertible coordinate of y."""
    x = random_vector(rng, 3, 2)
    y = random_ci_vector(rng, 3, 2)
    assert theta_left_factor(theta(x, y), y).allclose(x, atol=1e-12)
    assert theta_left_factor(OperatorMatrix.zeros(3, 2), y).is_zero()


def test_theta_left_factor_needs_invertible_coordinate() -> None:
    """y without an invertible coordinate cannot be divided out."""
    y = vec([1, 0], [0, 0])
    with pytest.raises(ValidationError):
        theta_left_factor(OperatorMatrix.zeros(2, 2), y)


# Adjoint


def test_adjoint_of_theta_swaps_arguments(rng: np.random.Generator) -> None:
    """theta(x, y)* = theta(y, x)."""
    x, y = random_vector(rng, 3, 2), random_vector(rng, 3, 2)
    assert adjoint(theta(x, y)).allclose(theta(y, x))


def test_adjoint_is_involution_and_satisfies_inner_product(rng: np.random.Generator) -> None:
    """T** = T and <T x, y> = <x, T* y>."""
    m = random_operator(rng, 3, 2)
    x, y = random_vector(rng, 3, 2), random_vector(rng, 3, 2)
    assert adjoint(adjoint(m)).allclose(m)
    assert inner_product(m.apply(x), y).allclose(inner_product(x, adjoint(m).apply(y)), atol=1e-12)


def test_operator_is_a_linear(rng: np.random.Generator) -> None:
    """Operators commute with algebra multipliers."""
    m = random_operator(rng, 2, 3)
    v, w = random_vector(rng, 2, 3), random_vector(rng, 2, 3)
    alpha = random_element(rng, 3)
    assert m.apply(v.scale(alpha) + w).allclose(m.apply(v).scale(alpha) + m.apply(w), atol=1e-12)


def test_transpose_has_no_star() -> None:
    """transpose moves entries without conjugating; entrywise_star conjugates in place."""
    values = np.zeros((2, 2, 1), dtype=np.complex128)
    values[0, 1, 0] = 1j
    m = OperatorMatrix(values)
    assert m.transpose().values[1, 0, 0] == 1j
    assert m.entrywise_star().values[0, 1, 0] == -1j


# Coordinate invertibility


def test_basis_vectors_are_coordinate_invertible() -> None:
    """Each e_i has an invertible coordinate."""
    assert all(is_coordinate_invertible(basis_vector(i, 3, 2)) for i in range(3))


def test_coordinate_invertibility_cases() -> None:
    """A coordinate vanishing at some point is not invertible."""
    assert is_coordinate_invertible(vec([1, 2], [0, 0]))
    assert not is_coordinate_invertible(vec([1, 0], [0, 0]))
    assert not is_coordinate_invertible(ModuleVector.zeros(2, 2))


# Finite-rank expansion


def test_expand_identity_gives_basis_pairs() -> None:
    """The identity expands into the pairs (e_i, e_i)."""
    pairs = finite_rank_expand(OperatorMatrix.identity(3, 2))
    for i, (x, f) in enumerate(pairs):
        assert x.allclose(basis_vector(i, 3, 2))
        assert f.allclose(basis_vector(i, 3, 2))


def test_expand_resums_exactly(rng: np.random.Generator) -> None:
    """Summing the thetas of the expansion gives back the operator."""
    m = random_operator(rng, 3, 2)
    assert sum_thetas(finite_rank_expand(m)).allclose(m, atol=1e-14)
    t = theta(random_vector(rng, 3, 2), random_vector(rng, 3, 2))
    assert sum_thetas(finite_rank_expand(t)).allclose(t, atol=1e-14)


# Pointwise linear algebra


def test_pointwise_rank_of_theta_and_zero() -> None:
    """theta has rank 1 where both factors are nonzero and 0 elsewhere."""
    x = vec([1, 0], [0, 0])
    y = vec([1, 1], [0, 0])
    assert pointwise_rank(theta(x, y)) == [1, 0]
    assert pointwise_rank(OperatorMatrix.identity(2, 2)) == [2, 2]


def test_operator_inverse(rng: np.random.Generator) -> None:
    """M M^-1 = 1 for a random operator."""
    m = random_operator(rng, 3, 2)
    assert (m @ operator_inverse(m)).allclose(OperatorMatrix.identity(3, 2), atol=1e-10)


def test_operator_inverse_reports_singular_point() -> None:
    """A zero determinant at t=2 is reported with the point."""
    m = OperatorMatrix.diagonal([SpectrumAlgebraElement(np.array([1.0, 0.0])), SpectrumAlgebraElement.unit(2)])
    assert not is_pointwise_invertible(m)
    assert_allclose(pointwise_determinant(m).values, [1, 0])
    with pytest.raises(NotInvertibleError) as exc_info:
        operator_inverse(m)
    assert exc_info.value.point == 2
