"""The truncated standard Hilbert A-module H_A^(d) and its adjointable operators.

Vectors carry d coordinates in A with respect to the standard orthonormal
basis e_i = e_i (x) 1; operators are d x d matrices over A. Because A is
commutative every A-linear map of the truncated module is such a matrix and
is adjointable. Arrays keep the spectrum on the last axis: a vector is
(d, n), an operator is (d, d, n). `fibers()` exposes the n complex d x d
matrices an operator is made of.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from app.core.errors import DimensionError, NotInvertibleError, ValidationError
from app.domain.algebra import (
    DEFAULT_TOL,
    ComplexArray,
    ElementClass,
    SpectrumAlgebraElement,
    classify_element,
    frozen_array,
    threshold,
)


@dataclass(frozen=True, eq=False)
class ModuleVector:
    """x = sum_i x_i e_i, stored as a (d, n) array of coordinate values."""

    values: ComplexArray

    def __post_init__(self) -> None:
        arr = frozen_array(self.values)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(
                message="Module vector must be a (d, n) array with d, n >= 1",
                details=f"Got shape {arr.shape}",
            )
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_coords(cls, coords: Sequence[SpectrumAlgebraElement]) -> "ModuleVector":
        return cls(np.stack([c.values for c in coords]))

    @classmethod
    def zeros(cls, d: int, n: int) -> "ModuleVector":
        return cls(np.zeros((d, n), dtype=np.complex128))

    @property
    def d(self) -> int:
        return int(self.values.shape[0])

    @property
    def n(self) -> int:
        return int(self.values.shape[1])

    @property
    def coords(self) -> tuple[SpectrumAlgebraElement, ...]:
        return tuple(SpectrumAlgebraElement(row) for row in self.values)

    def coord(self, i: int) -> SpectrumAlgebraElement:
        return SpectrumAlgebraElement(self.values[i])

    def at(self, t: int) -> ComplexArray:
        """The complex vector x(t) in C^d at spectrum point t (0-based)."""
        return self.values[:, t]

    def scale(self, alpha: SpectrumAlgebraElement) -> "ModuleVector":
        """Left module action alpha . x."""
        if alpha.n != self.n:
            raise DimensionError(
                message="Scalar and vector live on different spectra",
                details=f"Scalar n={alpha.n}, vector n={self.n}",
            )
        return ModuleVector(self.values * alpha.values[np.newaxis, :])

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        check_same_shape(self, other)
        return ModuleVector(self.values + other.values)

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        check_same_shape(self, other)
        return ModuleVector(self.values - other.values)

    def __neg__(self) -> "ModuleVector":
        return ModuleVector(-self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def norm(self) -> float:
        """||x|| = ||<x, x>||^(1/2)."""
        return float(np.sqrt(inner_product(self, self).norm()))

    def is_zero(self, tol: float = DEFAULT_TOL) -> bool:
        return self.max_abs() <= threshold(self.max_abs(), tol)

    def allclose(self, other: "ModuleVector", atol: float = 1e-12) -> bool:
        check_same_shape(self, other)
        return bool(np.allclose(self.values, other.values, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """An adjointable operator: (M v)_i = sum_j M_ij v_j, stored as (d, d, n)."""

    values: ComplexArray

    def __post_init__(self) -> None:
        arr = frozen_array(self.values)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1 or arr.shape[2] < 1:
            raise DimensionError(
                message="Operator must be a (d, d, n) array with d, n >= 1",
                details=f"Got shape {arr.shape}",
            )
        object.__setattr__(self, "values", arr)

    @classmethod
    def identity(cls, d: int, n: int) -> "OperatorMatrix":
        return cls(np.repeat(np.eye(d, dtype=np.complex128)[:, :, np.newaxis], n, axis=2))

    @classmethod
    def zeros(cls, d: int, n: int) -> "OperatorMatrix":
        return cls(np.zeros((d, d, n), dtype=np.complex128))

    @classmethod
    def from_fibers(cls, fibers: ComplexArray) -> "OperatorMatrix":
        """Build from an (n, d, d) stack of complex matrices."""
        return cls(np.moveaxis(np.asarray(fibers, dtype=np.complex128), 0, -1))

    @classmethod
    def diagonal(cls, diag: Sequence[SpectrumAlgebraElement]) -> "OperatorMatrix":
        d, n = len(diag), diag[0].n
        arr = np.zeros((d, d, n), dtype=np.complex128)
        for i, a in enumerate(diag):
            arr[i, i] = a.values
        return cls(arr)

    @property
    def d(self) -> int:
        return int(self.values.shape[0])

    @property
    def n(self) -> int:
        return int(self.values.shape[2])

    def entry(self, i: int, j: int) -> SpectrumAlgebraElement:
        return SpectrumAlgebraElement(self.values[i, j])

    def fibers(self) -> ComplexArray:
        """The (n, d, d) stack of complex matrices M(t)."""
        return np.moveaxis(self.values, -1, 0)

    def apply(self, v: ModuleVector) -> ModuleVector:
        check_same_shape(self, v)
        return ModuleVector(np.einsum("ijt,jt->it", self.values, v.values))

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        check_same_shape(self, other)
        return OperatorMatrix(np.einsum("ikt,kjt->ijt", self.values, other.values))

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        check_same_shape(self, other)
        return OperatorMatrix(self.values + other.values)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        check_same_shape(self, other)
        return OperatorMatrix(self.values - other.values)

    def __neg__(self) -> "OperatorMatrix":
        return OperatorMatrix(-self.values)

    def scale(self, alpha: SpectrumAlgebraElement) -> "OperatorMatrix":
        if alpha.n != self.n:
            raise DimensionError(
                message="Scalar and operator live on different spectra",
                details=f"Scalar n={alpha.n}, operator n={self.n}",
            )
        return OperatorMatrix(self.values * alpha.values[np.newaxis, np.newaxis, :])

    def transpose(self) -> "OperatorMatrix":
        """Transpose over A, without the entrywise star."""
        return OperatorMatrix(np.swapaxes(self.values, 0, 1))

    def entrywise_star(self) -> "OperatorMatrix":
        return OperatorMatrix(np.conj(self.values))

    def adjoint(self) -> "OperatorMatrix":
        return adjoint(self)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def allclose(self, other: "OperatorMatrix", atol: float = 1e-12) -> bool:
        check_same_shape(self, other)
        return bool(np.allclose(self.values, other.values, rtol=0.0, atol=atol))


def check_same_shape(*items: ModuleVector | OperatorMatrix) -> tuple[int, int]:
    """Return the shared (d, n), raising DimensionError on a mismatch."""
    shapes = {(item.d, item.n) for item in items}
    if len(shapes) != 1:
        raise DimensionError(
            message="Operands disagree on module rank or spectrum size",
            details=f"(d, n) pairs: {sorted(shapes)}",
        )
    return shapes.pop()


def basis_vector(i: int, d: int, n: int) -> ModuleVector:
    """The standard basis vector e_i (0-based)."""
    if not 0 <= i < d:
        raise DimensionError(message=f"Basis index {i} out of range for d={d}")
    arr = np.zeros((d, n), dtype=np.complex128)
    arr[i] = 1.0
    return ModuleVector(arr)


def inner_product(x: ModuleVector, y: ModuleVector) -> SpectrumAlgebraElement:
    """<x, y> = sum_i x_i y_i*, A-linear in x and conjugate A-linear in y."""
    check_same_shape(x, y)
    return SpectrumAlgebraElement(np.sum(x.values * np.conj(y.values), axis=0))


def theta(x: ModuleVector, y: ModuleVector) -> OperatorMatrix:
    """The rank-one operator xi -> <xi, y> x, with entries x_i y_j*."""
    check_same_shape(x, y)
    return OperatorMatrix(np.einsum("it,jt->ijt", x.values, np.conj(y.values)))


def adjoint(m: OperatorMatrix) -> OperatorMatrix:
    """Conjugate transpose over A."""
    return OperatorMatrix(np.conj(np.swapaxes(m.values, 0, 1)))


def is_coordinate_invertible(x: ModuleVector, tol: float = DEFAULT_TOL) -> bool:
    """True iff x != 0 and every coordinate <e_i, x> is zero or invertible."""
    classes = [classify_element(c, tol) for c in x.coords]
    if all(c is ElementClass.ZERO for c in classes):
        return False
    return ElementClass.NEITHER not in classes


def theta_left_factor(m: OperatorMatrix, y: ModuleVector, tol: float = DEFAULT_TOL) -> ModuleVector:
    """Read x off m = theta(x, y) through a basis vector e with <e, y> invertible.

    m e = <e, y> x, so for coordinate-invertible y the map x -> theta(x, y) is
    injective and theta(x, y) = 0 forces x = 0.

    Raises:
        ValidationError: If no coordinate of y is invertible.
    """
    check_same_shape(m, y)
    for i, coord in enumerate(y.coords):
        if classify_element(coord, tol) is ElementClass.INVERTIBLE:
            e = basis_vector(i, y.d, y.n)
            scalar = inner_product(e, y).values
            return ModuleVector(m.apply(e).values / scalar[np.newaxis, :])
    raise ValidationError(
        message="Vector has no invertible coordinate",
        details="theta(., y) is only injective for coordinate-invertible y",
    )


def finite_rank_expand(m: OperatorMatrix) -> list[tuple[ModuleVector, ModuleVector]]:
    """Pairs (M e_i, e_i) with M = sum_i theta(M e_i, e_i) exactly."""
    return [(ModuleVector(m.values[:, i, :]), basis_vector(i, m.d, m.n)) for i in range(m.d)]


def sum_thetas(pairs: Sequence[tuple[ModuleVector, ModuleVector]]) -> OperatorMatrix:
    if not pairs:
        raise DimensionError(message="Cannot sum an empty list of rank-one operators")
    total = theta(*pairs[0])
    for x, y in pairs[1:]:
        total = total + theta(x, y)
    return total


def pointwise_singular_values(m: OperatorMatrix) -> NDArray[np.float64]:
    """Singular values of every fiber, shape (n, d), descending per row."""
    return np.linalg.svd(m.fibers(), compute_uv=False)


def fiber_ranks(fibers: ComplexArray, tol: float = DEFAULT_TOL) -> list[int]:
    """Complex rank of every matrix in an (n, p, q) stack.

    A fiber is rank 0 when its largest singular value is below the zero
    threshold of the whole stack; otherwise singular values are counted
    against tol times the fiber's largest one.
    """
    sv = np.linalg.svd(fibers, compute_uv=False)
    zero_cut = threshold(float(sv.max(initial=0.0)), tol)
    ranks: list[int] = []
    for row in sv:
        top = float(row[0])
        if top <= zero_cut:
            ranks.append(0)
        else:
            ranks.append(int(np.count_nonzero(row > tol * top)))
    return ranks


def pointwise_rank(m: OperatorMatrix, tol: float = DEFAULT_TOL) -> list[int]:
    """Complex rank of M(t) at every spectrum point."""
    return fiber_ranks(m.fibers(), tol)


def pointwise_determinant(m: OperatorMatrix) -> SpectrumAlgebraElement:
    return SpectrumAlgebraElement(np.linalg.det(m.fibers()))


def is_pointwise_invertible(m: OperatorMatrix, tol: float = DEFAULT_TOL) -> bool:
    """Every fiber has smallest singular value above tol times max(1, its largest)."""
    sv = pointwise_singular_values(m)
    return bool(np.all(sv[:, -1] > tol * np.maximum(1.0, sv[:, 0])))


def operator_inverse(m: OperatorMatrix, tol: float = DEFAULT_TOL) -> OperatorMatrix:
    """Pointwise matrix inverse.

    Raises:
        NotInvertibleError: If some fiber is numerically singular.
    """
    sv = pointwise_singular_values(m)
    bad = np.flatnonzero(sv[:, -1] <= tol * np.maximum(1.0, sv[:, 0]))
    if bad.size:
        point = int(bad[0]) + 1
        raise NotInvertibleError(
            message=f"Operator is not invertible at spectrum point t={point}",
            details=f"Smallest singular value {sv[bad[0], -1]:.3e}, largest {sv[bad[0], 0]:.3e}",
            point=point,
        )
    return OperatorMatrix.from_fibers(np.linalg.inv(m.fibers()))
