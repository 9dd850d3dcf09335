"""The coefficient algebra A: a finite-spectrum commutative unital C*-algebra.

A is modelled in its Gelfand picture as C^n with pointwise operations. An
element is the function a(t) on the spectrum points t = 1..n; the star is
pointwise conjugation and the C*-norm is the max modulus.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.core.errors import DimensionError, NotInvertibleError, ValidationError

ComplexArray = NDArray[np.complex128]

DEFAULT_TOL = 1e-9


class AlgebraOp(StrEnum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    STAR = "star"
    NEG = "neg"


class ElementClass(StrEnum):
    """Three-way split that coordinate invertibility hinges on."""

    ZERO = "zero"
    INVERTIBLE = "invertible"
    NEITHER = "neither"


def frozen_array(values: ArrayLike) -> ComplexArray:
    """Copy into a read-only complex128 array."""
    arr = np.array(values, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


def threshold(scale: float, tol: float = DEFAULT_TOL) -> float:
    """Absolute cut-off used for every zero / invertible decision."""
    return tol * max(1.0, scale)


@dataclass(frozen=True, eq=False)
class SpectrumAlgebraElement:
    """An element a of A, stored as its values a(t) on the n spectrum points."""

    values: ComplexArray

    def __post_init__(self) -> None:
        arr = frozen_array(self.values)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise DimensionError(
                message="Algebra element must be a non-empty 1-D array of values",
                details=f"Got shape {arr.shape}",
            )
        object.__setattr__(self, "values", arr)

    @classmethod
    def unit(cls, n: int) -> "SpectrumAlgebraElement":
        return cls(np.ones(n, dtype=np.complex128))

    @classmethod
    def zero(cls, n: int) -> "SpectrumAlgebraElement":
        return cls(np.zeros(n, dtype=np.complex128))

    @classmethod
    def scalar(cls, z: complex, n: int) -> "SpectrumAlgebraElement":
        return cls(np.full(n, z, dtype=np.complex128))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def star(self) -> "SpectrumAlgebraElement":
        return SpectrumAlgebraElement(np.conj(self.values))

    def norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _other_values(self, other: "SpectrumAlgebraElement | complex") -> ComplexArray | complex:
        if isinstance(other, SpectrumAlgebraElement):
            check_same_spectrum(self, other)
            return other.values
        return complex(other)

    def __add__(self, other: "SpectrumAlgebraElement | complex") -> "SpectrumAlgebraElement":
        return SpectrumAlgebraElement(self.values + self._other_values(other))

    def __sub__(self, other: "SpectrumAlgebraElement | complex") -> "SpectrumAlgebraElement":
        return SpectrumAlgebraElement(self.values - self._other_values(other))

    def __mul__(self, other: "SpectrumAlgebraElement | complex") -> "SpectrumAlgebraElement":
        return SpectrumAlgebraElement(self.values * self._other_values(other))

    def __rmul__(self, other: complex) -> "SpectrumAlgebraElement":
        return SpectrumAlgebraElement(complex(other) * self.values)

    def __neg__(self) -> "SpectrumAlgebraElement":
        return SpectrumAlgebraElement(-self.values)

    def allclose(self, other: "SpectrumAlgebraElement", atol: float = 1e-12) -> bool:
        check_same_spectrum(self, other)
        return bool(np.allclose(self.values, other.values, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        return f"SpectrumAlgebraElement({self.values.tolist()})"


def check_same_spectrum(*elements: SpectrumAlgebraElement) -> int:
    """Return the shared spectrum size, raising DimensionError on a mismatch."""
    sizes = {e.n for e in elements}
    if len(sizes) != 1:
        raise DimensionError(
            message="Algebra elements live on different spectra",
            details=f"Spectrum sizes: {sorted(sizes)}",
        )
    return sizes.pop()


def arith(
    a: SpectrumAlgebraElement,
    b: SpectrumAlgebraElement | None,
    op: AlgebraOp,
) -> SpectrumAlgebraElement:
    """Pointwise arithmetic; `b` is ignored by the unary ops star and neg."""
    if op is AlgebraOp.STAR:
        return a.star()
    if op is AlgebraOp.NEG:
        return -a
    if b is None:
        raise ValidationError(message=f"Operation '{op}' needs two operands")
    match op:
        case AlgebraOp.ADD:
            return a + b
        case AlgebraOp.SUB:
            return a - b
        case AlgebraOp.MUL:
            return a * b
    raise ValidationError(message=f"Unknown algebra operation '{op}'")


def is_zero(a: SpectrumAlgebraElement, tol: float = DEFAULT_TOL) -> bool:
    return a.norm() <= threshold(a.norm(), tol)


def is_invertible(a: SpectrumAlgebraElement, tol: float = DEFAULT_TOL) -> bool:
    return float(np.min(np.abs(a.values))) > threshold(a.norm(), tol)


def classify_element(a: SpectrumAlgebraElement, tol: float = DEFAULT_TOL) -> ElementClass:
    if is_zero(a, tol):
        return ElementClass.ZERO
    if is_invertible(a, tol):
        return ElementClass.INVERTIBLE
    return ElementClass.NEITHER


def inverse(a: SpectrumAlgebraElement, tol: float = DEFAULT_TOL) -> SpectrumAlgebraElement:
    """Pointwise reciprocal.

    Raises:
        NotInvertibleError: If |a(t)| is below the threshold at some point t
            (reported 1-based).
    """
    cut = threshold(a.norm(), tol)
    small = np.flatnonzero(np.abs(a.values) <= cut)
    if small.size:
        point = int(small[0]) + 1
        raise NotInvertibleError(
            message=f"Algebra element is not invertible at spectrum point t={point}",
            details=f"|a(t)| = {abs(a.values[small[0]]):.3e} <= {cut:.3e}",
            point=point,
        )
    return SpectrumAlgebraElement(1.0 / a.values)


@dataclass(frozen=True, eq=False)
class AlgebraState:
    """A faithful state on A: strictly positive weights summing to one."""

    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] < 1:
            raise DimensionError(
                message="State weights must be a non-empty 1-D array",
                details=f"Got shape {w.shape}",
            )
        if np.any(w <= 0.0):
            raise ValidationError(
                message="State weights must be strictly positive",
                details=f"Weights: {w.tolist()}",
            )
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValidationError(
                message="State weights must sum to 1",
                details=f"Sum is {float(w.sum())!r}",
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n: int) -> "AlgebraState":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "AlgebraState":
        return cls(np.asarray(weights, dtype=np.float64))

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    def apply(self, a: SpectrumAlgebraElement) -> complex:
        if a.n != self.n:
            raise DimensionError(
                message="State and element live on different spectra",
                details=f"State n={self.n}, element n={a.n}",
            )
        return complex(np.dot(self.weights, a.values))
