"""Rank-one preserving module maps on F(H_A) and their canonical forms.

A preserver is given either structurally, T -> L T R or T -> L T^t R, or as a
black box: the table of images of the generators theta(e_i, e_j). By
A-linearity the table determines the map on every theta(x, f) and, through
the exact finite-rank expansion, on every operator.
"""

import logging
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from app.core.errors import (
    DimensionError,
    EquationViolatedError,
    GaugeFailureError,
    InconsistentTypeError,
    KernelViolationError,
    NoGlobalScalarError,
    NotPointwiseProportionalError,
    NotProportionalError,
    NotRankDecreasingError,
    NotRankOnePreservingError,
    NoWitnessError,
    ValidationError,
)
from app.domain.algebra import (
    DEFAULT_TOL,
    ComplexArray,
    ElementClass,
    SpectrumAlgebraElement,
    classify_element,
    inverse,
    is_invertible,
    threshold,
)
from app.domain.module import (
    ModuleVector,
    OperatorMatrix,
    adjoint,
    basis_vector,
    check_same_shape,
    fiber_ranks,
    finite_rank_expand,
    inner_product,
    is_coordinate_invertible,
    is_pointwise_invertible,
    pointwise_rank,
    theta,
)
from app.domain.sampling import derive_rng, random_ci_vector

logger = logging.getLogger(__name__)

# Random coordinate-invertible vectors added to the standard basis when probing a black box
TYPE_PROBE_SAMPLES = 3


class PreserverKind(StrEnum):
    LINEAR = "linear"
    TRANSPOSE = "transpose"


class PreserverType(StrEnum):
    ROW_TYPE = "row_type"
    COLUMN_TYPE = "column_type"


class TrichotomyCase(StrEnum):
    G1_MULTIPLE_OF_G2 = "g1_multiple_of_g2"
    G2_MULTIPLE_OF_G1 = "g2_multiple_of_g1"
    X_FACTORS = "x_factors"


@dataclass(frozen=True, eq=False)
class StructuredPreserver:
    """T -> left . T . right (linear) or T -> left . T^t . right (transpose)."""

    kind: PreserverKind
    left: OperatorMatrix
    right: OperatorMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PreserverKind(self.kind))
        check_same_shape(self.left, self.right)

    @classmethod
    def from_conjugate_linear(cls, left: OperatorMatrix, right: OperatorMatrix) -> "StructuredPreserver":
        """Canonical form for T -> A' T* B' with A' = left o star and B' = right o star.

        Entrywise star(T*) = T^t, so the map equals T -> left . T^t . star(right).
        """
        return cls(PreserverKind.TRANSPOSE, left, right.entrywise_star())

    @property
    def d(self) -> int:
        return self.left.d

    @property
    def n(self) -> int:
        return self.left.n

    def __call__(self, t: OperatorMatrix) -> OperatorMatrix:
        return apply_structured(self, t)


@dataclass(frozen=True, eq=False)
class BlackBoxPreserver:
    """images[i][j] is the image of theta(e_i, e_j)."""

    images: tuple[tuple[OperatorMatrix, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(row) for row in self.images)
        d = len(rows)
        if d == 0 or any(len(row) != d for row in rows):
            raise DimensionError(
                message="Generator table must be a non-empty d x d array of operators",
                details=f"Row lengths: {[len(row) for row in rows]}",
            )
        check_same_shape(*(img for row in rows for img in row))
        if rows[0][0].d != d:
            raise DimensionError(
                message="Generator table size does not match operator size",
                details=f"Table is {d} x {d}, operators are {rows[0][0].d} x {rows[0][0].d}",
            )
        object.__setattr__(self, "images", rows)

    @property
    def d(self) -> int:
        return len(self.images)

    @property
    def n(self) -> int:
        return self.images[0][0].n

    @cached_property
    def table(self) -> ComplexArray:
        """All images as one (i, j, a, b, t) array."""
        return np.stack([np.stack([img.values for img in row]) for row in self.images])

    def image_of_theta(self, x: ModuleVector, f: ModuleVector) -> OperatorMatrix:
        """Phi(theta(x, f)) = sum_ij x_i f_j* Phi(theta(e_i, e_j))."""
        check_same_shape(x, f, self.images[0][0])
        return OperatorMatrix(np.einsum("it,jt,ijabt->abt", x.values, np.conj(f.values), self.table))


@dataclass(frozen=True, eq=False)
class TrichotomyWitness:
    """Coefficients satisfying one case of the rank-one sum trichotomy.

    g1_multiple_of_g2: g1 = coefficients[0] . g2
    g2_multiple_of_g1: g2 = coefficients[0] . g1
    x_factors:         x1 = coefficients[0] . x3 and x2 = coefficients[1] . x3
    """

    case: TrichotomyCase
    coefficients: tuple[SpectrumAlgebraElement, ...]
    invertible_flag: str | None = None


@dataclass(frozen=True)
class SurjectivityReport:
    surjective: bool
    left_invertible: bool
    right_invertible: bool


# Pointwise proportionality


def _pointwise_ratio(
    base: NDArray[np.complex128],
    target: NDArray[np.complex128],
    tol: float,
) -> tuple[NDArray[np.complex128], int | None, str]:
    """Solve target(t) = r(t) . base(t) in C^d at every t; r(t) = 0 where base(t) = 0.

    Returns the ratio values, the first failing point (0-based) or None, and a
    reason for the failure.
    """
    cut = threshold(max(float(np.max(np.abs(base))), float(np.max(np.abs(target)))), tol)
    base_sq = np.sum(np.abs(base) ** 2, axis=0)
    base_norm = np.sqrt(base_sq)
    support = base_norm > cut
    ratio = np.zeros(base.shape[1], dtype=np.complex128)
    ratio[support] = np.sum(target[:, support] * np.conj(base[:, support]), axis=0) / base_sq[support]
    residual = np.linalg.norm(target - ratio[np.newaxis, :] * base, axis=0)
    bad = np.flatnonzero(residual > cut)
    if bad.size == 0:
        return ratio, None, ""
    t = int(bad[0])
    if not support[t]:
        return ratio, t, f"reference vanishes at t={t + 1} but target has norm {residual[t]:.3e}"
    return ratio, t, f"residual {residual[t]:.3e} exceeds {cut:.3e} at t={t + 1}"


def factor_functional(
    phi: ModuleVector,
    sigma: ModuleVector,
    tol: float = DEFAULT_TOL,
) -> SpectrumAlgebraElement:
    """Find b with sigma = phi . b for A-linear functionals given by their coefficient covectors.

    b(t) is set to 0 wherever phi(t) = 0.

    Raises:
        KernelViolationError: If sigma does not vanish on the kernel of phi at some point.
    """
    check_same_shape(phi, sigma)
    ratio, bad, reason = _pointwise_ratio(phi.values, sigma.values, tol)
    if bad is not None:
        raise KernelViolationError(
            message=f"sigma is not a multiple of phi at spectrum point t={bad + 1}",
            details=reason,
        )
    return SpectrumAlgebraElement(ratio)


def proportionality_factor(
    g1: ModuleVector,
    g2: ModuleVector,
    tol: float = DEFAULT_TOL,
) -> SpectrumAlgebraElement:
    """Find a with g2 = a . g1; a(t) = 0 wherever g1(t) = 0.

    Raises:
        NotProportionalError: If g2(t) is not a complex multiple of g1(t) at some t.
    """
    check_same_shape(g1, g2)
    ratio, bad, reason = _pointwise_ratio(g1.values, g2.values, tol)
    if bad is not None:
        raise NotProportionalError(
            message=f"g2 is not a multiple of g1 at spectrum point t={bad + 1}",
            details=reason,
        )
    return SpectrumAlgebraElement(ratio)


# Rank-one sum trichotomy


def _basis_recipe(
    g1: ModuleVector,
    g2: ModuleVector,
    g3: ModuleVector,
    tol: float,
) -> tuple[SpectrumAlgebraElement, SpectrumAlgebraElement] | None:
    """Coefficients from a basis vector seen by one g but not the other, if there is one."""
    classes1 = [classify_element(c, tol) for c in g1.coords]
    classes2 = [classify_element(c, tol) for c in g2.coords]
    d, n = g1.d, g1.n

    def solve(ga: ModuleVector, gb: ModuleVector, k: int) -> tuple[SpectrumAlgebraElement, SpectrumAlgebraElement]:
        e = basis_vector(k, d, n)
        beta_a = inverse(inner_product(e, ga), tol) * inner_product(e, g3)
        rest = g3 - ga.scale(beta_a.star())
        classes_b = [classify_element(c, tol) for c in gb.coords]
        k_b = classes_b.index(ElementClass.INVERTIBLE)
        e_b = basis_vector(k_b, d, n)
        beta_b = inverse(inner_product(e_b, gb), tol) * inner_product(e_b, rest)
        return beta_a, beta_b

    for k in range(d):
        if classes2[k] is ElementClass.ZERO and classes1[k] is ElementClass.INVERTIBLE:
            return solve(g1, g2, k)
    for k in range(d):
        if classes1[k] is ElementClass.ZERO and classes2[k] is ElementClass.INVERTIBLE:
            beta2, beta1 = solve(g2, g1, k)
            return beta1, beta2
    return None


def _complement_recipe(
    g1: ModuleVector,
    g2: ModuleVector,
    g3: ModuleVector,
    tol: float,
) -> tuple[SpectrumAlgebraElement, SpectrumAlgebraElement]:
    """Coefficients from xi = g_a minus its pointwise projection on g_b, so <xi, g_b> = 0."""

    def coefficient(ga: ModuleVector, gb: ModuleVector) -> SpectrumAlgebraElement:
        gb_sq = inner_product(gb, gb).values.real
        safe = np.where(gb_sq > 0.0, gb_sq, 1.0)
        projection = inner_product(ga, gb).values / safe
        xi = ModuleVector(ga.values - projection[np.newaxis, :] * gb.values)
        pivot = inner_product(xi, ga).values
        cut = threshold(float(np.max(np.abs(pivot))), tol)
        beta = np.zeros(ga.n, dtype=np.complex128)
        ok = np.abs(pivot) > cut
        beta[ok] = inner_product(xi, g3).values[ok] / pivot[ok]
        return SpectrumAlgebraElement(beta)

    return coefficient(g1, g2), coefficient(g2, g1)


def rank_one_sum_trichotomy(
    x1: ModuleVector,
    g1: ModuleVector,
    x2: ModuleVector,
    g2: ModuleVector,
    x3: ModuleVector,
    g3: ModuleVector,
    tol: float = DEFAULT_TOL,
) -> TrichotomyWitness:
    """Witness for theta(x1, g1) + theta(x2, g2) = theta(x3, g3) with g1, g2 coordinate invertible.

    Cases are tried in order: g1 multiple of g2, g2 multiple of g1, then x1 and
    x2 as multiples of x3. For the last case `invertible_flag` names the first
    coefficient ("beta1" or "beta2") that is invertible in A, or is None.

    Raises:
        ValidationError: If g1 or g2 is not coordinate invertible.
        EquationViolatedError: If the sum identity does not hold.
        NoWitnessError: If the cases mix across spectrum points so none holds globally.
    """
    check_same_shape(x1, g1, x2, g2, x3, g3)
    for name, g in (("g1", g1), ("g2", g2)):
        if not is_coordinate_invertible(g, tol):
            raise ValidationError(message=f"{name} must be coordinate invertible")

    lhs = theta(x1, g1) + theta(x2, g2)
    rhs = theta(x3, g3)
    deviation = (lhs - rhs).max_abs()
    cut = threshold(max(lhs.max_abs(), rhs.max_abs()), tol)
    if deviation > cut:
        raise EquationViolatedError(
            message="theta(x1, g1) + theta(x2, g2) != theta(x3, g3)",
            details=f"Max entrywise deviation {deviation:.3e} exceeds {cut:.3e}",
        )

    try:
        alpha1 = proportionality_factor(g2, g1, tol)
        return TrichotomyWitness(TrichotomyCase.G1_MULTIPLE_OF_G2, (alpha1,))
    except NotProportionalError:
        pass
    try:
        alpha2 = proportionality_factor(g1, g2, tol)
        return TrichotomyWitness(TrichotomyCase.G2_MULTIPLE_OF_G1, (alpha2,))
    except NotProportionalError:
        pass

    betas = _basis_recipe(g1, g2, g3, tol)
    if betas is None:
        betas = _complement_recipe(g1, g2, g3, tol)
    beta1, beta2 = betas

    x_cut = threshold(max(x1.max_abs(), x2.max_abs(), x3.max_abs()), tol)
    for name, x, beta in (("x1", x1, beta1), ("x2", x2, beta2)):
        gap = np.linalg.norm(x.values - beta.values[np.newaxis, :] * x3.values, axis=0)
        bad = np.flatnonzero(gap > x_cut)
        if bad.size:
            raise NoWitnessError(
                message="No trichotomy case holds on the whole spectrum",
                details=f"{name} is not a multiple of x3 at t={int(bad[0]) + 1} and g1, g2 are not proportional",
            )

    flag = None
    if is_invertible(beta1, tol):
        flag = "beta1"
    elif is_invertible(beta2, tol):
        flag = "beta2"
    return TrichotomyWitness(TrichotomyCase.X_FACTORS, (beta1, beta2), flag)


def witness_residual(
    witness: TrichotomyWitness,
    x1: ModuleVector,
    g1: ModuleVector,
    x2: ModuleVector,
    g2: ModuleVector,
    x3: ModuleVector,
) -> float:
    """Max deviation of the witness' defining equation."""
    match witness.case:
        case TrichotomyCase.G1_MULTIPLE_OF_G2:
            return (g1 - g2.scale(witness.coefficients[0])).max_abs()
        case TrichotomyCase.G2_MULTIPLE_OF_G1:
            return (g2 - g1.scale(witness.coefficients[0])).max_abs()
        case TrichotomyCase.X_FACTORS:
            beta1, beta2 = witness.coefficients
            return max((x1 - x3.scale(beta1)).max_abs(), (x2 - x3.scale(beta2)).max_abs())


# Structured preservers


def apply_structured(p: StructuredPreserver, t: OperatorMatrix) -> OperatorMatrix:
    check_same_shape(p.left, t)
    if p.kind is PreserverKind.LINEAR:
        return p.left @ t @ p.right
    return p.left @ t.transpose() @ p.right


def black_box_from_structured(p: StructuredPreserver) -> BlackBoxPreserver:
    """Generator table images[i][j] = p(theta(e_i, e_j))."""
    d, n = p.d, p.n
    basis = [basis_vector(i, d, n) for i in range(d)]
    return BlackBoxPreserver(tuple(tuple(p(theta(ei, ej)) for ej in basis) for ei in basis))


def extend_to_operator(phi: BlackBoxPreserver, t: OperatorMatrix) -> OperatorMatrix:
    """Phi(T) = sum_i Phi(theta(T e_i, e_i)), the exact finite-rank extension."""
    pairs = finite_rank_expand(t)
    total = phi.image_of_theta(*pairs[0])
    for x, f in pairs[1:]:
        total = total + phi.image_of_theta(x, f)
    return total


def reconstruction_residual(phi: BlackBoxPreserver, p: StructuredPreserver) -> float:
    """Max entrywise deviation between the tables of p and phi, relative to max(1, largest entry)."""
    rebuilt = black_box_from_structured(p).table
    scale = max(1.0, float(np.max(np.abs(phi.table))))
    return float(np.max(np.abs(rebuilt - phi.table))) / scale


def surjectivity_invertibility_check(p: StructuredPreserver, tol: float = DEFAULT_TOL) -> SurjectivityReport:
    """At finite rank p is surjective exactly when both factors are pointwise invertible."""
    left_ok = is_pointwise_invertible(p.left, tol)
    right_ok = is_pointwise_invertible(p.right, tol)
    return SurjectivityReport(surjective=left_ok and right_ok, left_invertible=left_ok, right_invertible=right_ok)


# Type detection and classification


def _probe_vectors(d: int, n: int, seed: int, label: str) -> list[ModuleVector]:
    rng = derive_rng(seed, "probe", label, d, n)
    return [basis_vector(i, d, n) for i in range(d)] + [random_ci_vector(rng, d, n) for _ in range(TYPE_PROBE_SAMPLES)]


def _at_most_rank_one(fibers: ComplexArray, tol: float) -> bool:
    return max(fiber_ranks(fibers, tol)) <= 1


def detect_type(phi: BlackBoxPreserver, tol: float = DEFAULT_TOL, seed: int = 0) -> PreserverType:
    """Decide whether images of theta(x, .) share a left factor (row type) or a right factor (column type).

    When both hold for every probe (e.g. d = 1) the map is reported as row type.

    Raises:
        NotRankDecreasingError: If some probed image has pointwise rank >= 2.
        InconsistentTypeError: If neither factor is shared for every probe.
    """
    d, n = phi.d, phi.n
    xs = _probe_vectors(d, n, seed, "x")
    fs = _probe_vectors(d, n, seed, "f")
    row_type, column_type = True, True
    for xi, x in enumerate(xs):
        images = [phi.image_of_theta(x, f) for f in fs]
        for fi, img in enumerate(images):
            ranks = pointwise_rank(img, tol)
            if max(ranks) > 1:
                t = int(np.argmax(ranks))
                raise NotRankDecreasingError(
                    message=f"Image of a rank-one generator has rank {ranks[t]} at spectrum point t={t + 1}",
                    details=f"Probe x #{xi}, f #{fi}",
                )
        fibers = [img.fibers() for img in images]
        shares_left = _at_most_rank_one(np.concatenate(fibers, axis=2), tol)
        shares_right = _at_most_rank_one(np.concatenate(fibers, axis=1), tol)
        row_type = row_type and shares_left
        column_type = column_type and shares_right
        if not (row_type or column_type):
            raise InconsistentTypeError(
                message="Images share neither a common left nor a common right factor",
                details=f"Probe x #{xi} breaks the remaining type",
            )
    detected = PreserverType.ROW_TYPE if row_type else PreserverType.COLUMN_TYPE
    logger.debug("Detected %s for d=%d, n=%d (row=%s, column=%s)", detected, d, n, row_type, column_type)
    return detected


def extract_global_scalar(
    map_a: OperatorMatrix,
    map_b: OperatorMatrix,
    tol: float = DEFAULT_TOL,
) -> SpectrumAlgebraElement:
    """Find lambda with map_b = lambda . map_a from per-basis-vector proportionality factors.

    Raises:
        NotPointwiseProportionalError: If map_b(e_i) is not a multiple of map_a(e_i).
        NoGlobalScalarError: If the factors disagree where both images are nonzero.
    """
    d, n = check_same_shape(map_a, map_b)
    cut = threshold(max(map_a.max_abs(), map_b.max_abs()), tol)
    lam = np.zeros(n, dtype=np.complex128)
    assigned = np.zeros(n, dtype=bool)
    owner = np.full(n, -1)
    for i in range(d):
        e = basis_vector(i, d, n)
        a_i, b_i = map_a.apply(e), map_b.apply(e)
        try:
            lam_i = proportionality_factor(a_i, b_i, tol).values
        except NotProportionalError as exc:
            raise NotPointwiseProportionalError(
                message=f"map_b(e_{i + 1}) is not a multiple of map_a(e_{i + 1})",
                details=exc.details,
            ) from exc
        support = np.linalg.norm(a_i.values, axis=0) > cut
        for t in np.flatnonzero(support):
            if not assigned[t]:
                lam[t], assigned[t], owner[t] = lam_i[t], True, i
            elif abs(lam[t] - lam_i[t]) > threshold(abs(lam[t]), tol):
                raise NoGlobalScalarError(
                    message=f"Proportionality factors disagree at spectrum point t={t + 1}",
                    details=f"e_{owner[t] + 1} gives {lam[t]:.6g}, e_{i + 1} gives {lam_i[t]:.6g}",
                )
    return SpectrumAlgebraElement(lam)


def _factor_generator_table(table: ComplexArray) -> tuple[ComplexArray, ComplexArray]:
    """Split table[i, j] = l_i (x) r_j pointwise; returns (l, r) as (i, a, t) and (j, b, t) arrays.

    Gauge: at each t the left factor of the largest generator image has its
    first coordinate of largest modulus equal to 1.
    """
    d, n = table.shape[0], table.shape[-1]
    lefts = np.zeros((d, d, n), dtype=np.complex128)
    rights = np.zeros((d, d, n), dtype=np.complex128)
    for t in range(n):
        fib = table[..., t]
        norms = np.linalg.norm(fib, axis=(2, 3))
        i0, j0 = np.unravel_index(int(np.argmax(norms)), norms.shape)
        u, s, vh = np.linalg.svd(fib[i0, j0])
        ref_left = u[:, 0] * s[0]
        gauge = ref_left[int(np.argmax(np.abs(ref_left)))]
        ref_left = ref_left / gauge
        rows = np.einsum("a,jab->jb", np.conj(ref_left), fib[i0]) / np.vdot(ref_left, ref_left)
        ref_right = rows[j0]
        cols = np.einsum("iab,b->ia", fib[:, j0], np.conj(ref_right)) / np.vdot(ref_right, ref_right)
        lefts[..., t] = cols
        rights[..., t] = rows
    return lefts, rights


def classify(phi: BlackBoxPreserver, tol: float = DEFAULT_TOL, seed: int = 0) -> StructuredPreserver:
    """Recover the canonical form of a rank-one preserver from its generator table.

    Row type gives kind=linear, column type kind=transpose. The factors are
    recovered pointwise up to the gauge fixed in `_factor_generator_table`;
    right is the star-transpose of the recovered C.

    Raises:
        NotRankOnePreservingError: If a generator image is zero or of rank >= 2 somewhere.
        InconsistentTypeError: If the type cannot be decided consistently.
        GaugeFailureError: If the recovered factors do not reproduce the table.
    """
    d = phi.d
    for i in range(d):
        for j in range(d):
            ranks = pointwise_rank(phi.images[i][j], tol)
            bad = [t for t, r in enumerate(ranks) if r != 1]
            if bad:
                raise NotRankOnePreservingError(
                    message=f"Image of theta(e_{i + 1}, e_{j + 1}) has rank {ranks[bad[0]]} at t={bad[0] + 1}",
                    details="Rank-one preservers send every generator to an operator of rank exactly 1",
                )
    try:
        ptype = detect_type(phi, tol, seed)
    except NotRankDecreasingError as exc:
        raise NotRankOnePreservingError(message=exc.message, details=exc.details) from exc

    kind = PreserverKind.LINEAR if ptype is PreserverType.ROW_TYPE else PreserverKind.TRANSPOSE
    table = phi.table if kind is PreserverKind.LINEAR else np.swapaxes(phi.table, 0, 1)
    lefts, rights = _factor_generator_table(table)

    left = OperatorMatrix(np.swapaxes(lefts, 0, 1))
    recovered_c = OperatorMatrix(np.conj(np.swapaxes(rights, 0, 1)))
    result = StructuredPreserver(kind, left, adjoint(recovered_c))

    residual = reconstruction_residual(phi, result)
    if residual > tol:
        raise GaugeFailureError(
            message="Recovered factors do not reproduce the generator table",
            details=f"Relative residual {residual:.3e} exceeds {tol:.3e}",
        )
    logger.info("Classified preserver as %s (d=%d, n=%d, residual=%.3e)", kind, d, phi.n, residual)
    return result
