"""Operator-valued semicircular variables over B = L(H_A^(d)).

The variable X is never materialized. Its distribution is the moment
function E(X b_1 X ... b_{m-1} X), fixed by the cumulant conditions
k^(2)(X (x) bX) = cov(b) and all other cumulants zero. Words mixing X with
xi = X c reduce to pure-X words by folding c into the next coefficient.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from app.core.errors import DimensionError, OrderLimitError, ValidationError
from app.domain.algebra import DEFAULT_TOL, AlgebraState
from app.domain.module import OperatorMatrix, check_same_shape, operator_inverse
from app.domain.noncrossing import NCKind, NonCrossingPartition, enumerate_nc
from app.domain.sampling import derive_rng, random_operator

logger = logging.getLogger(__name__)

MAX_MOMENT_ORDER = 12
MAX_CUMULANT_ORDER = 8
MAX_CONJUGATE_ORDER = 6
DEFAULT_BATCH = 20

BlockValue = Callable[[tuple[OperatorMatrix, ...]], OperatorMatrix]


class Letter(StrEnum):
    X = "X"
    XI = "XI"


@dataclass(frozen=True, eq=False)
class SandwichCovariance:
    """b -> left . b . right."""

    left: OperatorMatrix
    right: OperatorMatrix

    def __post_init__(self) -> None:
        check_same_shape(self.left, self.right)

    @property
    def d(self) -> int:
        return self.left.d

    @property
    def n(self) -> int:
        return self.left.n

    def apply(self, b: OperatorMatrix) -> OperatorMatrix:
        return self.left @ b @ self.right


@dataclass(frozen=True, eq=False)
class OperatorTrace:
    """tau(M) = (1/d) sum_i state(M_ii)."""

    state: AlgebraState

    @classmethod
    def uniform(cls, n: int) -> "OperatorTrace":
        return cls(AlgebraState.uniform(n))

    def apply(self, m: OperatorMatrix) -> complex:
        if m.n != self.state.n:
            raise DimensionError(
                message="Trace state and operator live on different spectra",
                details=f"State n={self.state.n}, operator n={m.n}",
            )
        diagonal = np.einsum("iit->t", m.values) / m.d
        return complex(np.dot(self.state.weights, diagonal))


@dataclass(frozen=True, eq=False)
class MomentWord:
    """letters[0] coefficients[0] letters[1] ... letters[-1] right_cap."""

    letters: tuple[Letter, ...]
    coefficients: tuple[OperatorMatrix, ...] = ()
    right_cap: OperatorMatrix | None = None

    def __post_init__(self) -> None:
        letters = tuple(Letter(letter) for letter in self.letters)
        if not letters:
            raise ValidationError(message="A moment word needs at least one letter")
        if len(self.coefficients) != len(letters) - 1:
            raise DimensionError(
                message="A word with m letters needs m - 1 coefficients",
                details=f"Got {len(letters)} letters and {len(self.coefficients)} coefficients",
            )
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "coefficients", tuple(self.coefficients))

    @classmethod
    def pure(cls, coefficients: Sequence[OperatorMatrix]) -> "MomentWord":
        return cls(tuple(Letter.X for _ in range(len(coefficients) + 1)), tuple(coefficients))

    @property
    def order(self) -> int:
        return len(self.letters)


def _is_exact_zero(m: OperatorMatrix) -> bool:
    return not np.any(m.values)


def _check_operands(cov: SandwichCovariance, coeffs: Sequence[OperatorMatrix]) -> None:
    if coeffs:
        check_same_shape(cov.left, *coeffs)


# Nested interval-block evaluation


def evaluate_nested(
    partition: NonCrossingPartition,
    coeffs: Sequence[OperatorMatrix],
    block_value: BlockValue,
) -> OperatorMatrix:
    """Evaluate X c_1 X ... c_{m-1} X along a non-crossing partition.

    Interval blocks are collapsed one at a time, singletons first. A block's
    value is block_value(coefficients between its letters); it is then merged
    with the neighbouring coefficients into one coefficient, or into the left
    or right cap when the block sits at an end of the remaining word.
    """
    m = partition.size
    if len(coeffs) != m - 1:
        raise DimensionError(
            message="Partition size does not match the word",
            details=f"Partition of {m} letters, {len(coeffs)} coefficients",
        )
    owner = {point - 1: index for index, block in enumerate(partition.blocks) for point in block}
    order = sorted(range(len(partition.blocks)), key=lambda index: len(partition.blocks[index]) > 1)
    pending = set(order)
    alive = list(range(m))
    gaps: list[OperatorMatrix] = list(coeffs)
    left_cap: OperatorMatrix | None = None
    right_cap: OperatorMatrix | None = None

    while pending:
        for index in order:
            if index not in pending:
                continue
            positions = [p for p, letter in enumerate(alive) if owner[letter] == index]
            if positions[-1] - positions[0] == len(positions) - 1:
                break
        else:
            raise ValidationError(message="Partition has no interval block left to collapse")
        pending.discard(index)
        start, stop = positions[0], positions[-1] + 1
        value = block_value(tuple(gaps[start : stop - 1]))
        if _is_exact_zero(value):
            return OperatorMatrix.zeros(value.d, value.n)

        if start == 0 and stop == len(alive):
            result = value if left_cap is None else left_cap @ value
            return result if right_cap is None else result @ right_cap
        if start == 0:
            head = value if left_cap is None else left_cap @ value
            left_cap = head @ gaps[stop - 1]
            alive, gaps = alive[stop:], gaps[stop:]
        elif stop == len(alive):
            tail = value if right_cap is None else value @ right_cap
            right_cap = gaps[start - 1] @ tail
            alive, gaps = alive[:start], gaps[: start - 1]
        else:
            merged = gaps[start - 1] @ value @ gaps[stop - 1]
            alive = alive[:start] + alive[stop:]
            gaps = gaps[: start - 1] + [merged] + gaps[stop:]
    raise ValidationError(message="Partition collapsed without producing a value")


# Moments


def semicircular_moment(cov: SandwichCovariance, coeffs: Sequence[OperatorMatrix]) -> OperatorMatrix:
    """E(X b_1 X ... b_{m-1} X) with m = len(coeffs) + 1, by first-pairing recursion.

    The first X pairs with the k-th; what lies strictly between them collapses
    through cov, what follows is a shorter moment. Sub-moments are memoized
    by their letter range.

    Raises:
        OrderLimitError: If m exceeds MAX_MOMENT_ORDER.
        DimensionError: If the operands disagree on (d, n).
    """
    m = len(coeffs) + 1
    if m > MAX_MOMENT_ORDER:
        raise OrderLimitError(message=f"Moments are limited to order {MAX_MOMENT_ORDER}", details=f"Got m={m}")
    _check_operands(cov, coeffs)
    d, n = cov.d, cov.n
    zero = OperatorMatrix.zeros(d, n)
    memo: dict[tuple[int, int], OperatorMatrix | None] = {}

    def moment(first: int, last: int) -> OperatorMatrix | None:
        # None stands for the empty word, whose moment is the identity
        if first > last:
            return None
        if (last - first) % 2 == 0:
            return zero
        if (first, last) in memo:
            return memo[(first, last)]
        total = zero
        for partner in range(first + 1, last + 1, 2):
            inner = coeffs[first]
            if partner > first + 1:
                between = moment(first + 1, partner - 1)
                assert between is not None
                inner = inner @ between @ coeffs[partner - 1]
            term = cov.apply(inner)
            if partner < last:
                after = moment(partner + 1, last)
                assert after is not None
                term = term @ coeffs[partner] @ after
            total = total + term
        memo[(first, last)] = total
        return total

    result = moment(0, m - 1)
    assert result is not None
    return result


def moment_pairing_oracle(cov: SandwichCovariance, coeffs: Sequence[OperatorMatrix]) -> OperatorMatrix:
    """The same moment as a sum over non-crossing pairings, each evaluated by nested collapse."""
    m = len(coeffs) + 1
    if m > MAX_MOMENT_ORDER:
        raise OrderLimitError(message=f"Moments are limited to order {MAX_MOMENT_ORDER}", details=f"Got m={m}")
    _check_operands(cov, coeffs)
    total = OperatorMatrix.zeros(cov.d, cov.n)
    for pairing in enumerate_nc(NCKind.PAIRINGS, m):
        total = total + evaluate_nested(pairing, coeffs, lambda inner: cov.apply(inner[0]))
    return total


def fold_word(word: MomentWord, c: OperatorMatrix) -> tuple[tuple[OperatorMatrix, ...], OperatorMatrix | None]:
    """Rewrite every xi = X c as X, pushing c into the following coefficient or the right cap."""
    coeffs = list(word.coefficients)
    right_cap = word.right_cap
    for position, letter in enumerate(word.letters):
        if letter is not Letter.XI:
            continue
        if position < len(coeffs):
            coeffs[position] = c @ coeffs[position]
        else:
            right_cap = c if right_cap is None else c @ right_cap
    return tuple(coeffs), right_cap


def joint_moment(word: MomentWord, cov: SandwichCovariance, c: OperatorMatrix) -> OperatorMatrix:
    check_same_shape(cov.left, c)
    coeffs, right_cap = fold_word(word, c)
    value = semicircular_moment(cov, coeffs)
    return value if right_cap is None else value @ right_cap


# Cumulants


class _CumulantEngine:
    """Pure-X cumulants k_m(X, c_1 X, ..., c_{m-1} X) from moments, memoized by coefficient bytes."""

    def __init__(self, cov: SandwichCovariance) -> None:
        self.cov = cov
        self._memo: dict[tuple[bytes, ...], OperatorMatrix] = {}

    def __call__(self, coeffs: tuple[OperatorMatrix, ...]) -> OperatorMatrix:
        key = tuple(c.values.tobytes() for c in coeffs)
        if key in self._memo:
            return self._memo[key]
        if any(_is_exact_zero(c) for c in coeffs):
            value = OperatorMatrix.zeros(self.cov.d, self.cov.n)
        else:
            value = semicircular_moment(self.cov, coeffs)
            for partition in enumerate_nc(NCKind.PARTITIONS, len(coeffs) + 1):
                if len(partition.blocks) == 1:
                    continue
                value = value - evaluate_nested(partition, coeffs, self)
        self._memo[key] = value
        return value


def cumulant(word: MomentWord, cov: SandwichCovariance, c: OperatorMatrix) -> OperatorMatrix:
    """k_m of a word by moment-cumulant inversion over non-crossing partitions.

    Raises:
        OrderLimitError: If the word has more than MAX_CUMULANT_ORDER letters.
        DimensionError: If the operands disagree on (d, n).
    """
    if word.order > MAX_CUMULANT_ORDER:
        raise OrderLimitError(
            message=f"Cumulants are limited to {MAX_CUMULANT_ORDER} letters",
            details=f"Got a word with {word.order} letters",
        )
    check_same_shape(cov.left, c)
    coeffs, right_cap = fold_word(word, c)
    _check_operands(cov, coeffs)
    value = _CumulantEngine(cov)(coeffs)
    return value if right_cap is None else value @ right_cap


# Conjugate variable and Fisher information


@dataclass(frozen=True, eq=False)
class ConjugateVariableReport:
    """Deviation of each defining condition of the conjugate variable xi = X c.

    Keys are "k1", "k2", then "k3" .. "k<max_order>". Deviations are scaled by
    max(1, size of the value they are compared with).
    """

    c: OperatorMatrix
    eta: SandwichCovariance
    max_order: int
    deviations: dict[str, float] = field(default_factory=dict)

    def passed(self, tol: float) -> bool:
        return all(value <= tol for value in self.deviations.values())

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)


@dataclass(frozen=True)
class FisherReport:
    numeric: complex
    closed_form: complex
    max_order_checked: int = 0
    condition_deviations: dict[str, float] = field(default_factory=dict)

    @property
    def deviation(self) -> float:
        return abs(self.numeric - self.closed_form)


def conjugate_data(
    cov_phi: SandwichCovariance,
    tol: float = DEFAULT_TOL,
) -> tuple[OperatorMatrix, SandwichCovariance]:
    """c = A^-1 B^-1 and eta = (B^-1, B) for cov_phi = (A, B)."""
    a_inv = operator_inverse(cov_phi.left, tol)
    b_inv = operator_inverse(cov_phi.right, tol)
    return a_inv @ b_inv, SandwichCovariance(b_inv, cov_phi.right)


def _scaled(diff: OperatorMatrix, reference: OperatorMatrix) -> float:
    return diff.max_abs() / max(1.0, reference.max_abs())


def verify_conjugate_variable(
    cov_phi: SandwichCovariance,
    tau: OperatorTrace,
    max_order: int,
    seed: int = 0,
    batch: int = DEFAULT_BATCH,
    tol: float = DEFAULT_TOL,
) -> ConjugateVariableReport:
    """Check that xi = X A^-1 B^-1 satisfies the conjugate-variable conditions for eta(b) = B^-1 b B.

    k1(xi) = 0, k2(xi (x) bX) = eta(b) over a batch of random b, and
    k_{m+1}(xi (x) b_1 X ... b_m X) = 0 for 2 <= m <= max_order - 1.

    Raises:
        OrderLimitError: If max_order is outside 2..MAX_CONJUGATE_ORDER.
        NotInvertibleError: If A or B is singular at some spectrum point.
    """
    if not 2 <= max_order <= MAX_CONJUGATE_ORDER:
        raise OrderLimitError(
            message=f"max_order must lie in 2..{MAX_CONJUGATE_ORDER}",
            details=f"Got max_order={max_order}",
        )
    if tau.state.n != cov_phi.n:
        raise DimensionError(
            message="Trace state and covariance live on different spectra",
            details=f"State n={tau.state.n}, covariance n={cov_phi.n}",
        )
    c, eta = conjugate_data(cov_phi, tol)
    d, n = cov_phi.d, cov_phi.n

    first = cumulant(MomentWord((Letter.XI,)), cov_phi, c)
    deviations = {"k1": first.max_abs()}

    second = 0.0
    for index in range(batch):
        b = random_operator(derive_rng(seed, "conjugate-variable", 2, index), d, n)
        target = eta.apply(b)
        value = cumulant(MomentWord((Letter.XI, Letter.X), (b,)), cov_phi, c)
        second = max(second, _scaled(value - target, target))
    deviations["k2"] = second

    for order in range(3, max_order + 1):
        worst = 0.0
        for index in range(batch):
            rng = derive_rng(seed, "conjugate-variable", order, index)
            coeffs = tuple(random_operator(rng, d, n) for _ in range(order - 1))
            word = MomentWord((Letter.XI, *(Letter.X for _ in range(order - 1))), coeffs)
            value = cumulant(word, cov_phi, c)
            worst = max(worst, _scaled(value, joint_moment(word, cov_phi, c)))
        deviations[f"k{order}"] = worst

    logger.debug("Conjugate variable deviations for d=%d, n=%d: %s", d, n, deviations)
    return ConjugateVariableReport(c=c, eta=eta, max_order=max_order, deviations=deviations)


def fisher_information(
    cov_phi: SandwichCovariance,
    tau: OperatorTrace,
    tol: float = DEFAULT_TOL,
    max_order: int | None = None,
    seed: int = 0,
) -> FisherReport:
    """tau E(xi xi*) through the moment engine, next to the closed form tau(B^-1* A^-1*).

    With max_order set, the conjugate-variable conditions are checked as well
    and their deviations attached to the report.

    Raises:
        NotInvertibleError: If A or B is singular at some spectrum point.
    """
    c, _ = conjugate_data(cov_phi, tol)
    numeric = tau.apply(joint_moment(MomentWord((Letter.XI, Letter.X), (c.adjoint(),)), cov_phi, c))
    a_inv = operator_inverse(cov_phi.left, tol)
    b_inv = operator_inverse(cov_phi.right, tol)
    closed_form = tau.apply(b_inv.adjoint() @ a_inv.adjoint())

    if max_order is None:
        return FisherReport(numeric=numeric, closed_form=closed_form)
    report = verify_conjugate_variable(cov_phi, tau, max_order, seed=seed, tol=tol)
    return FisherReport(
        numeric=numeric,
        closed_form=closed_form,
        max_order_checked=max_order,
        condition_deviations=dict(report.deviations),
    )
