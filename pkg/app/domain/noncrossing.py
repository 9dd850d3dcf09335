"""Non-crossing partitions and pairings of {1..n}."""

import itertools
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import StrEnum
from functools import cache

from app.core.errors import OrderLimitError, ValidationError

MAX_NC_SIZE = 12


class NCKind(StrEnum):
    PAIRINGS = "pairings"
    PARTITIONS = "partitions"


def catalan(k: int) -> int:
    if k < 0:
        raise ValidationError(message="Catalan index must be non-negative", details=f"Got k={k}")
    return math.comb(2 * k, k) // (k + 1)


def is_non_crossing(blocks: Sequence[Sequence[int]]) -> bool:
    """No a < b < c < d with a, c in one block and b, d in another.

    Scans points in order keeping a stack of blocks that are open (seen but
    not finished); a point of an open block that is not on top crosses it.
    """
    owner = {point: index for index, block in enumerate(blocks) for point in block}
    last = {index: max(block) for index, block in enumerate(blocks) if block}
    stack: list[int] = []
    opened: set[int] = set()
    for point in sorted(owner):
        block = owner[point]
        if block in opened:
            if stack[-1] != block:
                return False
        elif point != last[block]:
            stack.append(block)
            opened.add(block)
            continue
        else:
            continue
        if point == last[block]:
            stack.pop()
    return True


@dataclass(frozen=True)
class NonCrossingPartition:
    """Blocks of 1-based points, each sorted, ordered by their smallest point."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else 0))
        points = [p for b in blocks for p in b]
        if any(not b for b in blocks) or sorted(points) != list(range(1, len(points) + 1)):
            raise ValidationError(
                message="Blocks must be non-empty, disjoint and cover 1..n",
                details=f"Blocks: {[list(b) for b in self.blocks]}",
            )
        if not is_non_crossing(blocks):
            raise ValidationError(
                message="Partition is crossing",
                details=f"Blocks: {[list(b) for b in blocks]}",
            )
        object.__setattr__(self, "blocks", blocks)

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks)

    def is_pairing(self) -> bool:
        return all(len(b) == 2 for b in self.blocks)


def _interval_partitions(lo: int, hi: int, pairings: bool) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Non-crossing partitions of range(lo, hi), generated from the block holding lo."""
    if lo >= hi:
        yield ()
        return
    rest = range(lo + 1, hi)
    sizes = [1] if pairings else range(0, hi - lo)
    for extra in sizes:
        for others in itertools.combinations(rest, extra):
            block = (lo, *others)
            gaps = [(block[k] + 1, block[k + 1]) for k in range(len(block) - 1)] + [(block[-1] + 1, hi)]
            if pairings and any((b - a) % 2 for a, b in gaps):
                continue
            for parts in itertools.product(*(_interval_partitions(a, b, pairings) for a, b in gaps)):
                yield (block, *(blk for part in parts for blk in part))


@cache
def _enumerate(kind: NCKind, n: int) -> tuple[NonCrossingPartition, ...]:
    if kind is NCKind.PAIRINGS and n % 2:
        return ()
    return tuple(
        NonCrossingPartition(blocks) for blocks in _interval_partitions(1, n + 1, kind is NCKind.PAIRINGS)
    )


def enumerate_nc(kind: NCKind | str, n: int) -> tuple[NonCrossingPartition, ...]:
    """All non-crossing pairings or partitions of {1..n}, in a fixed order.

    Raises:
        ValidationError: If n < 1 or kind is unknown.
        OrderLimitError: If n exceeds MAX_NC_SIZE.
    """
    try:
        kind = NCKind(kind)
    except ValueError as exc:
        raise ValidationError(
            message=f"Unknown partition kind '{kind}'",
            details="Use 'pairings' or 'partitions'",
        ) from exc
    if n < 1:
        raise ValidationError(message="Partition size must be at least 1", details=f"Got n={n}")
    if n > MAX_NC_SIZE:
        raise OrderLimitError(
            message=f"Enumeration limited to n <= {MAX_NC_SIZE}",
            details=f"Requested n={n} would produce {catalan(n)} partitions",
        )
    return _enumerate(kind, n)
