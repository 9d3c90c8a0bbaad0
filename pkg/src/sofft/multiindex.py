"""Multi-index arithmetic over the base coordinates of a jet chart.

A multi-index records how many derivatives are taken in each base direction.
All indices into base directions are 1-based, matching the usual geometric
convention x^1 .. x^m.
"""

from __future__ import annotations

import math
from itertools import product


class MultiIndex(tuple):
    """Immutable vector of nonnegative derivative counts, one per base direction."""

    def __new__(cls, entries) -> "MultiIndex":
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise ValueError(f"multi-index entries must be nonnegative, got {entries}")
        return super().__new__(cls, entries)

    @property
    def order(self) -> int:
        """Total number of derivatives |I|."""
        return sum(self)

    def factorial(self) -> int:
        """I! = prod of entry factorials."""
        out = 1
        for e in self:
            out *= math.factorial(e)
        return out

    def add_unit(self, i: int) -> "MultiIndex":
        """Increment the count for base direction i (1-based)."""
        if not 1 <= i <= len(self):
            raise IndexError(f"base index {i} out of range [1, {len(self)}]")
        return MultiIndex(self[k] + (1 if k == i - 1 else 0) for k in range(len(self)))

    def __str__(self) -> str:
        return "[" + ",".join(str(e) for e in self) + "]"

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


def unit(m: int, i: int) -> MultiIndex:
    """The multi-index 1_i on m base directions."""
    if not 1 <= i <= m:
        raise IndexError(f"base index {i} out of range [1, {m}]")
    return MultiIndex(1 if k == i - 1 else 0 for k in range(m))


def zero(m: int) -> MultiIndex:
    return MultiIndex((0,) * m)


def enumerate_indices(m: int, k: int) -> list[MultiIndex]:
    """All multi-indices of order exactly k, in lexicographically decreasing order.

    The count is binomial(m+k-1, k).  This ordering is the canonical one used
    for momentum naming and Hessian row order throughout the package.
    """
    if m < 1:
        raise ValueError("base dimension must be >= 1")
    if k < 0:
        raise ValueError("order must be >= 0")

    out: list[MultiIndex] = []

    def rec(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            out.append(MultiIndex(prefix + [remaining]))
            return
        for e in range(remaining, -1, -1):
            rec(prefix + [e], remaining - e, slots - 1)

    rec([], k, m)
    return out


def enumerate_up_to(m: int, k: int) -> list[MultiIndex]:
    """All multi-indices of order 0..k, grouped by increasing order."""
    out: list[MultiIndex] = []
    for r in range(k + 1):
        out.extend(enumerate_indices(m, r))
    return out


def sym_factor(i: int, j: int) -> int:
    """The symmetry weight n(ij): 1 on the diagonal, 2 off it."""
    return 1 if i == j else 2


def ordered_pairs(I: MultiIndex) -> list[tuple[int, int]]:
    """All ordered pairs (i, j), 1-based, with 1_i + 1_j = I.  Requires |I| = 2."""
    if I.order != 2:
        raise ValueError(f"expected a second-order multi-index, got {I}")
    m = len(I)
    return [
        (i, j)
        for i, j in product(range(1, m + 1), repeat=2)
        if unit(m, i).add_unit(j) == I
    ]
