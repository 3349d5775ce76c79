"""Sylvester Hadamard matrices, queried entrywise without materialization.

The matrix of order ``2^r`` is defined by the recursion ``H_{r+1} = [[H_r, H_r],
[H_r, -H_r]]`` with ``H_0 = [1]``. Its entries admit a closed form,
``H[row, col] = (-1)^popcount(row AND col)``, which is what every function
here evaluates. Nothing is ever built in memory beyond explicitly requested
row vectors or row blocks, so orders of 2^16 and up stay cheap.

Items of a finite domain are encoded as matrix rows. Row 0 is all ones and
carries no information, so item ``i`` maps to row ``i + 1`` and the matrix
order must be at least ``domain_size + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HadamardOrder",
    "ItemRowMap",
    "min_order_for_domain",
    "entry",
    "row_vector",
    "positions_of_sign",
    "sign_block",
]

_U64 = np.uint64


@dataclass(frozen=True)
class HadamardOrder:
    """Order of a Sylvester matrix, carried as the exponent ``r``."""

    r: int

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError(f"matrix exponent must be >= 1, got r={self.r}")

    @property
    def order(self) -> int:
        return 1 << self.r

    @classmethod
    def for_domain(cls, domain_size: int) -> "HadamardOrder":
        return min_order_for_domain(domain_size)


def min_order_for_domain(domain_size: int) -> HadamardOrder:
    """Smallest order that can encode ``domain_size`` items.

    Row 0 is reserved, so we need ``2^r >= domain_size + 1``. For example a
    domain of 1023 items fits order 1024 (r=10), while 1024 items force
    order 2048.
    """
    if domain_size < 1:
        raise ValueError(f"domain_size must be >= 1, got {domain_size}")
    r = max(1, int(domain_size).bit_length())
    # bit_length gives smallest r with 2^r > domain_size, i.e. 2^r >= domain_size + 1
    return HadamardOrder(r)


@dataclass(frozen=True)
class ItemRowMap:
    """Deterministic assignment of domain items to matrix rows.

    Item ``i`` maps to row ``i + 1``; row 0 (all +1) is never assigned.
    """

    domain_size: int
    order: HadamardOrder

    def __post_init__(self) -> None:
        if self.domain_size < 1:
            raise ValueError("domain_size must be >= 1")
        if self.order.order < self.domain_size + 1:
            raise ValueError(
                f"order {self.order.order} too small for {self.domain_size} items "
                f"(need at least {self.domain_size + 1})"
            )

    def row_of(self, item: int) -> int:
        if not 0 <= item < self.domain_size:
            raise ValueError(f"item {item} outside domain [0, {self.domain_size})")
        return item + 1

    def rows(self) -> np.ndarray:
        """All assigned rows, in item order."""
        return np.arange(1, self.domain_size + 1, dtype=np.uint64)


def _check_index(name: str, value: int, order: int) -> None:
    if not 0 <= value < order:
        raise IndexError(f"{name} {value} out of range [0, {order})")


def entry(row: int, col: int, order: int) -> int:
    """Matrix entry in O(1): ``(-1)^popcount(row AND col)``."""
    _check_index("row", row, order)
    _check_index("col", col, order)
    return -1 if (row & col).bit_count() & 1 else 1


def _parity(masked: np.ndarray) -> np.ndarray:
    """Popcount parity of a uint64 array, 0 or 1 per element."""
    return np.bitwise_count(masked).astype(np.int8) & np.int8(1)


def _check_data_row(row: int, order: int) -> None:
    _check_index("row", row, order)
    if row == 0:
        raise ValueError("row 0 is the reserved all-ones row")


def row_vector(row: int, order: int) -> np.ndarray:
    """Signed row of the matrix as an int8 vector of +/-1.

    Row 0 is rejected: it is reserved and, being all ones, has none of the
    balance properties the encoding relies on. Every returned row has
    exactly ``order/2`` entries of each sign.
    """
    _check_data_row(row, order)
    cols = np.arange(order, dtype=_U64)
    return (1 - 2 * _parity(cols & _U64(row))).astype(np.int8)


def positions_of_sign(row: int, order: int, sign: int) -> np.ndarray:
    """Column indices where the row carries ``sign`` (+1 or -1).

    The two sign classes partition the columns into halves of size
    ``order/2``.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    _check_data_row(row, order)
    cols = np.arange(order, dtype=_U64)
    par = _parity(cols & _U64(row))
    want = np.int8(0) if sign == 1 else np.int8(1)
    return np.nonzero(par == want)[0]


def sign_block(rows: np.ndarray, order: int) -> np.ndarray:
    """Matrix block for the given rows, shape (len(rows), order), int8.

    Used by the aggregator to evaluate many row dot products at once while
    keeping memory proportional to the block, not the full matrix.
    """
    rows = np.asarray(rows, dtype=_U64)
    if rows.size and int(rows.max()) >= order:
        raise IndexError(f"row {int(rows.max())} out of range [0, {order})")
    cols = np.arange(order, dtype=_U64)
    par = _parity(rows[:, None] & cols[None, :])
    return (1 - 2 * par).astype(np.int8)
