"""Server-side accumulation, frequency estimation, and variance formulas.

FHR aggregation is a two-step pipeline: fold every report's implied sparse
vector (+1 at index_x, -1 at index_y) into a running :class:`SumVector`,
then estimate any item's count as ``correction * (sums . row_vector)``.
Accumulation is a commutative integer merge, so partial sums from chunks
or workers combine into exactly the sequential result.

The baseline estimators are the usual unbiased inversions of their flip
probabilities: ``(observed - n*q) / (p - q)`` for GRR and unary encodings,
and ``(C(t) - n/g) / (p - 1/g)`` for OLH support counts.

Estimates live on the count scale and are neither clipped nor normalized
here; negative values are meaningful to the variance tests and it is the
metrics layer that decides how to project onto a distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .hadamard import HadamardOrder, ItemRowMap, row_vector, sign_block
from .mechanisms import FhrReport, PrivacyParams

__all__ = [
    "SumVector",
    "FrequencyEstimate",
    "fhr_accumulate",
    "fhr_accumulate_indices",
    "fhr_estimate",
    "fhr_estimate_all",
    "grr_estimate",
    "unary_estimate",
    "olh_support_counts",
    "olh_estimate",
    "olh_estimate_all",
    "fhr_variance_bound",
    "fhr_variance_exact",
    "oue_variance",
    "variance_crossover",
]


@dataclass(frozen=True)
class SumVector:
    """Running elementwise sum of report vectors, plus how many went in.

    For FHR each report contributes one +1 and one -1, so the entries of
    ``sums`` always total zero and no entry can exceed ``n`` in magnitude.
    """

    sums: np.ndarray
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"report count must be nonnegative, got {self.n}")
        if self.sums.ndim != 1:
            raise ValueError(f"sums must be one-dimensional, got shape {self.sums.shape}")

    def merge(self, other: "SumVector") -> "SumVector":
        """Combine two partial sums; commutative and associative."""
        if self.sums.shape != other.sums.shape:
            raise ValueError(
                f"cannot merge sums of length {self.sums.size} and {other.sums.size}"
            )
        return SumVector(sums=self.sums + other.sums, n=self.n + other.n)

    @classmethod
    def zero(cls, length: int) -> "SumVector":
        return cls(sums=np.zeros(length, dtype=np.int64), n=0)


@dataclass(frozen=True)
class FrequencyEstimate:
    """Per-item count estimates on the same scale as the raw data."""

    estimates: np.ndarray
    n: int

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.estimates)):
            raise ValueError("estimates must be finite")


def fhr_accumulate_indices(
    index_x: np.ndarray, index_y: np.ndarray, order: HadamardOrder
) -> SumVector:
    """Fold batches of report index pairs into a SumVector via bincount."""
    d = order.order
    index_x = np.asarray(index_x, dtype=np.int64)
    index_y = np.asarray(index_y, dtype=np.int64)
    if index_x.shape != index_y.shape:
        raise ValueError("index arrays must have matching shapes")
    for arr in (index_x, index_y):
        if arr.size and (arr.min() < 0 or arr.max() >= d):
            raise ValueError(f"corrupt report: index outside [0, {d})")
    if np.any(index_x == index_y):
        raise ValueError("corrupt report: equal indices")
    sums = np.bincount(index_x, minlength=d) - np.bincount(index_y, minlength=d)
    return SumVector(sums=sums.astype(np.int64), n=index_x.size)


def fhr_accumulate(reports: Iterable[FhrReport], order: HadamardOrder) -> SumVector:
    """Accumulate a stream of reports; equals the batched index-array path."""
    pairs = [(r.index_x, r.index_y) for r in reports]
    if not pairs:
        return SumVector.zero(order.order)
    xs, ys = zip(*pairs)
    return fhr_accumulate_indices(np.asarray(xs), np.asarray(ys), order)


def fhr_estimate(
    sum_vector: SumVector, item: int, params: PrivacyParams, order: HadamardOrder
) -> float:
    """Unbiased count estimate for one item: correction * (sums . H row)."""
    if params.correction is None:
        raise ValueError("params were not built for FHR (use PrivacyParams.for_fhr)")
    row = ItemRowMap(domain_size=order.order - 1, order=order).row_of(item)
    signs = row_vector(row, order.order)
    return params.correction * float(sum_vector.sums @ signs.astype(np.int64))


def fhr_estimate_all(
    sum_vector: SumVector,
    domain_size: int,
    params: PrivacyParams,
    order: HadamardOrder,
    chunk: int = 256,
) -> FrequencyEstimate:
    """Estimate every item in [0, domain_size) by chunked row-block products."""
    if params.correction is None:
        raise ValueError("params were not built for FHR (use PrivacyParams.for_fhr)")
    rows = ItemRowMap(domain_size=domain_size, order=order).rows()
    sums = sum_vector.sums.astype(np.int64)
    out = np.empty(domain_size, dtype=np.float64)
    for start in range(0, domain_size, chunk):
        block = sign_block(rows[start : start + chunk], order.order)
        out[start : start + chunk] = block.astype(np.int64) @ sums
    return FrequencyEstimate(estimates=params.correction * out, n=sum_vector.n)


def _check_invertible(params: PrivacyParams) -> None:
    if params.q is None:
        raise ValueError("params lack a q probability; wrong mechanism?")
    if math.isclose(params.p, params.q):
        raise ValueError("degenerate parameters: p == q cannot be inverted")


def grr_estimate(
    counts: np.ndarray, params: PrivacyParams, domain_size: int, n: int
) -> FrequencyEstimate:
    """Invert GRR report tallies: (count_t - n*q) / (p - q) per item."""
    _check_invertible(params)
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size != domain_size:
        raise ValueError(f"expected {domain_size} counts, got {counts.size}")
    if not math.isclose(counts.sum(), n, rel_tol=1e-9, abs_tol=1e-6):
        raise ValueError(f"counts sum to {counts.sum()}, expected n={n}")
    return FrequencyEstimate(estimates=(counts - n * params.q) / (params.p - params.q), n=n)


def unary_estimate(bit_counts: np.ndarray, params: PrivacyParams, n: int) -> FrequencyEstimate:
    """Invert per-position set-bit tallies: (c_i - n*q) / (p - q)."""
    _check_invertible(params)
    bit_counts = np.asarray(bit_counts, dtype=np.float64)
    if bit_counts.size and (bit_counts.min() < 0 or bit_counts.max() > n):
        raise ValueError(f"bit counts must lie in [0, {n}]")
    return FrequencyEstimate(estimates=(bit_counts - n * params.q) / (params.p - params.q), n=n)


def olh_support_counts(
    seeds: np.ndarray,
    values: np.ndarray,
    items: np.ndarray,
    g: int,
    chunk: int = 32,
) -> np.ndarray:
    """C(t) per item: how many reports hash t to their reported bucket.

    Re-hashes every item under every report seed, chunked over items to
    bound the (reports x chunk) intermediate.
    """
    from .mechanisms import olh_hash

    seeds = np.asarray(seeds, dtype=np.uint64)
    values = np.asarray(values, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    if seeds.shape != values.shape:
        raise ValueError("seeds and values must have matching shapes")
    out = np.empty(items.size, dtype=np.int64)
    for start in range(0, items.size, chunk):
        block = items[start : start + chunk]
        hashed = olh_hash(seeds[:, None], block[None, :], g)
        out[start : start + chunk] = (hashed == values[:, None]).sum(axis=0)
    return out


def olh_estimate(support_count: float, params: PrivacyParams, n: int) -> float:
    """Invert one OLH support count: (C(t) - n/g) / (p - 1/g)."""
    if params.g is None:
        raise ValueError("params were not built for OLH (use PrivacyParams.for_olh)")
    g = params.g
    return (support_count - n / g) / (params.p - 1 / g)


def olh_estimate_all(
    seeds: np.ndarray,
    values: np.ndarray,
    domain_size: int,
    params: PrivacyParams,
    chunk: int = 32,
) -> FrequencyEstimate:
    """Estimate every item in [0, domain_size) from OLH reports."""
    if params.g is None:
        raise ValueError("params were not built for OLH (use PrivacyParams.for_olh)")
    n = np.asarray(seeds).size
    counts = olh_support_counts(seeds, values, np.arange(domain_size), params.g, chunk=chunk)
    estimates = (counts - n / params.g) / (params.p - 1 / params.g)
    return FrequencyEstimate(estimates=estimates, n=n)


def fhr_variance_bound(epsilon: float, n: int) -> float:
    """Upper bound (e^eps+1)^2 / (2 (e^eps-1)^2) * n on Var[f-hat_t]."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    e = math.exp(epsilon)
    return (e + 1) ** 2 / (2 * (e - 1) ** 2) * n


def fhr_variance_exact(epsilon: float, n: int, true_count: int) -> float:
    """Exact Var[f-hat_t] = B*n + (B-1)*n_t with B the bound coefficient.

    Coincides with :func:`fhr_variance_bound` when the item never occurs;
    for n_t > 0 it exceeds the bound whenever B > 1 (small epsilon).
    """
    if not 0 <= true_count <= n:
        raise ValueError(f"true_count must lie in [0, {n}], got {true_count}")
    e = math.exp(epsilon)
    b = (e + 1) ** 2 / (2 * (e - 1) ** 2)
    return b * n + (b - 1) * true_count


def oue_variance(epsilon: float, n: int) -> float:
    """OUE per-item estimator variance 4 e^eps / (e^eps - 1)^2 * n."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    e = math.exp(epsilon)
    return 4 * e / (e - 1) ** 2 * n


def variance_crossover() -> float:
    """Budget where FHR's bound meets the OUE variance: ln(3 + 2*sqrt(2)).

    Below this value FHR has the smaller constant, above it OUE does; the
    root solves (e^eps + 1)^2 = 8 e^eps.
    """
    return math.log(3 + 2 * math.sqrt(2))
