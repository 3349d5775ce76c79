"""Client-side perturbation for FHR and the baseline frequency oracles.

FHR (flexible Hadamard response) encodes an item as a Hadamard row, samples
one +1 and one -1 position from it, and keeps the pair with probability
``p = e^eps / (e^eps + 1)``, otherwise flips both signs. The report is the
pair of column indices, so it costs 2r+1 bits regardless of domain size.

The baselines are the standard constructions: generalized randomized
response (GRR), unary encoding in its symmetric (RAPPOR) and optimized
(OUE) variants, and optimized local hashing (OLH) with a per-report random
hash seed.

All mechanisms are pure functions of (input, parameters, random source);
callers own the ``numpy.random.Generator`` and with it reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hadamard import HadamardOrder

__all__ = [
    "PrivacyParams",
    "FhrReport",
    "GrrReport",
    "UnaryReport",
    "OlhReport",
    "fhr_perturb",
    "fhr_perturb_batch",
    "fhr_report_to_sparse",
    "grr_perturb",
    "grr_perturb_batch",
    "unary_perturb",
    "unary_perturb_bits",
    "olh_perturb",
    "olh_perturb_batch",
    "olh_hash",
    "UNARY_VARIANTS",
]

UNARY_VARIANTS = ("rappor", "oue")

_U64 = np.uint64
_MASK64 = (1 << 64) - 1
# splitmix64 constants
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_M1 = 0xBF58476D1CE4E5B9
_SM_M2 = 0x94D049BB133111EB


def _check_epsilon(epsilon: float) -> None:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy budget plus the mechanism constants derived from it.

    ``q`` is only set for mechanisms with a second flip probability
    (GRR, unary, OLH), ``g`` only for OLH, ``correction`` only for FHR.
    """

    epsilon: float
    p: float
    q: float | None = None
    g: int | None = None
    correction: float | None = None

    def __post_init__(self) -> None:
        _check_epsilon(self.epsilon)
        # p may round to exactly 1.0 for extreme budgets; that is the
        # honest floating-point limit of every keep probability here
        if not 0 < self.p <= 1:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if self.q is not None and not 0 < self.q < self.p:
            raise ValueError(f"need 0 < q < p, got q={self.q}, p={self.p}")

    @classmethod
    def for_fhr(cls, epsilon: float) -> "PrivacyParams":
        """Keep probability e^eps/(e^eps+1) and the unbiasing factor
        (e^eps+1)/(2(e^eps-1))."""
        _check_epsilon(epsilon)
        e = math.exp(epsilon)
        return cls(epsilon=epsilon, p=e / (e + 1), correction=(e + 1) / (2 * (e - 1)))

    @classmethod
    def for_grr(cls, epsilon: float, domain_size: int) -> "PrivacyParams":
        _check_epsilon(epsilon)
        if domain_size < 2:
            raise ValueError(f"GRR needs a domain of at least 2, got {domain_size}")
        e = math.exp(epsilon)
        return cls(epsilon=epsilon, p=e / (e + domain_size - 1), q=1 / (e + domain_size - 1))

    @classmethod
    def for_rappor(cls, epsilon: float) -> "PrivacyParams":
        _check_epsilon(epsilon)
        e2 = math.exp(epsilon / 2)
        return cls(epsilon=epsilon, p=e2 / (e2 + 1), q=1 / (e2 + 1))

    @classmethod
    def for_oue(cls, epsilon: float) -> "PrivacyParams":
        _check_epsilon(epsilon)
        return cls(epsilon=epsilon, p=0.5, q=1 / (math.exp(epsilon) + 1))

    @classmethod
    def for_olh(cls, epsilon: float) -> "PrivacyParams":
        """Hash range g = ceil(eps + 1), then GRR probabilities inside it."""
        _check_epsilon(epsilon)
        g = max(2, math.ceil(epsilon + 1))
        e = math.exp(epsilon)
        return cls(epsilon=epsilon, p=e / (e + g - 1), q=1 / (e + g - 1), g=g)

    @classmethod
    def for_unary(cls, epsilon: float, variant: str) -> "PrivacyParams":
        if variant == "rappor":
            return cls.for_rappor(epsilon)
        if variant == "oue":
            return cls.for_oue(epsilon)
        raise ValueError(f"unknown unary variant {variant!r}, expected one of {UNARY_VARIANTS}")


@dataclass(frozen=True)
class FhrReport:
    """One user's FHR message: index_x carries +1, index_y carries -1."""

    index_x: int
    index_y: int

    def __post_init__(self) -> None:
        if self.index_x < 0 or self.index_y < 0:
            raise ValueError("report indices must be nonnegative")
        if self.index_x == self.index_y:
            raise ValueError(f"report indices must differ, got {self.index_x} twice")


@dataclass(frozen=True)
class GrrReport:
    value: int


@dataclass(frozen=True)
class UnaryReport:
    bits: np.ndarray


@dataclass(frozen=True)
class OlhReport:
    seed: int
    value: int


def _item_rows(items: np.ndarray, order: HadamardOrder) -> np.ndarray:
    items = np.asarray(items)
    if items.size:
        lo, hi = int(items.min()), int(items.max())
        if lo < 0 or hi + 1 >= order.order:
            raise ValueError(
                f"item {lo if lo < 0 else hi} does not fit order {order.order} "
                f"(usable domain is [0, {order.order - 1}))"
            )
    return items.astype(_U64) + _U64(1)


def fhr_perturb_batch(
    items: np.ndarray, params: PrivacyParams, order: HadamardOrder, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Perturb many items at once; returns (index_x, index_y) arrays.

    Sampling one column uniformly from a row's +1 positions is done without
    enumerating them: the +1 positions of row ``rho`` form the kernel of the
    linear form ``col -> popcount(rho AND col) mod 2``, so XOR-ing any draw
    that lands on the wrong side with a fixed column ``m`` of sign -1
    (the lowest set bit of ``rho``) folds the columns two-to-one onto the
    wanted half, preserving uniformity.
    """
    if params.correction is None:
        raise ValueError("params were not built for FHR (use PrivacyParams.for_fhr)")
    rows = _item_rows(items, order)
    n = rows.size
    d = order.order
    m = rows & (~rows + _U64(1))  # lowest set bit, a -1 column of each row

    u1 = rng.integers(0, d, size=n, dtype=np.uint64)
    u2 = rng.integers(0, d, size=n, dtype=np.uint64)
    neg1 = (np.bitwise_count(rows & u1) & np.uint8(1)).astype(bool)
    neg2 = (np.bitwise_count(rows & u2) & np.uint8(1)).astype(bool)
    x = np.where(neg1, u1 ^ m, u1)  # uniform over the +1 half
    y = np.where(neg2, u2, u2 ^ m)  # uniform over the -1 half

    keep = rng.random(n) < params.p
    index_x = np.where(keep, x, y).astype(np.int64)
    index_y = np.where(keep, y, x).astype(np.int64)
    return index_x, index_y


def fhr_perturb(
    item: int, params: PrivacyParams, order: HadamardOrder, rng: np.random.Generator
) -> FhrReport:
    """Perturb a single item; see :func:`fhr_perturb_batch` for the sampling."""
    ix, iy = fhr_perturb_batch(np.asarray([item]), params, order, rng)
    return FhrReport(index_x=int(ix[0]), index_y=int(iy[0]))


def fhr_report_to_sparse(report: FhrReport, order: HadamardOrder) -> np.ndarray:
    """Expand a report to its implied vector: +1 at index_x, -1 at index_y."""
    d = order.order
    if report.index_x >= d or report.index_y >= d:
        raise ValueError(f"report {report} does not fit order {d}")
    vec = np.zeros(d, dtype=np.int8)
    vec[report.index_x] = 1
    vec[report.index_y] = -1
    return vec


def grr_perturb_batch(
    items: np.ndarray, epsilon: float, domain_size: int, rng: np.random.Generator
) -> np.ndarray:
    """Generalized randomized response over [0, domain_size)."""
    params = PrivacyParams.for_grr(epsilon, domain_size)
    items = np.asarray(items, dtype=np.int64)
    if items.size and (items.min() < 0 or items.max() >= domain_size):
        raise ValueError("item outside domain")
    keep = rng.random(items.size) < params.p
    # uniform over the d-1 wrong answers, realized as a nonzero cyclic shift
    offset = rng.integers(1, domain_size, size=items.size)
    return np.where(keep, items, (items + offset) % domain_size)


def grr_perturb(item: int, epsilon: float, domain_size: int, rng: np.random.Generator) -> GrrReport:
    return GrrReport(value=int(grr_perturb_batch(np.asarray([item]), epsilon, domain_size, rng)[0]))


def unary_perturb_bits(
    items: np.ndarray,
    epsilon: float,
    domain_size: int,
    variant: str,
    rng: np.random.Generator,
) -> np.ndarray:
    """Perturbed one-hot encodings for a batch of users, shape (n, domain_size).

    Each user's item is one-hot encoded and every bit flipped independently:
    a set bit stays 1 with probability p, a clear bit becomes 1 with
    probability q. RAPPOR uses the symmetric p = e^(eps/2)/(e^(eps/2)+1),
    q = 1-p; OUE uses p = 1/2, q = 1/(e^eps+1).
    """
    if domain_size < 2:
        raise ValueError(f"unary encoding needs a domain of at least 2, got {domain_size}")
    params = PrivacyParams.for_unary(epsilon, variant)
    items = np.asarray(items, dtype=np.int64)
    if items.size and (items.min() < 0 or items.max() >= domain_size):
        raise ValueError("item outside domain")
    u = rng.random((items.size, domain_size))
    thresholds = np.full((items.size, domain_size), params.q)
    thresholds[np.arange(items.size), items] = params.p
    return (u < thresholds).astype(np.uint8)


def unary_perturb(
    item: int, epsilon: float, domain_size: int, variant: str, rng: np.random.Generator
) -> UnaryReport:
    bits = unary_perturb_bits(np.asarray([item]), epsilon, domain_size, variant, rng)[0]
    return UnaryReport(bits=bits)


def _splitmix64_scalar(z: int) -> int:
    z = (z + _SM_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _SM_M1) & _MASK64
    z = ((z ^ (z >> 27)) * _SM_M2) & _MASK64
    return z ^ (z >> 31)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = z + _U64(_SM_GAMMA)
    z = (z ^ (z >> _U64(30))) * _U64(_SM_M1)
    z = (z ^ (z >> _U64(27))) * _U64(_SM_M2)
    return z ^ (z >> _U64(31))


def _mix_items(items: np.ndarray) -> np.ndarray:
    return _splitmix64(np.asarray(items, dtype=_U64) * _U64(_SM_GAMMA) + _U64(1))


def olh_hash(seed: int | np.ndarray, item: int | np.ndarray, g: int) -> int | np.ndarray:
    """Keyed hash of an item into [0, g); the OLH hash family.

    A split-mix style 64-bit mixer keyed by the report seed. Scalar in,
    scalar out; arrays broadcast elementwise.
    """
    if np.isscalar(seed) and np.isscalar(item):
        mixed = _splitmix64_scalar((int(item) * _SM_GAMMA + 1) & _MASK64)
        return _splitmix64_scalar(int(seed) ^ mixed) % g
    seeds = np.asarray(seed, dtype=_U64)
    mixed = _mix_items(np.asarray(item))
    return (_splitmix64(seeds ^ mixed) % _U64(g)).astype(np.int64)


def olh_perturb_batch(
    items: np.ndarray, epsilon: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """OLH reports for a batch: fresh 64-bit seed per user, hash into
    [0, g), then GRR inside the hashed domain. Returns (seeds, values)."""
    params = PrivacyParams.for_olh(epsilon)
    g = params.g
    items = np.asarray(items, dtype=np.int64)
    if items.size and items.min() < 0:
        raise ValueError("item outside domain")
    seeds = rng.integers(0, 2**64, size=items.size, dtype=np.uint64)
    buckets = olh_hash(seeds, items, g)
    keep = rng.random(items.size) < params.p
    offset = rng.integers(1, g, size=items.size)
    values = np.where(keep, buckets, (buckets + offset) % g)
    return seeds, values.astype(np.int64)


def olh_perturb(item: int, epsilon: float, rng: np.random.Generator) -> OlhReport:
    seeds, values = olh_perturb_batch(np.asarray([item]), epsilon, rng)
    return OlhReport(seed=int(seeds[0]), value=int(values[0]))
