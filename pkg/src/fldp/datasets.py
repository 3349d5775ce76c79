"""Workload generation and ingestion: Zipf synthesis and CSV loading.

Both paths produce an :class:`ItemStream`, the unit the experiment harness
consumes: an array of items in [0, D) plus the exact ground-truth counts
every estimator is judged against. Zipf streams are drawn i.i.d. from the
truncated law P(i) proportional to (i+1)^(-exponent) and are deterministic
under their seed; CSV ingestion dictionary-encodes raw values to dense
item ids in order of first appearance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DatasetSpec",
    "ItemStream",
    "generate_zipf",
    "ingest_csv",
    "exact_frequencies",
    "export_stream_csv",
    "export_ground_truth",
]

DEFAULT_ZIPF_EXPONENT = 1.5


@dataclass(frozen=True)
class DatasetSpec:
    """Everything needed to reproduce a workload.

    ``source`` is "zipf" or "csv"; ``path`` only applies to csv. The Zipf
    exponent must exceed 1 so the untruncated law is normalizable.
    """

    source: str
    n: int = 0
    domain_size: int = 0
    zipf_exponent: float = DEFAULT_ZIPF_EXPONENT
    seed: int = 0
    path: str | None = None

    def __post_init__(self) -> None:
        if self.source not in ("zipf", "csv"):
            raise ValueError(f"source must be 'zipf' or 'csv', got {self.source!r}")
        if self.source == "zipf":
            if self.n < 1:
                raise ValueError(f"n must be at least 1, got {self.n}")
            if self.domain_size < 2:
                raise ValueError(f"domain must have at least 2 items, got {self.domain_size}")
            if not self.zipf_exponent > 1:
                raise ValueError(
                    f"zipf exponent must exceed 1, got {self.zipf_exponent}"
                )
        elif self.path is None:
            raise ValueError("csv source requires a path")


@dataclass(frozen=True)
class ItemStream:
    """Materialized workload: one item per user plus exact truth.

    ``labels`` maps item ids back to raw values for export; synthetic
    streams just use the decimal ids.
    """

    items: np.ndarray
    domain_size: int
    ground_truth: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.items.size and (self.items.min() < 0 or self.items.max() >= self.domain_size):
            raise ValueError("stream contains an item outside the domain")
        if self.ground_truth.size != self.domain_size:
            raise ValueError("ground truth length must equal the domain size")
        if int(self.ground_truth.sum()) != self.items.size:
            raise ValueError("ground truth must sum to the stream length")
        if len(self.labels) != self.domain_size:
            raise ValueError("need one label per item")

    @property
    def n(self) -> int:
        return self.items.size


def exact_frequencies(stream: ItemStream) -> np.ndarray:
    """Exact per-item counts recomputed from the raw items."""
    return np.bincount(stream.items, minlength=stream.domain_size).astype(np.int64)


def _count_items(items: np.ndarray, domain_size: int) -> np.ndarray:
    return np.bincount(items, minlength=domain_size).astype(np.int64)


def zipf_probabilities(domain_size: int, exponent: float) -> np.ndarray:
    """Truncated Zipf law over [0, domain_size), normalized."""
    if not exponent > 1:
        raise ValueError(f"zipf exponent must exceed 1, got {exponent}")
    weights = np.arange(1, domain_size + 1, dtype=np.float64) ** (-exponent)
    return weights / weights.sum()


def generate_zipf(spec: DatasetSpec) -> ItemStream:
    """Draw spec.n i.i.d. items from the truncated Zipf law under spec.seed."""
    if spec.source != "zipf":
        raise ValueError(f"spec source is {spec.source!r}, expected 'zipf'")
    probs = zipf_probabilities(spec.domain_size, spec.zipf_exponent)
    rng = np.random.default_rng(spec.seed)
    cdf = np.cumsum(probs)
    draws = np.searchsorted(cdf, rng.random(spec.n), side="right")
    items = np.minimum(draws, spec.domain_size - 1).astype(np.int64)
    return ItemStream(
        items=items,
        domain_size=spec.domain_size,
        ground_truth=_count_items(items, spec.domain_size),
        labels=tuple(str(i) for i in range(spec.domain_size)),
    )


def ingest_csv(
    path: str | Path, column: int = 0, skip_header: bool = False
) -> ItemStream:
    """Load one item per row, dictionary-encoding values by first appearance.

    Rows shorter than the requested column are rejected with their line
    number; an input with no data rows is an error, not an empty stream.
    """
    path = Path(path)
    encoding: dict[str, int] = {}
    items: list[int] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        for line_number, row in enumerate(reader, start=1):
            if skip_header and line_number == 1:
                continue
            if not row:
                continue  # blank separator lines are not records
            if column >= len(row):
                raise ValueError(
                    f"{path}:{line_number}: row has {len(row)} columns, need {column + 1}"
                )
            value = row[column].strip()
            if not value:
                raise ValueError(f"{path}:{line_number}: empty value")
            items.append(encoding.setdefault(value, len(encoding)))
    if not items:
        raise ValueError(f"{path}: no data rows")
    arr = np.asarray(items, dtype=np.int64)
    domain_size = len(encoding)
    return ItemStream(
        items=arr,
        domain_size=domain_size,
        ground_truth=_count_items(arr, domain_size),
        labels=tuple(encoding),
    )


def export_stream_csv(stream: ItemStream, path: str | Path) -> None:
    """Write the raw stream back out, one labeled value per row.

    Re-ingesting the file reproduces every label's count exactly; the
    dense ids may be renumbered, since ingestion assigns them by first
    appearance.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        for item in stream.items:
            writer.writerow([stream.labels[item]])


def export_ground_truth(stream: ItemStream, path: str | Path) -> None:
    """Write the exact counts as (item_label, count) rows."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["item", "count"])
        for item, count in enumerate(stream.ground_truth):
            writer.writerow([stream.labels[item], int(count)])
