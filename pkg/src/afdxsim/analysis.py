"""Empirical CDFs, percentiles and summary statistics over latency/jitter series."""

from __future__ import annotations

import bisect
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

from .core import exact


@dataclass(frozen=True)
class Ecdf:
    """Right-continuous step function F(x) = #{samples <= x} / n."""

    values: tuple  # distinct sample values, ascending
    counts: tuple[int, ...]  # cumulative count at each value
    n: int

    def __call__(self, x) -> Fraction:
        k = bisect.bisect_right(self.values, x)
        return Fraction(self.counts[k - 1], self.n) if k else Fraction(0)

    def fractions(self) -> list[Fraction]:
        return [Fraction(c, self.n) for c in self.counts]

    @property
    def min(self):
        return self.values[0]

    @property
    def max(self):
        return self.values[-1]


def build_ecdf(samples: Sequence) -> Ecdf:
    if not samples:
        raise ValueError("cannot build an ECDF from no samples")
    ordered = sorted(samples)
    values, counts = [], []
    for i, x in enumerate(ordered, start=1):
        if values and values[-1] == x:
            counts[-1] = i
        else:
            values.append(x)
            counts.append(i)
    return Ecdf(tuple(values), tuple(counts), len(ordered))


def percentile(e: Ecdf, p) -> object:
    """Smallest observed x with F(x) >= p/100; no interpolation."""
    p = exact(p)
    if not 0 < p <= 100:
        raise ValueError(f"percentile {p} outside (0, 100]")
    need = math.ceil(p * e.n / 100)
    return e.values[bisect.bisect_left(e.counts, need)]


@dataclass(frozen=True)
class SeriesStats:
    n: int
    min: float
    max: float
    mean: float
    p50: float
    p95: float
    p99: float
    outliers: int

    def as_dict(self) -> dict:
        return asdict(self)


def series_stats(samples: Sequence) -> SeriesStats:
    """Summary of a series; an outlier is any sample above the 99th percentile."""
    e = build_ecdf(samples)
    p99 = percentile(e, 99)
    return SeriesStats(
        n=e.n,
        min=e.min,
        max=e.max,
        mean=math.fsum(samples) / e.n,
        p50=percentile(e, 50),
        p95=percentile(e, 95),
        p99=p99,
        outliers=e.n - e.counts[bisect.bisect_right(e.values, p99) - 1],
    )


def ecdf_csv(e: Ecdf) -> str:
    lines = ["value_ns,cum_fraction"]
    lines += [f"{v},{c / e.n:.10g}" for v, c in zip(e.values, e.counts)]
    return "\n".join(lines) + "\n"
