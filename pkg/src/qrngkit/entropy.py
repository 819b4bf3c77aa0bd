"""Empirical bin statistics: min-entropy, coefficient of variance, config sweep.

Min-entropy is the worst-case measure ``-log2(max_i p_i)`` and is what sizes
the randomness extractor. The coefficient of variance (population standard
deviation of the bin probabilities over their mean, 1/bin_count) is the
uniformity figure of merit used to compare clock/bin configurations. Both are
computed from the empirical maximum with no confidence correction; a
confidence-adjusted variant is provided separately for conservative
extraction sizing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .quantize import BinConfig, bin_indices
from .source import SourceConfig, simulate_detections

__all__ = [
    "BinStats",
    "SweepRow",
    "bin_histogram",
    "min_entropy",
    "min_entropy_upper_confidence",
    "coefficient_of_variance",
    "shannon_entropy",
    "analytic_bin_probs",
    "multinomial_cov_prediction",
    "sweep_configurations",
    "sweep_table_text",
    "sweep_records",
]

_PROB_TOL = 1e-9


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be 1-D and non-empty")
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > _PROB_TOL:
        raise ValueError(f"probabilities must sum to 1, got {p.sum()!r}")
    return p


def min_entropy(probs) -> float:
    """Worst-case entropy in bits: -log2 of the largest probability."""
    return -math.log2(float(_check_probs(probs).max()))


def shannon_entropy(probs) -> float:
    """Shannon entropy in bits of a probability vector."""
    p = _check_probs(probs)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def coefficient_of_variance(probs) -> float:
    """Population standard deviation of the probabilities over their mean."""
    p = _check_probs(probs)
    return float(p.std() / p.mean())


def min_entropy_upper_confidence(counts, z: float = 2.576) -> float:
    """Min-entropy from a one-sided binomial upper bound on the max probability.

    Normal-approximation bound p_hat + z*sqrt(p_hat(1-p_hat)/N); the default
    z is the 99.5% one-sided quantile. Strictly smaller than the plug-in
    estimate, for conservative extractor sizing.
    """
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total <= 0:
        raise ValueError("counts must be non-empty with a positive total")
    p_hat = counts.max() / total
    p_up = min(1.0, p_hat + z * math.sqrt(p_hat * (1.0 - p_hat) / total))
    return -math.log2(p_up)


@dataclass(frozen=True)
class BinStats:
    """Empirical bin distribution with derived uniformity figures."""

    counts: np.ndarray
    probs: np.ndarray
    h_min_per_symbol: float
    h_min_per_bit: float
    cov: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def bin_histogram(indices, bin_count: int) -> BinStats:
    """Histogram a bin-index sequence and derive min-entropy and CoV."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cannot estimate probabilities from an empty index stream")
    if idx.min() < 0 or idx.max() >= bin_count:
        raise ValueError(f"indices must lie in [0, {bin_count})")
    counts = np.bincount(idx, minlength=bin_count).astype(np.int64)
    probs = counts / counts.sum()
    h = min_entropy(probs)
    return BinStats(
        counts=counts,
        probs=probs,
        h_min_per_symbol=h,
        h_min_per_bit=h / math.log2(bin_count),
        cov=coefficient_of_variance(probs),
    )


def analytic_bin_probs(clock_period_ps: int, bin_count: int) -> np.ndarray:
    """Exact bin probabilities for a period not divisible by the bin count.

    Conditioned on a single detection per period, the arrival phase is uniform
    over the period, and timing jitter wraps around the period boundary, which
    leaves that uniform marginal untouched. What remains is the measurement
    grid: the electronics record integer picosecond ticks, so when the bin
    width is fractional the bins cover unequal numbers of ticks. Each tick
    carries probability 1/period; a bin's probability is its tick count over
    the period.
    """
    if clock_period_ps <= 0 or bin_count <= 0:
        raise ValueError("period and bin count must be positive")
    t_bin = clock_period_ps / bin_count
    edges = np.ceil(np.arange(bin_count + 1) * t_bin).astype(np.int64)
    ticks = np.diff(edges)
    return ticks / clock_period_ps


def multinomial_cov_prediction(bin_count: int, samples: int) -> float:
    """Expected CoV from multinomial sampling noise alone on a uniform source."""
    return math.sqrt((bin_count - 1) / samples)


@dataclass(frozen=True)
class SweepRow:
    bin_count: int
    t_bin_ps: float
    clock_period_ps: int
    cov: float
    h_min_per_bit: float
    method: str  # "simulated" | "analytic"
    samples: int
    reference_cov: float | None = None


def sweep_configurations(
    template: SourceConfig,
    rows,
    samples_per_row: int = 1_000_000,
    reference_covs=None,
) -> list[SweepRow]:
    """Evaluate CoV and min-entropy per (clock period, bin count) configuration.

    ``rows`` is a sequence of (bin_count, clock_period_ps) pairs. Rows whose
    period is an exact multiple of the bin count run the full simulate ->
    quantize -> histogram pipeline with ``samples_per_row`` detections each
    (per-row seeds derived from the template seed); fractional rows are
    evaluated analytically from the measurement-grid bin probabilities.
    ``reference_covs`` optionally attaches externally reported CoV values for
    side-by-side display; they never feed into the computation.
    """
    out = []
    for i, (bin_count, clock_period_ps) in enumerate(rows):
        ref = None if reference_covs is None else reference_covs[i]
        t_bin = clock_period_ps / bin_count
        if clock_period_ps % bin_count == 0:
            config = replace(
                template,
                clock_period_ps=int(clock_period_ps),
                bin_count=int(bin_count),
                sim_seed=(template.sim_seed + i) % 2**64,
            )
            stream = simulate_detections(config, samples_per_row)
            stats = bin_histogram(
                bin_indices(stream, BinConfig(config.clock_period_ps, config.bin_count)),
                config.bin_count,
            )
            row = SweepRow(
                bin_count, t_bin, clock_period_ps, stats.cov, stats.h_min_per_bit,
                "simulated", samples_per_row, ref,
            )
        else:
            probs = analytic_bin_probs(clock_period_ps, bin_count)
            row = SweepRow(
                bin_count, t_bin, clock_period_ps,
                coefficient_of_variance(probs),
                min_entropy(probs) / math.log2(bin_count),
                "analytic", 0, ref,
            )
        out.append(row)
    return out


def sweep_table_text(rows: list[SweepRow]) -> str:
    """Human-readable sweep table (bin count, bin width, period, CoV first)."""
    header = (
        f"{'#':>2}  {'N_b':>5}  {'t_bin(ps)':>10}  {'T(ns)':>8}  {'CoV':>12}  "
        f"{'H_min/bit':>10}  {'method':>9}  {'samples':>9}  {'ref CoV':>12}"
    )
    lines = [header, "-" * len(header)]
    for i, r in enumerate(rows, start=1):
        ref = f"{r.reference_cov:.9f}" if r.reference_cov is not None else "-"
        lines.append(
            f"{i:>2}  {r.bin_count:>5}  {r.t_bin_ps:>10.3f}  {r.clock_period_ps / 1000:>8.3f}  "
            f"{r.cov:>12.9f}  {r.h_min_per_bit:>10.6f}  {r.method:>9}  {r.samples:>9}  {ref:>12}"
        )
    return "\n".join(lines)


def sweep_records(rows: list[SweepRow]) -> str:
    """Machine-readable key=value records, one block per row, for regression diffs."""
    lines = []
    for i, r in enumerate(rows, start=1):
        lines.append(f"row={i}")
        lines.append(f"bin_count={r.bin_count}")
        lines.append(f"t_bin_ps={r.t_bin_ps!r}")
        lines.append(f"clock_period_ps={r.clock_period_ps}")
        lines.append(f"cov={r.cov!r}")
        lines.append(f"h_min_per_bit={r.h_min_per_bit!r}")
        lines.append(f"method={r.method}")
        lines.append(f"samples={r.samples}")
        if r.reference_cov is not None:
            lines.append(f"reference_cov={r.reference_cov!r}")
        lines.append("")
    return "\n".join(lines)
