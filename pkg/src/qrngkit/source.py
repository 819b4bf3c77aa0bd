"""Simulated single-photon detection timestamps from an attenuated CW source.

Photon arrivals at the detector input form a homogeneous Poisson process with
rate ``photon_rate_hz``; inter-arrival times are drawn by inverse-CDF sampling
of the exponential distribution and rounded to the 1 ps measurement grid at
sampling time, so no float drift accumulates along the stream. The detector
model then applies, in fixed order:

1. Bernoulli thinning with the detection efficiency,
2. merge with an independent Poisson dark-count stream,
3. Gaussian timing jitter on every event (clock ticks are what the
   electronics record, so jitter acts on the measured time), followed by a
   re-sort,
4. non-paralyzable dead-time gating: any event closer than the dead time to
   the last accepted event is dropped.

All randomness is drawn from purpose-split child streams of ``sim_seed``
(one stream each for arrivals, thinning, dark counts, jitter), which makes a
stream reproducible bit-for-bit from its config alone and keeps the staged
API (`generate_photon_arrivals` + `apply_detector`) identical to the
memory-bounded fused path (`simulate`). The pseudo-random source stands in
for the physical entropy source; everything downstream of the timestamps is
agnostic to that substitution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterator

import numpy as np
from numba import njit

__all__ = [
    "Origin",
    "SourceConfig",
    "DetectionEvent",
    "ArrivalStream",
    "interarrival_from_uniform",
    "sample_interarrival",
    "generate_photon_arrivals",
    "apply_detector",
    "simulate",
    "simulate_detections",
    "arrival_density_gamma",
    "window_count_pmf",
    "expected_detection_rate_hz",
]

PS_PER_SECOND = 1_000_000_000_000

# Draw granularity for chunked sampling; affects memory use only, never values.
_CHUNK = 1 << 22


class Origin(IntEnum):
    """Simulation-truth tag; stripped before anything enters the bit pipeline."""

    PHOTON = 0
    DARK = 1


@dataclass(frozen=True)
class SourceConfig:
    """Physical-model parameters of the source + detector.

    ``allow_short_dead_time`` relaxes the single-detection-per-period
    requirement (dead time >= clock period) for bias studies.
    """

    photon_rate_hz: float
    detector_efficiency: float
    dead_time_ps: int
    dark_rate_hz: float
    jitter_sigma_ps: float
    clock_period_ps: int
    bin_count: int
    sim_seed: int
    allow_short_dead_time: bool = False

    def __post_init__(self):
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ValueError(f"detector_efficiency must be in [0,1], got {self.detector_efficiency}")
        if self.photon_rate_hz < 0 or self.dark_rate_hz < 0:
            raise ValueError("rates must be non-negative")
        if self.jitter_sigma_ps < 0:
            raise ValueError("jitter_sigma_ps must be non-negative")
        if self.clock_period_ps <= 0:
            raise ValueError("clock_period_ps must be positive")
        if self.dead_time_ps < 0:
            raise ValueError("dead_time_ps must be non-negative")
        nb = self.bin_count
        if nb <= 0 or nb & (nb - 1):
            raise ValueError(f"bin_count must be a power of two, got {nb}")
        if self.clock_period_ps % nb:
            raise ValueError(
                f"clock_period_ps ({self.clock_period_ps}) must be divisible by bin_count ({nb})"
            )
        if self.dead_time_ps < self.clock_period_ps and not self.allow_short_dead_time:
            raise ValueError(
                "dead_time_ps < clock_period_ps breaks the single-detection-per-period "
                "assumption; set allow_short_dead_time=True for bias studies"
            )
        if not 0 <= self.sim_seed < 2**64:
            raise ValueError("sim_seed must fit in 64 bits")


@dataclass(frozen=True)
class DetectionEvent:
    timestamp_ps: int
    origin: Origin


@dataclass(frozen=True)
class ArrivalStream:
    """Detector clicks over one simulated acquisition, sorted ascending."""

    config: SourceConfig
    timestamps_ps: np.ndarray
    origins: np.ndarray
    duration_ps: int

    @property
    def count(self) -> int:
        return int(self.timestamps_ps.size)

    @property
    def dark_count(self) -> int:
        return int(np.count_nonzero(self.origins))

    def events(self) -> Iterator[DetectionEvent]:
        for ts, org in zip(self.timestamps_ps, self.origins):
            yield DetectionEvent(int(ts), Origin(int(org)))

    def validate(self) -> None:
        """Assert the stream invariants; cheap linear scans, used by tests."""
        ts = self.timestamps_ps
        if ts.size == 0:
            return
        if ts[0] < 0 or ts[-1] >= self.duration_ps:
            raise AssertionError("timestamps outside [0, duration_ps)")
        gaps = np.diff(ts)
        if gaps.size and gaps.min() < max(self.config.dead_time_ps, 1):
            raise AssertionError("dead-time gating violated")


def interarrival_from_uniform(u, rate_hz: float):
    """Inverse-CDF exponential interval for uniform draw ``u`` in (0, 1].

    Returned in integer picoseconds, rounded to the measurement grid with a
    1 ps floor (two events cannot share a tick).
    """
    _check_rate(rate_hz)
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u > 1.0):
        raise ValueError("uniform draw must lie in (0, 1]")
    delta = np.rint(-np.log(u) / rate_hz * PS_PER_SECOND)
    delta = np.maximum(delta, 1.0).astype(np.int64)
    return delta if delta.ndim else int(delta)


def sample_interarrival(rate_hz: float, rng: np.random.Generator, size: int | None = None):
    """Draw exponential inter-arrival time(s) in integer picoseconds."""
    u = 1.0 - rng.random(size)  # maps [0,1) draws onto (0,1]
    return interarrival_from_uniform(u, rate_hz)


def _check_rate(rate_hz: float) -> None:
    if rate_hz <= 0:
        raise ValueError(f"rate must be positive, got {rate_hz}")
    if rate_hz > PS_PER_SECOND:
        raise ValueError(
            f"rate {rate_hz} Hz implies a mean interval below the 1 ps resolution"
        )


def _streams(config: SourceConfig) -> dict[str, np.random.Generator]:
    """Purpose-split child RNGs; fixed spawn order keeps streams reproducible."""
    children = np.random.SeedSequence(config.sim_seed).spawn(4)
    names = ("arrival", "thin", "dark", "jitter")
    return {name: np.random.default_rng(seq) for name, seq in zip(names, children)}


def _arrival_chunks(rate_hz: float, duration_ps: int, rng: np.random.Generator):
    """Yield int64 timestamp chunks of a Poisson realization over [0, duration)."""
    offset = 0
    while offset < duration_ps:
        deltas = sample_interarrival(rate_hz, rng, _CHUNK)
        ts = np.cumsum(deltas) + offset
        offset = int(ts[-1])
        if offset >= duration_ps:
            yield ts[ts < duration_ps]
            return
        yield ts


def generate_photon_arrivals(config: SourceConfig, duration_ps: int) -> np.ndarray:
    """Raw (pre-detector) photon arrival timestamps over [0, duration_ps)."""
    if duration_ps < 0:
        raise ValueError("duration_ps must be non-negative")
    if duration_ps == 0 or config.photon_rate_hz == 0:
        return np.empty(0, dtype=np.int64)
    rng = _streams(config)["arrival"]
    chunks = list(_arrival_chunks(config.photon_rate_hz, duration_ps, rng))
    return np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)


@njit(cache=True)
def _dead_time_mask(timestamps: np.ndarray, gap_ps: int) -> np.ndarray:
    keep = np.zeros(timestamps.size, dtype=np.bool_)
    last = np.int64(-(1 << 62))
    for i in range(timestamps.size):
        if timestamps[i] - last >= gap_ps:
            keep[i] = True
            last = timestamps[i]
    return keep


def _thin(arrivals: np.ndarray, efficiency: float, rng: np.random.Generator) -> np.ndarray:
    if efficiency >= 1.0:
        return arrivals
    if efficiency <= 0.0:
        return arrivals[:0]
    keep = np.empty(arrivals.size, dtype=bool)
    for start in range(0, arrivals.size, _CHUNK):
        stop = min(start + _CHUNK, arrivals.size)
        keep[start:stop] = rng.random(stop - start) < efficiency
    return arrivals[keep]


def _dark_stream(config: SourceConfig, duration_ps: int, rng: np.random.Generator) -> np.ndarray:
    if config.dark_rate_hz <= 0 or duration_ps <= 0:
        return np.empty(0, dtype=np.int64)
    n = int(rng.poisson(config.dark_rate_hz * duration_ps / PS_PER_SECOND))
    times = rng.integers(0, duration_ps, size=n, dtype=np.int64)
    times.sort()
    return times


def _detector_pipeline(
    thinned: np.ndarray,
    config: SourceConfig,
    duration_ps: int,
    rng_dark: np.random.Generator,
    rng_jitter: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    dark = _dark_stream(config, duration_ps, rng_dark)
    ts = np.concatenate([thinned, dark])
    origins = np.concatenate(
        [
            np.full(thinned.size, Origin.PHOTON, dtype=np.uint8),
            np.full(dark.size, Origin.DARK, dtype=np.uint8),
        ]
    )
    order = np.argsort(ts, kind="stable")
    ts, origins = ts[order], origins[order]

    if config.jitter_sigma_ps > 0 and ts.size:
        jitter = np.empty(ts.size, dtype=np.int64)
        for start in range(0, ts.size, _CHUNK):
            stop = min(start + _CHUNK, ts.size)
            jitter[start:stop] = np.rint(
                rng_jitter.normal(0.0, config.jitter_sigma_ps, stop - start)
            ).astype(np.int64)
        ts = ts + jitter
        order = np.argsort(ts, kind="stable")
        ts, origins = ts[order], origins[order]
        in_range = (ts >= 0) & (ts < duration_ps)  # jittered outside the acquisition window
        ts, origins = ts[in_range], origins[in_range]

    if ts.size:
        keep = _dead_time_mask(ts, max(config.dead_time_ps, 1))
        ts, origins = ts[keep], origins[keep]
    return ts.astype(np.int64), origins


def apply_detector(arrivals: np.ndarray, config: SourceConfig, duration_ps: int) -> ArrivalStream:
    """Run the imperfection pipeline (thin, dark merge, jitter, dead time).

    ``arrivals`` must be sorted ascending. Identity configuration
    (efficiency 1, no dark counts, no jitter, zero dead time) passes the
    input through unchanged.
    """
    arrivals = np.ascontiguousarray(arrivals, dtype=np.int64)
    if arrivals.size and np.any(np.diff(arrivals) < 0):
        raise ValueError("arrivals must be sorted ascending")
    streams = _streams(config)
    thinned = _thin(arrivals, config.detector_efficiency, streams["thin"])
    ts, origins = _detector_pipeline(
        thinned, config, duration_ps, streams["dark"], streams["jitter"]
    )
    return ArrivalStream(config, ts, origins, int(duration_ps))


def simulate(config: SourceConfig, duration_ps: int) -> ArrivalStream:
    """Full source + detector simulation over [0, duration_ps).

    Fuses arrival generation with efficiency thinning chunk by chunk so the
    pre-thinning arrival array is never held in memory; output is
    bit-identical to ``apply_detector(generate_photon_arrivals(...), ...)``.
    """
    if duration_ps < 0:
        raise ValueError("duration_ps must be non-negative")
    streams = _streams(config)
    thinned_chunks = []
    if duration_ps > 0 and config.photon_rate_hz > 0:
        for chunk in _arrival_chunks(config.photon_rate_hz, duration_ps, streams["arrival"]):
            thinned_chunks.append(_thin(chunk, config.detector_efficiency, streams["thin"]))
    thinned = (
        np.concatenate(thinned_chunks) if thinned_chunks else np.empty(0, dtype=np.int64)
    )
    ts, origins = _detector_pipeline(
        thinned, config, duration_ps, streams["dark"], streams["jitter"]
    )
    return ArrivalStream(config, ts, origins, int(duration_ps))


def expected_detection_rate_hz(config: SourceConfig) -> float:
    """Analytic throughput estimate: thinned + dark rate under dead-time loss."""
    r = config.photon_rate_hz * config.detector_efficiency + config.dark_rate_hz
    if r == 0:
        return 0.0
    return r / (1.0 + r * config.dead_time_ps / PS_PER_SECOND)


def simulate_detections(config: SourceConfig, n_detections: int) -> ArrivalStream:
    """Simulate until at least ``n_detections`` clicks, then trim to exactly that.

    The acquisition duration is estimated from the analytic detection rate and
    extended (deterministically, as a pure function of the config) if the
    realization falls short.
    """
    if n_detections <= 0:
        raise ValueError("n_detections must be positive")
    rate = expected_detection_rate_hz(config)
    if rate <= 0:
        raise ValueError("configuration produces no detections")
    duration = int(n_detections / rate * PS_PER_SECOND * 1.05) + config.clock_period_ps
    for _ in range(8):
        stream = simulate(config, duration)
        if stream.count >= n_detections:
            return replace(
                stream,
                timestamps_ps=stream.timestamps_ps[:n_detections],
                origins=stream.origins[:n_detections],
            )
        duration = int(duration * 1.3)
    raise RuntimeError(f"could not reach {n_detections} detections (rate estimate off?)")


def arrival_density_gamma(n: int, rate_hz: float, t: float) -> float:
    """Density of the n-th arrival epoch at time ``t`` (gamma with shape n).

    ``t`` is in the reciprocal units of ``rate_hz``. Serves as the analytic
    oracle for the arrival generator.
    """
    if n < 1:
        raise ValueError("epoch index n must be >= 1")
    if rate_hz <= 0:
        raise ValueError("rate must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return float(rate_hz) if n == 1 else 0.0
    log_pdf = n * math.log(rate_hz) + (n - 1) * math.log(t) - rate_hz * t - math.lgamma(n)
    return math.exp(log_pdf)


def window_count_pmf(n: int, rate_hz: float, window_ps: int) -> float:
    """Poisson probability of exactly ``n`` arrivals in one clock window."""
    if n < 0:
        raise ValueError("count must be non-negative")
    mu = rate_hz * window_ps / PS_PER_SECOND
    return math.exp(n * math.log(mu) - mu - math.lgamma(n + 1)) if mu > 0 else float(n == 0)
