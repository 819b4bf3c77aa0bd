"""Clock-referenced time-bin quantization of detection timestamps.

Each click time is reduced modulo the reference clock period (equivalent to
timing against an external clock), the resulting phase is split into
``bin_count`` equal bins, and the bin index is emitted as ``log2(bin_count)``
bits, MSB first. Bins are lower-inclusive / upper-exclusive, which partitions
[0, period) exactly; with a power-of-two bin count and an integer tick count
per bin the index is pure integer arithmetic with no rounding ambiguity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._bits import unpack_bits
from .source import ArrivalStream

__all__ = [
    "BinConfig",
    "RawBitBlock",
    "phase_extract",
    "bin_index",
    "bin_indices",
    "pack_indices",
    "unpack_indices",
    "quantize_stream",
]


@dataclass(frozen=True)
class BinConfig:
    clock_period_ps: int
    bin_count: int

    def __post_init__(self):
        nb = self.bin_count
        if self.clock_period_ps <= 0:
            raise ValueError("clock_period_ps must be positive")
        if nb <= 0 or nb & (nb - 1):
            raise ValueError(f"bin_count must be a power of two, got {nb}")
        if self.clock_period_ps % nb:
            raise ValueError(
                f"clock_period_ps ({self.clock_period_ps}) not divisible by bin_count ({nb})"
            )

    @property
    def bits_per_detection(self) -> int:
        return self.bin_count.bit_length() - 1

    @property
    def t_bin_ps(self) -> int:
        return self.clock_period_ps // self.bin_count


@dataclass(frozen=True)
class RawBitBlock:
    """Packed raw bits plus the detection count they came from."""

    data: bytes
    bit_count: int
    source_detection_count: int

    def __post_init__(self):
        if len(self.data) != (self.bit_count + 7) // 8:
            raise ValueError("packed data length inconsistent with bit_count")

    def bits(self) -> np.ndarray:
        return unpack_bits(self.data, self.bit_count)


def phase_extract(timestamp_ps, clock_period_ps: int):
    """Phase of a timestamp within the reference clock period, in [0, period)."""
    if clock_period_ps <= 0:
        raise ValueError("clock_period_ps must be positive")
    phase = np.asarray(timestamp_ps, dtype=np.int64) % clock_period_ps
    return phase if phase.ndim else int(phase)


def bin_index(phase_ps, config: BinConfig):
    """Bin index of a phase; lower-inclusive boundaries."""
    phase = np.asarray(phase_ps, dtype=np.int64)
    if np.any(phase < 0) or np.any(phase >= config.clock_period_ps):
        raise ValueError(f"phase must lie in [0, {config.clock_period_ps})")
    idx = phase // config.t_bin_ps
    return idx if idx.ndim else int(idx)


def bin_indices(events, config: BinConfig) -> np.ndarray:
    """Bin index per detection, in event order."""
    ts = events.timestamps_ps if isinstance(events, ArrivalStream) else events
    ts = np.ascontiguousarray(ts, dtype=np.int64)
    return bin_index(phase_extract(ts, config.clock_period_ps), config) if ts.size else np.empty(0, dtype=np.int64)


def pack_indices(indices, config: BinConfig) -> RawBitBlock:
    """Pack bin indices into raw bits, MSB first within each detection."""
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= config.bin_count):
        raise ValueError("bin index out of range")
    k = config.bits_per_detection
    if indices.size == 0:
        return RawBitBlock(b"", 0, 0)
    if k == 8:
        data = indices.astype(np.uint8).tobytes()  # one symbol per byte, already MSB-first
    else:
        shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
        bits = ((indices[:, None] >> shifts) & 1).astype(np.uint8).ravel()
        data = np.packbits(bits).tobytes()
    return RawBitBlock(data, indices.size * k, indices.size)


def unpack_indices(block: RawBitBlock, config: BinConfig) -> np.ndarray:
    """Inverse of ``pack_indices``; used for round-trip checks and analysis."""
    k = config.bits_per_detection
    if block.bit_count % k:
        raise ValueError("bit count is not a whole number of detections")
    bits = block.bits().astype(np.int64).reshape(-1, k)
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def quantize_stream(events, config: BinConfig) -> RawBitBlock:
    """Quantize a detection stream into packed raw bits, in event order."""
    return pack_indices(bin_indices(events, config), config)
