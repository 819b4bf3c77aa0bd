"""Binary file containers for timestamps and bit streams.

Timestamp container (``.qrts``)::

    magic "QRTS" | version u8 | clock_period_ps u64 | bin_count u64 |
    event_count u64 | event_count x u64 timestamps

Bit container (``.qrrb``), version 1 (plain)::

    magic "QRRB" | version u8 = 1 | bit_count u64 | packed bytes (MSB-first,
    final partial byte zero-padded; the pad length is implied by bit_count)

Version 2 prepends a metadata block of "key=value" lines (UTF-8) between the
version byte and the bit count::

    magic "QRRB" | version u8 = 2 | meta_len u32 | meta bytes | bit_count u64 | data

All integers are little-endian.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._bits import pack_bits, unpack_bits

QRTS_MAGIC = b"QRTS"
QRRB_MAGIC = b"QRRB"


class FormatError(ValueError):
    """Raised when a container file is malformed."""


@dataclass(frozen=True)
class TimestampHeader:
    clock_period_ps: int
    bin_count: int
    event_count: int


def write_timestamps(path, clock_period_ps: int, bin_count: int, timestamps_ps) -> None:
    """Write a timestamp stream; only the click times are exported."""
    ts = np.ascontiguousarray(timestamps_ps, dtype=np.uint64)
    with open(path, "wb") as fh:
        fh.write(QRTS_MAGIC)
        fh.write(struct.pack("<BQQQ", 1, clock_period_ps, bin_count, ts.size))
        fh.write(ts.astype("<u8").tobytes())


def read_timestamps(path) -> tuple[TimestampHeader, np.ndarray]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != QRTS_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {QRTS_MAGIC!r}")
        version, period, bins, count = struct.unpack("<BQQQ", fh.read(25))
        if version != 1:
            raise FormatError(f"{path}: unsupported timestamp container version {version}")
        raw = fh.read(8 * count)
        if len(raw) != 8 * count:
            raise FormatError(f"{path}: truncated, expected {count} timestamps")
        ts = np.frombuffer(raw, dtype="<u8").astype(np.int64)
    return TimestampHeader(period, bins, count), ts


def _encode_metadata(metadata: dict[str, str]) -> bytes:
    lines = []
    for key, value in metadata.items():
        key, value = str(key), str(value)
        if "=" in key or "\n" in key or "\n" in value:
            raise ValueError(f"metadata entry {key!r} contains reserved characters")
        lines.append(f"{key}={value}")
    return "\n".join(lines).encode("utf-8")


def _decode_metadata(blob: bytes) -> dict[str, str]:
    meta = {}
    for line in blob.decode("utf-8").splitlines():
        if line:
            key, _, value = line.partition("=")
            meta[key] = value
    return meta


def write_bits(path, bits, metadata: dict[str, str] | None = None) -> None:
    """Write a bit stream; pass ``metadata`` to record extraction parameters."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(QRRB_MAGIC)
        if metadata:
            blob = _encode_metadata(metadata)
            fh.write(struct.pack("<BI", 2, len(blob)))
            fh.write(blob)
        else:
            fh.write(struct.pack("<B", 1))
        fh.write(struct.pack("<Q", bits.size))
        fh.write(pack_bits(bits))


def read_bits(path) -> tuple[np.ndarray, dict[str, str]]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != QRRB_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {QRRB_MAGIC!r}")
        (version,) = struct.unpack("<B", fh.read(1))
        metadata: dict[str, str] = {}
        if version == 2:
            (meta_len,) = struct.unpack("<I", fh.read(4))
            metadata = _decode_metadata(fh.read(meta_len))
        elif version != 1:
            raise FormatError(f"{path}: unsupported bit container version {version}")
        (bit_count,) = struct.unpack("<Q", fh.read(8))
        data = fh.read((bit_count + 7) // 8)
        if len(data) * 8 < bit_count:
            raise FormatError(f"{path}: truncated, expected {bit_count} bits")
    return unpack_bits(data, bit_count), metadata
