"""Shared bit-array helpers.

The in-memory currency across the toolkit is an unpacked bit array:
``np.ndarray`` of dtype ``uint8`` holding 0/1 values, one element per bit.
Packed form is MSB-first bytes (``np.packbits`` convention), which is also
the on-disk and export byte order.
"""
from __future__ import annotations

import numpy as np

__all__ = ["as_bit_array", "pack_bits", "unpack_bits", "bits_from_int", "int_from_bits"]


def as_bit_array(bits) -> np.ndarray:
    """Coerce a 0/1 sequence to a contiguous uint8 bit array, validating values."""
    arr = np.ascontiguousarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError(f"bit array must be 1-D, got shape {arr.shape}")
    if arr.size and arr.max() > 1:
        raise ValueError("bit array may only contain 0 and 1")
    return arr


def pack_bits(bits) -> bytes:
    """Pack a bit array into MSB-first bytes, zero-padding the final byte."""
    return np.packbits(as_bit_array(bits)).tobytes()


def unpack_bits(data: bytes, bit_count: int) -> np.ndarray:
    """Unpack MSB-first bytes into the first ``bit_count`` bits."""
    if bit_count < 0:
        raise ValueError("bit_count must be non-negative")
    if len(data) * 8 < bit_count:
        raise ValueError(f"{len(data)} bytes hold fewer than {bit_count} bits")
    buf = np.frombuffer(data, dtype=np.uint8)
    return np.unpackbits(buf, count=bit_count)


def bits_from_int(value: int, width: int) -> np.ndarray:
    """MSB-first bit array of ``value`` in ``width`` bits."""
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def int_from_bits(bits) -> int:
    """Integer from an MSB-first bit array."""
    out = 0
    for b in as_bit_array(bits):
        out = (out << 1) | int(b)
    return out
