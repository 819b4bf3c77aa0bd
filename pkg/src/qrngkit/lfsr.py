"""Fibonacci linear feedback shift register over GF(2).

Convention (fixed so that bit streams are reproducible across versions):
the register state holds the next ``degree`` output bits with the oldest at
the LSB. Each step outputs the LSB, computes the feedback bit as the parity
of ``state AND taps`` (taps are the polynomial mask below the leading term),
shifts the state right, and inserts the feedback bit at the MSB.

Feedback polynomials are given as integer masks with the coefficient of x^i
at bit i, leading term included; e.g. x^3 + x + 1 is ``0b1011``. The shipped
table carries one maximal-length (primitive) polynomial per degree from 2 to
64 plus its reciprocal, and polynomial arguments are validated against it.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "SUPPORTED_DEGREES",
    "polynomial_degree",
    "reciprocal_polynomial",
    "known_polynomials",
    "validate_polynomial",
    "lfsr_sequence",
    "lfsr_period",
    "DEFAULT_POLYNOMIAL",
]

# Maximal-length feedback tap exponents per register width (the classic
# shift-register tap tables); mask = sum of x^t over taps, plus 1.
_TAPS = {
    2: (2, 1), 3: (3, 2), 4: (4, 3), 5: (5, 3), 6: (6, 5), 7: (7, 6),
    8: (8, 6, 5, 4), 9: (9, 5), 10: (10, 7), 11: (11, 9), 12: (12, 6, 4, 1),
    13: (13, 4, 3, 1), 14: (14, 5, 3, 1), 15: (15, 14), 16: (16, 15, 13, 4),
    17: (17, 14), 18: (18, 11), 19: (19, 6, 2, 1), 20: (20, 17),
    21: (21, 19), 22: (22, 21), 23: (23, 18), 24: (24, 23, 22, 17),
    25: (25, 22), 26: (26, 6, 2, 1), 27: (27, 5, 2, 1), 28: (28, 25),
    29: (29, 27), 30: (30, 6, 4, 1), 31: (31, 28), 32: (32, 22, 2, 1),
    33: (33, 20), 34: (34, 27, 2, 1), 35: (35, 33), 36: (36, 25),
    37: (37, 5, 4, 3, 2, 1), 38: (38, 6, 5, 1), 39: (39, 35),
    40: (40, 38, 21, 19), 41: (41, 38), 42: (42, 41, 20, 19),
    43: (43, 42, 38, 37), 44: (44, 43, 18, 17), 45: (45, 44, 42, 41),
    46: (46, 45, 26, 25), 47: (47, 42), 48: (48, 47, 21, 20), 49: (49, 40),
    50: (50, 49, 24, 23), 51: (51, 50, 36, 35), 52: (52, 49),
    53: (53, 52, 38, 37), 54: (54, 53, 18, 17), 55: (55, 31),
    56: (56, 55, 35, 34), 57: (57, 50), 58: (58, 39), 59: (59, 58, 38, 37),
    60: (60, 59), 61: (61, 60, 46, 45), 62: (62, 61, 6, 5), 63: (63, 62),
    64: (64, 63, 61, 60),
}

SUPPORTED_DEGREES = frozenset(_TAPS)


def polynomial_degree(polynomial: int) -> int:
    if polynomial <= 0:
        raise ValueError("polynomial mask must be positive")
    return polynomial.bit_length() - 1


def reciprocal_polynomial(polynomial: int) -> int:
    """Bit-reverse over degree+1 positions; primitive iff the original is."""
    degree = polynomial_degree(polynomial)
    out = 0
    for i in range(degree + 1):
        if polynomial >> i & 1:
            out |= 1 << (degree - i)
    return out


def _mask_from_taps(taps) -> int:
    mask = 1
    for t in taps:
        mask |= 1 << t
    return mask


def known_polynomials(degree: int) -> frozenset[int]:
    """The shipped maximal-length polynomials of a degree (pair of reciprocals)."""
    if degree not in _TAPS:
        raise ValueError(f"no shipped polynomial table for degree {degree}")
    mask = _mask_from_taps(_TAPS[degree])
    return frozenset({mask, reciprocal_polynomial(mask)})


def validate_polynomial(polynomial: int) -> int:
    """Check a feedback polynomial against the shipped table; returns its degree."""
    degree = polynomial_degree(polynomial)
    if degree not in SUPPORTED_DEGREES:
        raise ValueError(f"unsupported LFSR degree {degree} (supported: 2..64)")
    if polynomial not in known_polynomials(degree):
        raise ValueError(
            f"polynomial {polynomial:#x} is not in the shipped maximal-length "
            f"table for degree {degree}"
        )
    return degree


DEFAULT_POLYNOMIAL = _mask_from_taps(_TAPS[32])  # x^32 + x^22 + x^2 + x + 1


def lfsr_sequence(seed_state: int, feedback_polynomial: int, length: int) -> np.ndarray:
    """First ``length`` output bits of the register started at ``seed_state``."""
    degree = validate_polynomial(feedback_polynomial)
    if not 0 < seed_state < (1 << degree):
        raise ValueError(
            f"seed state must be a non-zero {degree}-bit value, got {seed_state:#x}"
        )
    if length < 0:
        raise ValueError("length must be non-negative")
    taps = feedback_polynomial & ((1 << degree) - 1)
    out = np.empty(length, dtype=np.uint8)
    state = seed_state
    for i in range(length):
        out[i] = state & 1
        feedback = (state & taps).bit_count() & 1
        state = (state >> 1) | (feedback << (degree - 1))
    return out


def lfsr_period(seed_state: int, feedback_polynomial: int, limit: int) -> int:
    """Steps until the state first recurs, scanning up to ``limit`` steps."""
    degree = validate_polynomial(feedback_polynomial)
    taps = feedback_polynomial & ((1 << degree) - 1)
    state = seed_state
    for step in range(1, limit + 1):
        feedback = (state & taps).bit_count() & 1
        state = (state >> 1) | (feedback << (degree - 1))
        if state == seed_state:
            return step
    raise RuntimeError(f"state did not recur within {limit} steps")
