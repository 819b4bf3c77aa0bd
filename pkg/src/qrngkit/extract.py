"""Seeded randomness extraction: Toeplitz hashing sized by the leftover hash lemma.

A binary Toeplitz matrix (constant along every descending diagonal) applied
over GF(2) is a two-universal hash; hashing n raw bits of declared min-entropy
h per bit down to m <= n*h - 2*log2(1/eps) bits yields output within
statistical distance eps of uniform. The matrix is determined by its first
column and first row; the first row is either taken directly from the seed
("explicit" construction, m+n-1 seed bits) or generated by a maximal-length
LFSR seeded alongside the column ("lfsr" construction, m + degree seed bits).

The hash itself is computed as a carryless polynomial product: laying the
diagonal sequence and the input block out as GF(2) polynomials, the matrix
product is the middle m coefficients of their product. Coefficients are
spaced 16 bits apart inside big integers so one wide integer multiply
evaluates the whole convolution with no carries crossing coefficients; each
input bit then effectively XORs a shifted window of the diagonal into the
output, which is what makes blockwise extraction fast. The contract, and the
test oracle, is the naive GF(2) matrix-vector product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import gmpy2
import numpy as np

from ._bits import as_bit_array
from .lfsr import lfsr_sequence, polynomial_degree, validate_polynomial

__all__ = [
    "Construction",
    "ExtractorParams",
    "ToeplitzSpec",
    "ExtractionResult",
    "lhl_output_length",
    "build_toeplitz",
    "ToeplitzHasher",
    "toeplitz_hash",
    "extract_stream",
    "random_seed_bits",
    "seed_bits_from_file",
    "seed_length",
]

_SPACING_BITS = 16  # room for convolution sums up to 65535 ones per coefficient
_MAX_BLOCK_BITS = (1 << _SPACING_BITS) - 1


class Construction(str, Enum):
    EXPLICIT = "explicit"
    LFSR = "lfsr"


def lhl_output_length(input_bits_n: int, h_min_per_bit: float, epsilon_log2: int) -> int:
    """Extractable bits per block: floor(n*h - 2*log2(1/eps)), clamped at 0."""
    if input_bits_n < 0:
        raise ValueError("input_bits_n must be non-negative")
    if not 0.0 <= h_min_per_bit <= 1.0:
        raise ValueError("h_min_per_bit must lie in [0, 1]")
    if epsilon_log2 <= 0:
        raise ValueError("epsilon_log2 must be positive")
    return max(0, math.floor(input_bits_n * h_min_per_bit - 2 * epsilon_log2))


def seed_length(construction: Construction, output_bits_m: int, input_bits_n: int,
                feedback_polynomial: int | None) -> int:
    """Required seed bit count for a construction."""
    if construction is Construction.EXPLICIT:
        return output_bits_m + input_bits_n - 1
    return output_bits_m + polynomial_degree(feedback_polynomial)


@dataclass(frozen=True, eq=False)
class ExtractorParams:
    """Block extraction parameters; validated against the leftover-hash bound."""

    input_bits_n: int
    output_bits_m: int
    epsilon_log2: int
    seed_bits: np.ndarray
    construction: Construction = Construction.LFSR
    feedback_polynomial: int | None = None
    declared_h_min_per_bit: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "seed_bits", as_bit_array(self.seed_bits))
        n, m = self.input_bits_n, self.output_bits_m
        if n <= 0 or m <= 0:
            raise ValueError("block sizes must be positive")
        if m > n:
            raise ValueError(f"output length {m} exceeds input length {n}")
        if n > _MAX_BLOCK_BITS:
            raise ValueError(f"input blocks above {_MAX_BLOCK_BITS} bits are unsupported")
        bound = lhl_output_length(n, self.declared_h_min_per_bit, self.epsilon_log2)
        if m > bound:
            raise ValueError(
                f"output length {m} violates the leftover-hash bound {bound} for "
                f"h_min={self.declared_h_min_per_bit}, epsilon=2^-{self.epsilon_log2}"
            )
        if self.construction is Construction.LFSR:
            if self.feedback_polynomial is None:
                raise ValueError("lfsr construction requires a feedback polynomial")
            validate_polynomial(self.feedback_polynomial)
        need = seed_length(self.construction, m, n, self.feedback_polynomial)
        if self.seed_bits.size < need:
            raise ValueError(
                f"seed too short for {self.construction.value} construction: "
                f"need {need} bits, got {self.seed_bits.size}"
            )

    @property
    def extraction_ratio(self) -> float:
        return self.output_bits_m / self.input_bits_n


@dataclass(frozen=True, eq=False)
class ToeplitzSpec:
    """First column and first row; entry (i, j) is column[i-j] or row[j-i]."""

    first_column: np.ndarray
    first_row: np.ndarray
    construction: Construction

    def __post_init__(self):
        object.__setattr__(self, "first_column", as_bit_array(self.first_column))
        object.__setattr__(self, "first_row", as_bit_array(self.first_row))
        if self.first_column.size == 0 or self.first_row.size == 0:
            raise ValueError("matrix dimensions must be positive")
        if self.first_column[0] != self.first_row[0]:
            raise ValueError("corner entry must be shared by first column and first row")

    @property
    def shape(self) -> tuple[int, int]:
        return self.first_column.size, self.first_row.size


def build_toeplitz(params: ExtractorParams) -> ToeplitzSpec:
    """Materialize the matrix spec from the seed (and LFSR, if configured)."""
    m, n = params.output_bits_m, params.input_bits_n
    column = params.seed_bits[:m]
    if params.construction is Construction.EXPLICIT:
        rest = params.seed_bits[m : m + n - 1]
        row = np.concatenate([column[:1], rest])
    else:
        degree = polynomial_degree(params.feedback_polynomial)
        state_bits = params.seed_bits[m : m + degree]
        state = int.from_bytes(np.packbits(state_bits).tobytes(), "big") >> (
            (8 - degree % 8) % 8
        )
        row = np.concatenate(
            [column[:1], lfsr_sequence(state, params.feedback_polynomial, n - 1)]
        )
    return ToeplitzSpec(column, row, params.construction)


def _spaced_int(bits: np.ndarray) -> gmpy2.mpz:
    """Big integer with one bit per 16-bit lane, coefficient i at lane i."""
    return gmpy2.mpz(int.from_bytes(bits.astype("<u2").tobytes(), "little"))


class ToeplitzHasher:
    """Reusable fast hasher for one matrix spec (shared across blocks)."""

    def __init__(self, spec: ToeplitzSpec):
        m, n = spec.shape
        self.m, self.n = m, n
        # Diagonal sequence: reversed first row then first column tail, so the
        # matrix product is the convolution slice [n-1, n-1+m).
        diagonal = np.concatenate([spec.first_row[::-1], spec.first_column[1:]])
        self._spaced_diagonal = _spaced_int(diagonal)
        self._conv_len = diagonal.size + n - 1
        self._buf_len = 2 * self._conv_len + 8

    def __call__(self, block_bits: np.ndarray) -> np.ndarray:
        if block_bits.size != self.n:
            raise ValueError(f"block must be exactly {self.n} bits, got {block_bits.size}")
        product = self._spaced_diagonal * _spaced_int(block_bits)
        buf = product.to_bytes(self._buf_len, "little")
        coeffs = np.frombuffer(buf, dtype="<u2", count=self._conv_len)
        return (coeffs[self.n - 1 : self.n - 1 + self.m] & 1).astype(np.uint8)


def toeplitz_hash(block_bits, spec: ToeplitzSpec) -> np.ndarray:
    """Hash one n-bit block to m bits (GF(2) matrix-vector product)."""
    return ToeplitzHasher(spec)(as_bit_array(block_bits))


@dataclass(frozen=True, eq=False)
class ExtractionResult:
    bits: np.ndarray
    block_count: int
    dropped_bits: int
    extraction_ratio: float


def extract_stream(
    raw_bits,
    params: ExtractorParams,
    declared_h_min: float | None = None,
    measured_h_min_per_bit: float | None = None,
) -> ExtractionResult:
    """Blockwise extraction over a raw bit stream with a single shared matrix.

    The stream is cut into consecutive n-bit blocks; a trailing remainder is
    dropped (padding would fabricate entropy accounting) and reported. When a
    measured per-bit min-entropy is supplied, the declared value must not
    exceed it.
    """
    raw = as_bit_array(raw_bits)
    declared = params.declared_h_min_per_bit if declared_h_min is None else declared_h_min
    if measured_h_min_per_bit is not None and declared > measured_h_min_per_bit:
        raise ValueError(
            f"declared h_min {declared} exceeds measured {measured_h_min_per_bit}"
        )
    n, m = params.input_bits_n, params.output_bits_m
    if m > lhl_output_length(n, declared, params.epsilon_log2):
        raise ValueError("output length violates the leftover-hash bound for declared h_min")
    if raw.size < n:
        raise ValueError(f"raw stream shorter than one block ({raw.size} < {n})")
    hasher = ToeplitzHasher(build_toeplitz(params))
    block_count = raw.size // n
    out = np.empty(block_count * m, dtype=np.uint8)
    for b in range(block_count):
        out[b * m : (b + 1) * m] = hasher(raw[b * n : (b + 1) * n])
    return ExtractionResult(
        bits=out,
        block_count=block_count,
        dropped_bits=int(raw.size - block_count * n),
        extraction_ratio=m / n,
    )


def random_seed_bits(
    construction: Construction,
    output_bits_m: int,
    input_bits_n: int,
    feedback_polynomial: int | None,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw seed material of the right length; seed quality is an input assumption.

    For the LFSR construction an all-zero register draw (probability 2^-degree)
    is nudged to state 1 so the orbit is never degenerate.
    """
    need = seed_length(construction, output_bits_m, input_bits_n, feedback_polynomial)
    bits = rng.integers(0, 2, size=need, dtype=np.uint8)
    if construction is Construction.LFSR:
        state = bits[output_bits_m:]
        if not state.any():
            state[-1] = 1
    return bits


def seed_bits_from_file(path, needed_bits: int) -> np.ndarray:
    """Load seed bits (MSB-first bytes) from a file, which must be long enough."""
    with open(path, "rb") as fh:
        data = fh.read((needed_bits + 7) // 8)
    if len(data) * 8 < needed_bits:
        raise ValueError(f"seed file {path} holds fewer than {needed_bits} bits")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=needed_bits)
