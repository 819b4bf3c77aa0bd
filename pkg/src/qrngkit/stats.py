"""In-repo statistical validation battery and export for external suites.

Implements the compact ENT-style metric set (entropy, chi-square over byte
cells, arithmetic mean, Monte Carlo pi from 24-bit coordinate pairs, lag-1
serial correlation), lag-swept autocorrelation with a 99% Gaussian bound,
the frequency (monobit) and runs tests, and the proportion confidence
interval used to judge pass rates across many test runs. Verdicts are pure
functions of (statistic, threshold); thresholds sit at the published ideal
values with a sampling-noise floor so short desk-scale streams are not
quarantined for statistics that are simply noise-limited at that volume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._bits import as_bit_array

__all__ = [
    "TestRecord",
    "TestReport",
    "AutocorrResult",
    "regularized_upper_gamma",
    "chi_square_p_value",
    "ent_report",
    "autocorrelation",
    "monobit_and_runs",
    "nist_proportion_interval",
    "p_value_decile_uniformity",
    "run_battery",
    "export_for_external",
    "import_external",
]

_CHUNK_BITS = 1 << 24

PASS, WEAK, FAIL = "pass", "weak", "fail"


@dataclass(frozen=True)
class TestRecord:
    name: str
    statistic: float
    p_value: float | None
    threshold: str
    verdict: str


@dataclass(frozen=True)
class TestReport:
    records: tuple[TestRecord, ...]
    bit_count: int
    source_digest: str

    @property
    def passed(self) -> bool:
        return all(r.verdict == PASS for r in self.records)

    def record(self, name: str) -> TestRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_text(self) -> str:
        width = max(len(r.name) for r in self.records)
        lines = [f"bits={self.bit_count}  digest={self.source_digest}"]
        for r in self.records:
            p = f"{r.p_value:.6f}" if r.p_value is not None else "      -"
            lines.append(
                f"{r.name:<{width}}  stat={r.statistic:>14.8g}  p={p}  "
                f"[{r.threshold}]  {r.verdict.upper()}"
            )
        return "\n".join(lines)

    def to_records(self) -> str:
        lines = [f"bit_count={self.bit_count}", f"source_digest={self.source_digest}"]
        for r in self.records:
            lines.append(
                f"test={r.name} statistic={r.statistic!r} "
                f"p_value={'' if r.p_value is None else repr(r.p_value)} "
                f"threshold={r.threshold!r} verdict={r.verdict}"
            )
        return "\n".join(lines)


# --- regularized incomplete gamma (for chi-square tail probabilities) ---

_IGAMMA_EPS = 1e-16
_IGAMMA_ITMAX = 600


def _lower_gamma_series(a: float, x: float) -> float:
    ap = a
    total = term = 1.0 / a
    for _ in range(_IGAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _IGAMMA_EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise RuntimeError("incomplete gamma series did not converge")


def _upper_gamma_cf(a: float, x: float) -> float:
    # modified Lentz continued fraction
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _IGAMMA_ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _IGAMMA_EPS:
            return h * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise RuntimeError("incomplete gamma continued fraction did not converge")


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x): series below the a+1 crossover, continued fraction above."""
    if a <= 0 or x < 0:
        raise ValueError("require a > 0 and x >= 0")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_gamma_series(a, x)
    return _upper_gamma_cf(a, x)


def chi_square_p_value(statistic: float, dof: int) -> float:
    """Probability that a chi-square variate with ``dof`` exceeds ``statistic``."""
    if dof <= 0:
        raise ValueError("dof must be positive")
    return regularized_upper_gamma(dof / 2.0, statistic / 2.0)


# --- ENT-style metrics ---


def _scalar_record(name, stat, threshold, ok) -> TestRecord:
    return TestRecord(name, float(stat), None, threshold, PASS if ok else FAIL)


def _pvalue_record(name, stat, p) -> TestRecord:
    verdict = PASS if p >= 0.01 else WEAK if p >= 0.001 else FAIL
    return TestRecord(name, float(stat), float(p), "p >= 0.01", verdict)


def _bits_to_bytes(bits: np.ndarray) -> np.ndarray:
    usable = bits.size - bits.size % 8  # a trailing partial byte would bias byte metrics
    return np.packbits(bits[:usable])


def ent_report(bits, digest: str = "") -> TestReport:
    """ENT metric set over a bit stream (byte metrics use whole bytes only).

    Thresholds: entropy >= 0.9999 bit/bit, chi-square percentile inside
    (10%, 90%), |serial correlation| < 0.005, Monte Carlo pi within 0.01,
    bit mean within 0.002 of 0.5 -- each widened to a few-sigma sampling
    floor when the stream is too short for the fixed figure.
    """
    bits = as_bit_array(bits)
    data = _bits_to_bytes(bits)
    if data.size < 6:
        raise ValueError("need at least 6 bytes (one Monte Carlo point)")
    n_bits, n_bytes = bits.size, data.size

    ones = int(bits.sum(dtype=np.int64))
    p1 = ones / n_bits
    entropy_bit = 0.0
    for p in (p1, 1.0 - p1):
        if p > 0:
            entropy_bit -= p * math.log2(p)

    hist = np.bincount(data, minlength=256).astype(np.float64)
    probs = hist / n_bytes
    nz = probs[probs > 0]
    entropy_byte = float(-(nz * np.log2(nz)).sum())

    expected = n_bytes / 256.0
    chi2 = float(((hist - expected) ** 2 / expected).sum())
    chi2_pct = 100.0 * chi_square_p_value(chi2, 255)

    mean_bit = p1
    mean_byte = float(data.mean())

    pi_est, pi_points = _monte_carlo_pi(data)
    scc = _serial_correlation(data)

    mean_tol = max(0.002, 4.5 * 0.5 / math.sqrt(n_bits))
    scc_tol = max(0.005, 4.5 / math.sqrt(max(n_bytes - 1, 1)))
    p_in = math.pi / 4.0
    pi_tol = max(0.01, 4.5 * 4.0 * math.sqrt(p_in * (1 - p_in) / pi_points))

    records = (
        _scalar_record("entropy_per_bit", entropy_bit, ">= 0.9999", entropy_bit >= 0.9999),
        _scalar_record(
            "entropy_per_byte",
            entropy_byte,
            ">= 7.9992 (noise-floored)",
            entropy_byte >= 8.0 - max(8e-4, 3 * 255 / (2 * n_bytes * math.log(2))),
        ),
        TestRecord(
            "chi_square_bytes",
            chi2,
            chi2_pct / 100.0,
            "percentile in (10, 90)",
            PASS if 10.0 < chi2_pct < 90.0 else FAIL,
        ),
        _scalar_record(
            "arithmetic_mean_bit", mean_bit, f"|x-0.5| <= {mean_tol:.3g}",
            abs(mean_bit - 0.5) <= mean_tol,
        ),
        _scalar_record(
            "arithmetic_mean_byte", mean_byte, f"|x-127.5| <= {mean_tol * 255:.3g}",
            abs(mean_byte - 127.5) <= mean_tol * 255,
        ),
        _scalar_record(
            "monte_carlo_pi", pi_est, f"|x-pi| <= {pi_tol:.3g}",
            abs(pi_est - math.pi) <= pi_tol,
        ),
        _scalar_record(
            "serial_correlation", scc, f"|x| <= {scc_tol:.3g}",
            math.isfinite(scc) and abs(scc) <= scc_tol,
        ),
    )
    return TestReport(records, n_bits, digest)


def _monte_carlo_pi(data: np.ndarray) -> tuple[float, int]:
    """Estimate pi from non-overlapping 6-byte points in the 24-bit square."""
    points = data.size // 6
    groups = data[: points * 6].reshape(points, 6).astype(np.int64)
    weights = np.array([65536, 256, 1], dtype=np.int64)
    x = groups[:, :3] @ weights
    y = groups[:, 3:] @ weights
    radius_sq = (2**24 - 1) ** 2
    inside = int(np.count_nonzero(x * x + y * y < radius_sq))
    return 4.0 * inside / points, points


def _serial_correlation(data: np.ndarray) -> float:
    """Pearson correlation of successive bytes, lag 1, no circular closure."""
    if data.size < 2:
        return float("nan")
    a = data[:-1].astype(np.float64)
    b = data[1:].astype(np.float64)
    n = a.size
    cov = float(a @ b) - a.sum() * b.sum() / n
    var_a = float(a @ a) - a.sum() ** 2 / n
    var_b = float(b @ b) - b.sum() ** 2 / n
    if var_a <= 0 or var_b <= 0:
        return float("nan")
    return cov / math.sqrt(var_a * var_b)


# --- autocorrelation ---


@dataclass(frozen=True)
class AutocorrResult:
    """Pearson autocorrelation per lag with a two-sided 99% Gaussian bound."""

    coefficients: np.ndarray  # index k-1 holds lag k, k = 1..max_lag
    lag0: float
    bound_99: float

    @property
    def max_lag(self) -> int:
        return self.coefficients.size

    @property
    def excursions(self) -> int:
        finite = np.isfinite(self.coefficients)
        return int(np.count_nonzero(~finite | (np.abs(self.coefficients) > self.bound_99)))


def autocorrelation(bits, max_lag: int) -> AutocorrResult:
    """Correlation of a bit stream with its k-delayed copy, k = 1..max_lag."""
    bits = as_bit_array(bits)
    n = bits.size
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if n < 100 * max_lag:
        raise ValueError(f"stream too short: need >= {100 * max_lag} bits, got {n}")

    total = int(bits.sum(dtype=np.int64))
    head = np.cumsum(bits[:max_lag], dtype=np.int64)
    tail = np.cumsum(bits[-max_lag:][::-1], dtype=np.int64)

    # Cross terms via BLAS dot on float32 views; chunks are converted once and
    # carry a max_lag overlap so every product stays inside one buffer. 0/1
    # values keep partial sums exact well below the float32 integer limit.
    cross = np.zeros(max_lag + 1, dtype=np.int64)
    for start in range(0, n, _CHUNK_BITS):
        stop = min(start + _CHUNK_BITS, n)
        buf = bits[start : min(stop + max_lag, n)].astype(np.float32)
        for k in range(1, max_lag + 1):
            hi = min(stop, n - k)
            if hi <= start:
                continue
            length = hi - start
            cross[k] += int(np.dot(buf[:length], buf[k : k + length]))

    coeffs = np.empty(max_lag, dtype=np.float64)
    for k in range(1, max_lag + 1):
        length = n - k
        s_a = total - int(tail[k - 1])  # sum of first n-k bits
        s_b = total - int(head[k - 1])  # sum of last n-k bits
        num = length * cross[k] - s_a * s_b
        var_a = length * s_a - s_a * s_a  # bits are 0/1 so sum == sum of squares
        var_b = length * s_b - s_b * s_b
        denom = math.sqrt(var_a) * math.sqrt(var_b)
        coeffs[k - 1] = num / denom if denom > 0 else float("nan")

    return AutocorrResult(coeffs, 1.0, 2.576 / math.sqrt(n - max_lag))


# --- NIST-style tests ---


def monobit_and_runs(bits) -> tuple[TestRecord, TestRecord]:
    """Frequency (monobit) test, then the runs test gated on its precondition."""
    bits = as_bit_array(bits)
    n = bits.size
    if n < 100:
        raise ValueError("need at least 100 bits")
    ones = int(bits.sum(dtype=np.int64))
    s = 2 * ones - n
    p_mono = math.erfc(abs(s) / math.sqrt(2.0 * n))
    monobit = _pvalue_record("monobit", s / math.sqrt(n), p_mono)

    pi_hat = ones / n
    if abs(pi_hat - 0.5) >= 2.0 / math.sqrt(n):
        runs = TestRecord("runs", float("nan"), 0.0, "p >= 0.01", FAIL)
    else:
        v = 1 + int(np.count_nonzero(np.diff(bits)))
        expected = 2.0 * n * pi_hat * (1.0 - pi_hat)
        p_runs = math.erfc(
            abs(v - expected) / (2.0 * math.sqrt(2.0 * n) * pi_hat * (1.0 - pi_hat))
        )
        runs = _pvalue_record("runs", float(v), p_runs)
    return monobit, runs


def nist_proportion_interval(significance_alpha: float, sample_count: int) -> tuple[float, float]:
    """Allowable pass proportion across ``sample_count`` test runs."""
    if not 0.0 < significance_alpha < 1.0:
        raise ValueError("significance level must lie in (0, 1)")
    if sample_count <= 0:
        raise ValueError("sample_count must be positive")
    p = 1.0 - significance_alpha
    half_width = 3.0 * math.sqrt(p * (1.0 - p) / sample_count)
    return p - half_width, p + half_width


def p_value_decile_uniformity(p_values) -> TestRecord:
    """Chi-square over 10 p-value deciles across repeated runs (uniformity check)."""
    p = np.asarray(p_values, dtype=np.float64)
    if p.size < 10:
        raise ValueError("need at least 10 p-values")
    counts = np.histogram(p, bins=10, range=(0.0, 1.0))[0]
    expected = p.size / 10.0
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p_t = chi_square_p_value(chi2, 9)
    verdict = PASS if p_t >= 1e-4 else FAIL
    return TestRecord("p_value_uniformity", chi2, p_t, "p >= 0.0001", verdict)


# --- combined battery ---


def run_battery(
    bits,
    max_lag: int = 100,
    allowed_excursions: int = 3,
    digest: str = "",
) -> TestReport:
    """Full in-repo battery; the report's ``passed`` drives the pipeline gate."""
    bits = as_bit_array(bits)
    ent = ent_report(bits, digest)
    monobit, runs = monobit_and_runs(bits)
    ac = autocorrelation(bits, max_lag)
    ac_record = _scalar_record(
        f"autocorrelation_{max_lag}_lags",
        ac.excursions,
        f"<= {allowed_excursions} lags outside +/-{ac.bound_99:.3g}",
        ac.excursions <= allowed_excursions,
    )
    return TestReport(ent.records + (monobit, runs, ac_record), bits.size, digest)


# --- export for external suites ---


def export_for_external(bits, fmt: str, path) -> int:
    """Write a bit stream for an external test suite; returns bytes written.

    ``raw-binary``: MSB-first packed bytes (final partial byte zero padded).
    ``ascii-01``: one '0'/'1' character per bit.
    """
    bits = as_bit_array(bits)
    path = Path(path)
    written = 0
    with open(path, "wb") as fh:
        for start in range(0, max(bits.size, 1), _CHUNK_BITS):
            chunk = bits[start : start + _CHUNK_BITS]
            if fmt == "raw-binary":
                payload = np.packbits(chunk).tobytes()
            elif fmt == "ascii-01":
                payload = (chunk + ord("0")).astype(np.uint8).tobytes()
            else:
                raise ValueError(f"unknown export format {fmt!r}")
            written += fh.write(payload)
    return written


def import_external(path, fmt: str, bit_count: int | None = None) -> np.ndarray:
    """Read back an exported stream (whole bytes unless ``bit_count`` is given)."""
    path = Path(path)
    raw = path.read_bytes()
    if fmt == "raw-binary":
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    elif fmt == "ascii-01":
        arr = np.frombuffer(raw, dtype=np.uint8)
        if arr.size and not np.all((arr == ord("0")) | (arr == ord("1"))):
            raise ValueError(f"{path}: not an ascii-01 stream")
        bits = (arr - ord("0")).astype(np.uint8)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    if bit_count is not None:
        if bits.size < bit_count:
            raise ValueError(f"{path}: holds {bits.size} bits, wanted {bit_count}")
        bits = bits[:bit_count]
    return bits
