"""Battery tests: ENT metrics, autocorrelation, NIST-style checks, export."""
import math

import mpmath
import numpy as np
import pytest

from qrngkit.stats import (
    autocorrelation,
    chi_square_p_value,
    ent_report,
    export_for_external,
    import_external,
    monobit_and_runs,
    nist_proportion_interval,
    p_value_decile_uniformity,
    regularized_upper_gamma,
    run_battery,
)


def uniform_bits(n, seed=0):
    return np.random.default_rng(seed).integers(0, 2, n, dtype=np.uint8)


class TestIncompleteGamma:
    # (statistic, dof) pairs spanning both the series and continued-fraction
    # branches, including far tails
    REFERENCE_POINTS = [
        (0.5, 1), (1.0, 1), (5.0, 1), (0.1, 2), (2.0, 2), (10.0, 2),
        (3.0, 5), (10.0, 5), (1.0, 10), (9.0, 10), (25.0, 10), (50.0, 10),
        (200.0, 255), (230.0, 255), (255.0, 255), (280.0, 255), (320.0, 255),
        (100.0, 255), (500.0, 255), (1000.0, 999),
    ]

    @pytest.mark.parametrize("stat,dof", REFERENCE_POINTS)
    def test_against_high_precision_oracle(self, stat, dof):
        mpmath.mp.dps = 40
        expected = float(mpmath.gammainc(dof / 2, stat / 2, mpmath.inf, regularized=True))
        assert chi_square_p_value(stat, dof) == pytest.approx(expected, abs=1e-8)

    def test_boundaries(self):
        assert regularized_upper_gamma(2.0, 0.0) == 1.0
        with pytest.raises(ValueError):
            regularized_upper_gamma(0.0, 1.0)
        with pytest.raises(ValueError):
            chi_square_p_value(1.0, 0)


class TestEntReport:
    def test_uniform_stream_passes(self):
        report = ent_report(uniform_bits(2_000_000, seed=3))
        assert report.passed, report.to_text()
        assert report.record("entropy_per_bit").statistic > 0.9999
        assert abs(report.record("serial_correlation").statistic) < 0.01

    def test_all_zero_bytes(self):
        report = ent_report(np.zeros(8 * 4096, dtype=np.uint8))
        assert report.record("entropy_per_bit").statistic == 0.0
        assert report.record("entropy_per_byte").statistic == 0.0
        assert report.record("arithmetic_mean_bit").statistic == 0.0
        assert report.record("chi_square_bytes").statistic > 1e6  # astronomically failing
        assert report.record("chi_square_bytes").verdict == "fail"
        assert not report.passed

    def test_counting_bytes_flat_histogram(self):
        # bytes 0..255 repeated: chi-square exactly 0, entropy exactly 8 bits
        data = np.tile(np.arange(256, dtype=np.uint8), 64)
        bits = np.unpackbits(data)
        report = ent_report(bits)
        assert report.record("chi_square_bytes").statistic == 0.0
        assert report.record("entropy_per_byte").statistic == 8.0
        assert report.record("arithmetic_mean_byte").statistic == 127.5
        # perfectly flat percentile is 100% -> outside the two-sided window
        assert report.record("chi_square_bytes").verdict == "fail"

    def test_minimum_input_enforced(self):
        with pytest.raises(ValueError, match="6 bytes"):
            ent_report(np.ones(40, dtype=np.uint8))

    def test_monte_carlo_pi_low_discrepancy(self):
        # van der Corput pairs cover the square far more evenly than random
        # points, so the estimate must sit within the binomial 3-sigma bound
        points = 50_000
        idx = np.arange(1, points + 1, dtype=np.uint64)
        rev = np.zeros(points, dtype=np.uint64)
        v = idx.copy()
        for _ in range(24):
            rev = (rev << 1) | (v & 1)
            v >>= 1
        x = rev.astype(np.float64) / (1 << 24)  # van der Corput base 2
        y = (idx.astype(np.float64) + 0.5) / points  # uniform grid
        coords = np.empty((points, 2))
        coords[:, 0], coords[:, 1] = x, y
        scaled = np.minimum((coords * (1 << 24)).astype(np.uint64), (1 << 24) - 1)
        data = np.zeros((points, 6), dtype=np.uint8)
        for c in range(2):
            data[:, 3 * c] = scaled[:, c] >> 16
            data[:, 3 * c + 1] = (scaled[:, c] >> 8) & 0xFF
            data[:, 3 * c + 2] = scaled[:, c] & 0xFF
        report = ent_report(np.unpackbits(data.ravel()))
        pi_est = report.record("monte_carlo_pi").statistic
        p = math.pi / 4
        bound = 3 * 4 * math.sqrt(p * (1 - p) / points)
        assert abs(pi_est - math.pi) < bound

    def test_serial_correlation_detects_dependence(self):
        rng = np.random.default_rng(4)
        data = rng.integers(0, 256, 200_000).astype(np.uint8)
        data[1::2] = data[::2]  # every second byte repeats its predecessor
        report = ent_report(np.unpackbits(data))
        assert abs(report.record("serial_correlation").statistic) > 0.4
        assert report.record("serial_correlation").verdict == "fail"

    def test_report_is_deterministic(self):
        bits = uniform_bits(100_000, seed=5)
        assert ent_report(bits).to_records() == ent_report(bits).to_records()

    def test_entropy_at_most_eight(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = int(rng.integers(6, 2000))
            data = rng.integers(0, int(rng.integers(2, 257)), n).astype(np.uint8)
            report = ent_report(np.unpackbits(data))
            h = report.record("entropy_per_byte").statistic
            assert h <= 8.0 + 1e-12
            flat = np.bincount(data, minlength=256)
            if np.ptp(flat) == 0:
                assert h == pytest.approx(8.0)


class TestAutocorrelation:
    def test_lag_zero_reported_separately(self):
        result = autocorrelation(uniform_bits(20_000), 10)
        assert result.lag0 == 1.0
        assert result.coefficients.size == 10

    def test_alternating_pattern(self):
        bits = np.tile([0, 1], 5000).astype(np.uint8)
        result = autocorrelation(bits, 2)
        assert result.coefficients[0] == pytest.approx(-1.0)
        assert result.coefficients[1] == pytest.approx(1.0)

    def test_uniform_stream_within_bounds(self):
        result = autocorrelation(uniform_bits(1_000_000, seed=7), 100)
        assert result.bound_99 > 0
        assert result.excursions <= 3

    def test_too_short_rejected(self):
        with pytest.raises(ValueError, match="too short"):
            autocorrelation(uniform_bits(500), 100)

    def test_matches_direct_computation(self):
        bits = uniform_bits(5_000, seed=8)
        result = autocorrelation(bits, 5)
        x = bits.astype(np.float64)
        for k in range(1, 6):
            expected = np.corrcoef(x[:-k], x[k:])[0, 1]
            assert result.coefficients[k - 1] == pytest.approx(expected, abs=1e-12)


class TestMonobitRuns:
    def test_uniform_passes(self):
        monobit, runs = monobit_and_runs(uniform_bits(1_000_000, seed=9))
        assert monobit.p_value >= 0.01
        assert runs.p_value >= 0.01

    def test_all_ones_fails_monobit(self):
        monobit, runs = monobit_and_runs(np.ones(10_000, dtype=np.uint8))
        assert monobit.p_value == pytest.approx(0.0, abs=1e-12)
        assert monobit.verdict == "fail"
        assert runs.verdict == "fail"  # precondition gate

    def test_alternating_passes_monobit_fails_runs(self):
        bits = np.tile([0, 1], 5000).astype(np.uint8)
        monobit, runs = monobit_and_runs(bits)
        assert monobit.verdict == "pass"
        assert runs.p_value == pytest.approx(0.0, abs=1e-12)
        assert runs.verdict == "fail"

    def test_minimum_length(self):
        with pytest.raises(ValueError):
            monobit_and_runs(np.ones(50, dtype=np.uint8))


class TestProportionInterval:
    def test_reference_value(self):
        lower, upper = nist_proportion_interval(0.01, 1000)
        half = (upper - lower) / 2
        assert half == pytest.approx(0.0094392, abs=5e-8)
        assert (lower + upper) / 2 == pytest.approx(0.99)

    def test_small_sample(self):
        # 3 * sqrt(0.99 * 0.01 / 100) = 0.029850 (direct arithmetic)
        lower, upper = nist_proportion_interval(0.01, 100)
        assert (upper - lower) / 2 == pytest.approx(0.029850, abs=5e-7)

    def test_interval_collapses_with_samples(self):
        lower, upper = nist_proportion_interval(0.01, 10**12)
        assert upper - lower < 1e-5

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            nist_proportion_interval(0.0, 100)
        with pytest.raises(ValueError):
            nist_proportion_interval(0.01, 0)


class TestPValueUniformity:
    def test_uniform_p_values_pass(self):
        p = (np.arange(1000) + 0.5) / 1000
        record = p_value_decile_uniformity(p)
        assert record.verdict == "pass"

    def test_clustered_p_values_fail(self):
        record = p_value_decile_uniformity(np.full(1000, 0.05))
        assert record.verdict == "fail"

    def test_needs_enough_samples(self):
        with pytest.raises(ValueError):
            p_value_decile_uniformity([0.5])


class TestBattery:
    def test_uniform_stream_passes_battery(self):
        report = run_battery(uniform_bits(1_000_000, seed=10))
        assert report.passed, report.to_text()
        names = [r.name for r in report.records]
        assert "monobit" in names and "runs" in names
        assert any(n.startswith("autocorrelation") for n in names)

    def test_biased_stream_fails_battery(self):
        rng = np.random.default_rng(11)
        bits = (rng.random(1_000_000) < 0.53).astype(np.uint8)
        report = run_battery(bits)
        assert not report.passed

    def test_verdicts_derivable_from_threshold(self):
        report = run_battery(uniform_bits(200_000, seed=12))
        for record in report.records:
            assert record.threshold
            assert record.verdict in ("pass", "weak", "fail")


class TestExport:
    def test_ascii_alternating(self, tmp_path):
        bits = np.tile([1, 0], 8).astype(np.uint8)
        path = tmp_path / "bits.txt"
        export_for_external(bits, "ascii-01", path)
        assert path.read_text() == "1010101010101010"

    def test_raw_binary_round_trip(self, tmp_path):
        bits = uniform_bits(80_000, seed=13)
        path = tmp_path / "bits.bin"
        written = export_for_external(bits, "raw-binary", path)
        assert written == 10_000
        assert np.array_equal(import_external(path, "raw-binary"), bits)

    def test_ascii_round_trip(self, tmp_path):
        bits = uniform_bits(1003, seed=14)
        path = tmp_path / "bits.txt"
        export_for_external(bits, "ascii-01", path)
        assert np.array_equal(import_external(path, "ascii-01"), bits)

    def test_byte_count_exact(self, tmp_path):
        # 1e6 bits of which the final byte is padded: ceil(1e6 / 8) bytes
        bits = uniform_bits(1_000_003, seed=15)
        path = tmp_path / "big.bin"
        written = export_for_external(bits, "raw-binary", path)
        assert written == (1_000_003 + 7) // 8
        assert path.stat().st_size == written

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            export_for_external(np.ones(8, dtype=np.uint8), "hex", tmp_path / "x")

    def test_not_ascii_rejected(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("10a1")
        with pytest.raises(ValueError, match="ascii-01"):
            import_external(path, "ascii-01")
