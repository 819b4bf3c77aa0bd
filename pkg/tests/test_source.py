"""Source simulation tests against analytic oracles."""
import math

import numpy as np
import pytest
from scipy import integrate, stats as sps

from qrngkit.source import (
    ArrivalStream,
    Origin,
    SourceConfig,
    apply_detector,
    arrival_density_gamma,
    generate_photon_arrivals,
    interarrival_from_uniform,
    sample_interarrival,
    simulate,
    simulate_detections,
    window_count_pmf,
)

RATE_07 = 0.7 / 16384e-12  # detected mean 0.7 per 16.384 ns period


def ideal_config(seed=42, rate=RATE_07, **kw):
    defaults = dict(
        photon_rate_hz=rate,
        detector_efficiency=1.0,
        dead_time_ps=16384,
        dark_rate_hz=0.0,
        jitter_sigma_ps=0.0,
        clock_period_ps=16384,
        bin_count=256,
        sim_seed=seed,
    )
    defaults.update(kw)
    return SourceConfig(**defaults)


class TestInterarrival:
    def test_mean_interval_at_unit_resolution(self):
        # u = 1/e makes -ln(u)/rate exactly the mean interval
        assert interarrival_from_uniform(1.0 / math.e, 1e12) == 1

    def test_known_quantile(self):
        # -ln(0.5)/1e9 Hz = 693.1 ns
        assert interarrival_from_uniform(0.5, 1e9) == round(math.log(2) * 1e3)

    def test_rejects_bad_rate(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_interarrival(0.0, rng)
        with pytest.raises(ValueError):
            sample_interarrival(-1.0, rng)
        with pytest.raises(ValueError, match="resolution"):
            sample_interarrival(2e12, rng)

    def test_rejects_bad_uniform(self):
        with pytest.raises(ValueError):
            interarrival_from_uniform(0.0, 1e9)
        with pytest.raises(ValueError):
            interarrival_from_uniform(1.5, 1e9)

    def test_empirical_mean_matches_rate(self):
        # law of large numbers: 1e6 draws within 1% of 1/lambda
        rng = np.random.default_rng(3)
        rate = 5e8
        deltas = sample_interarrival(rate, rng, 1_000_000)
        assert abs(deltas.mean() - 1e12 / rate) / (1e12 / rate) < 0.01

    def test_operating_point_mean_interval(self):
        # eta*lambda*T = 0.7 at efficiency 0.38 puts the detected rate at
        # 42.7e6 Hz, whose mean interval is 23419 ps
        rate = 42.7e6
        assert round(1e12 / rate) == 23419
        rng = np.random.default_rng(4)
        deltas = sample_interarrival(rate, rng, 500_000)
        assert abs(deltas.mean() - 23419) / 23419 < 0.01


class TestPoissonArrivals:
    def test_window_count_frequencies(self):
        # per-window count frequencies for n = 0, 1, 2 within 3 binomial sigma
        cfg = ideal_config()
        n_periods = 1_000_000
        arr = generate_photon_arrivals(cfg, n_periods * 16384)
        per_period = np.bincount(arr // 16384, minlength=n_periods)
        freq = np.bincount(per_period)
        for n in (0, 1, 2):
            p = window_count_pmf(n, cfg.photon_rate_hz, 16384)
            sigma = math.sqrt(p * (1 - p) / n_periods)
            assert abs(freq[n] / n_periods - p) < 3 * sigma, f"count {n} off"

    def test_count_histogram_chi_square(self):
        cfg = ideal_config(seed=9)
        n_periods = 1_000_000
        arr = generate_photon_arrivals(cfg, n_periods * 16384)
        per_period = np.bincount(arr // 16384, minlength=n_periods)
        observed = np.bincount(per_period, minlength=7)[:7].astype(float)
        expected = np.array(
            [window_count_pmf(n, cfg.photon_rate_hz, 16384) for n in range(7)]
        ) * n_periods
        # fold the tail into the last cell
        observed[-1] += n_periods - observed.sum()
        expected[-1] += n_periods - expected.sum()
        _, p = sps.chisquare(observed, expected)
        assert p > 0.01

    def test_epoch_distribution_kolmogorov_smirnov(self):
        # sums of n consecutive inter-arrivals are gamma(n, 1/lambda) draws
        rng = np.random.default_rng(11)
        rate = 42.7e6
        trials = 100_000
        for n in (1, 2, 5):
            deltas = sample_interarrival(rate, rng, trials * n).reshape(trials, n)
            epochs = deltas.sum(axis=1)
            d, _ = sps.kstest(epochs, sps.gamma(a=n, scale=1e12 / rate).cdf)
            assert d < 0.01, f"KS distance {d} too large for epoch {n}"

    def test_empty_for_zero_duration(self):
        assert generate_photon_arrivals(ideal_config(), 0).size == 0

    def test_short_duration_may_be_empty(self):
        arr = generate_photon_arrivals(ideal_config(rate=1e3), 1000)
        assert arr.size == 0

    def test_strictly_increasing(self):
        arr = generate_photon_arrivals(ideal_config(), 10_000_000)
        assert np.all(np.diff(arr) >= 1)


class TestGammaDensity:
    def test_shape_one_is_exponential(self):
        for lam, t in [(1.0, 0.3), (2.5, 1.2), (0.2, 4.0)]:
            assert arrival_density_gamma(1, lam, t) == pytest.approx(lam * math.exp(-lam * t))

    def test_shape_two_unit_rate(self):
        assert arrival_density_gamma(2, 1.0, 1.0) == pytest.approx(math.exp(-1), abs=1e-12)

    def test_normalization_by_quadrature(self):
        for n, lam in [(1, 1.0), (3, 0.5), (5, 2.0)]:
            total, _ = integrate.quad(lambda t: arrival_density_gamma(n, lam, t), 0, np.inf)
            assert abs(total - 1.0) < 1e-9

    def test_rejects_zero_epoch(self):
        with pytest.raises(ValueError):
            arrival_density_gamma(0, 1.0, 1.0)

    def test_t_zero(self):
        assert arrival_density_gamma(1, 2.0, 0.0) == 2.0
        assert arrival_density_gamma(3, 2.0, 0.0) == 0.0


class TestDetectorPipeline:
    def test_identity_configuration(self):
        cfg = ideal_config(dead_time_ps=0, allow_short_dead_time=True)
        arr = generate_photon_arrivals(cfg, 5_000_000)
        out = apply_detector(arr, cfg, 5_000_000)
        assert np.array_equal(out.timestamps_ps, arr)
        assert np.all(out.origins == Origin.PHOTON)

    def test_zero_efficiency_gives_empty_stream(self):
        cfg = ideal_config(detector_efficiency=0.0)
        arr = generate_photon_arrivals(cfg, 5_000_000)
        out = apply_detector(arr, cfg, 5_000_000)
        assert out.count == 0

    def test_rejects_unsorted_arrivals(self):
        cfg = ideal_config()
        with pytest.raises(ValueError, match="sorted"):
            apply_detector(np.array([100, 50]), cfg, 1000)

    def test_single_detection_per_period(self):
        # efficiency 0.38, detected mean 0.7 per period, dead time 24 ns > T:
        # no two accepted events may share a clock period
        cfg = ideal_config(
            rate=0.7 / (0.38 * 16384e-12), detector_efficiency=0.38, dead_time_ps=24000
        )
        stream = simulate(cfg, 2_000_000_000)
        periods = stream.timestamps_ps // 16384
        assert stream.count > 10_000
        assert np.all(np.diff(periods) >= 1)

    def test_dead_time_gap_invariant(self):
        cfg = ideal_config(
            rate=0.7 / (0.38 * 16384e-12),
            detector_efficiency=0.38,
            dead_time_ps=24000,
            dark_rate_hz=64.0,
            jitter_sigma_ps=150.0,
            sim_seed=8,
        )
        stream = simulate(cfg, 2_000_000_000)
        stream.validate()
        assert np.diff(stream.timestamps_ps).min() >= 24000

    def test_dark_counts_are_tagged(self):
        cfg = ideal_config(rate=1e4, dark_rate_hz=5e4, sim_seed=21)
        stream = simulate(cfg, 10_000_000_000)
        assert stream.dark_count > 0
        assert set(np.unique(stream.origins)) <= {int(Origin.PHOTON), int(Origin.DARK)}

    def test_determinism_and_fused_equals_staged(self):
        cfg = ideal_config(
            rate=0.7 / (0.38 * 16384e-12),
            detector_efficiency=0.38,
            dead_time_ps=24000,
            dark_rate_hz=64.0,
            jitter_sigma_ps=100.0,
            sim_seed=77,
        )
        dur = 1_000_000_000
        a = simulate(cfg, dur)
        b = simulate(cfg, dur)
        staged = apply_detector(generate_photon_arrivals(cfg, dur), cfg, dur)
        for other in (b, staged):
            assert np.array_equal(a.timestamps_ps, other.timestamps_ps)
            assert np.array_equal(a.origins, other.origins)

    def test_simulate_detections_exact_count(self):
        stream = simulate_detections(ideal_config(seed=5), 10_000)
        assert stream.count == 10_000
        stream.validate()

    def test_event_iteration(self):
        stream = simulate_detections(ideal_config(seed=5), 50)
        events = list(stream.events())
        assert len(events) == 50
        assert events[0].timestamp_ps == int(stream.timestamps_ps[0])


class TestConfigValidation:
    def test_efficiency_range(self):
        with pytest.raises(ValueError):
            ideal_config(detector_efficiency=1.5)

    def test_bin_count_power_of_two(self):
        with pytest.raises(ValueError):
            ideal_config(bin_count=300)

    def test_period_divisible_by_bins(self):
        with pytest.raises(ValueError):
            ideal_config(clock_period_ps=20000, bin_count=256)

    def test_short_dead_time_needs_flag(self):
        with pytest.raises(ValueError, match="single-detection"):
            ideal_config(dead_time_ps=1000)
        cfg = ideal_config(dead_time_ps=1000, allow_short_dead_time=True)
        assert cfg.dead_time_ps == 1000

    def test_negative_rate(self):
        with pytest.raises(ValueError):
            ideal_config(dark_rate_hz=-1.0)
