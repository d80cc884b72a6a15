"""Detector tests: baseline fitting, the windowed z-test, RTT inflation,
and the Monte Carlo evaluation loop."""

import math
import random
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blelab.detection import (
    SIGMA_FLOOR_DB,
    AlertKind,
    DetectionMetrics,
    DetectorConfig,
    EvalScenario,
    InsufficientSamples,
    RssiDetector,
    evaluate,
    fit_baseline,
    metrics_csv,
    rtt_update,
)


class TestDetectorConfig:
    def test_defaults(self):
        cfg = DetectorConfig()
        assert (cfg.baseline_count, cfg.window_size, cfg.z_threshold, cfg.rtt_factor) == (
            20, 5, 3.0, 1.5,
        )

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"baseline_count": 1},
            {"window_size": 0},
            {"z_threshold": 0},
            {"rtt_factor": 1.0},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            DetectorConfig(**kwargs)


class TestFitBaseline:
    def test_known_values(self):
        baseline = fit_baseline([-60.0, -61.0, -62.0, -61.0])
        assert baseline.mu_dbm == pytest.approx(-61.0)
        assert baseline.sigma_db == pytest.approx(statistics.stdev([-60, -61, -62, -61]))
        assert baseline.sample_count == 4

    def test_uses_sample_stdev_divisor(self):
        baseline = fit_baseline([-60.0, -62.0])
        assert baseline.sigma_db == pytest.approx(math.sqrt(2.0))

    def test_statistical_recovery(self):
        rng = random.Random(5)
        samples = [rng.gauss(-60.8, 2.6) for _ in range(5000)]
        baseline = fit_baseline(samples)
        assert baseline.mu_dbm == pytest.approx(-60.8, abs=0.15)
        assert baseline.sigma_db == pytest.approx(2.6, abs=0.15)

    def test_insufficient(self):
        with pytest.raises(InsufficientSamples):
            fit_baseline([-60.0])
        with pytest.raises(InsufficientSamples):
            fit_baseline([-60.0, -61.0], expected_count=20)

    def test_expected_count_truncates(self):
        baseline = fit_baseline([-60.0, -62.0, -999.0], expected_count=2)
        assert baseline.mu_dbm == pytest.approx(-61.0)
        assert baseline.sample_count == 2


class TestRssiDetector:
    def _warm(self, detector, mu=-60.8, count=20):
        for _ in range(count):
            detector.update(mu)
        return detector

    def test_no_alert_during_baseline(self):
        detector = RssiDetector(DetectorConfig())
        for i in range(19):
            assert detector.update(-20.0, i) is None
        assert detector.baseline is None

    def test_baseline_freezes_after_k(self):
        detector = self._warm(RssiDetector(DetectorConfig()))
        assert detector.baseline is not None
        assert detector.baseline.mu_dbm == pytest.approx(-60.8)

    def test_threshold_arithmetic(self):
        cfg = DetectorConfig()
        detector = RssiDetector(cfg, clamp_sigma=False)
        rng = random.Random(0)
        for _ in range(20):
            detector.update(rng.gauss(-60.8, 2.6))
        mu = detector.baseline.mu_dbm
        sigma = detector.baseline.sigma_db
        assert detector.threshold_dbm == pytest.approx(mu + 3.0 * sigma / math.sqrt(5))

    def test_alert_on_sustained_increase(self):
        detector = self._warm(RssiDetector(DetectorConfig(), clamp_sigma=False))
        # noiseless baseline with sigma clamp off: any increase trips once
        # the window fills
        alerts = [detector.update(-52.8, t) for t in range(5)]
        assert alerts[:4] == [None] * 4
        assert alerts[4] is not None
        assert alerts[4].kind is AlertKind.RSSI_INCREASE
        assert alerts[4].score == math.inf

    def test_sigma_clamp_bounds_noiseless_score(self):
        detector = self._warm(RssiDetector(DetectorConfig()))
        for t in range(4):
            detector.update(-52.8, t)
        alert = detector.update(-52.8, 4)
        assert alert is not None and math.isfinite(alert.score)
        scale = SIGMA_FLOOR_DB / math.sqrt(5)
        expected = (-52.8 - (-60.8 + 3.0 * scale)) / scale
        assert alert.score == pytest.approx(expected)

    def test_decrease_never_alerts(self):
        detector = self._warm(RssiDetector(DetectorConfig()))
        assert all(detector.update(-80.0, t) is None for t in range(50))

    def test_single_spike_is_absorbed_by_window(self):
        rng = random.Random(1)
        detector = RssiDetector(DetectorConfig())
        for _ in range(20):
            detector.update(rng.gauss(-60.8, 2.6))
        assert detector.update(-20.0) is None  # window not yet full
        for _ in range(10):
            outcome = detector.update(rng.gauss(-60.8, 2.6))
        # the spike left the window; steady baseline stays quiet
        assert outcome is None

    @given(offset=st.floats(min_value=-40, max_value=40))
    @settings(max_examples=25, deadline=None)
    def test_translation_covariance(self, offset):
        rng_a = random.Random(33)
        rng_b = random.Random(33)
        det_a = RssiDetector(DetectorConfig())
        det_b = RssiDetector(DetectorConfig())
        hits_a, hits_b = [], []
        for t in range(120):
            mu = -60.8 if t < 100 else -52.8
            sample = rng_a.gauss(mu, 2.6)
            assert sample == rng_b.gauss(mu, 2.6)
            hits_a.append(det_a.update(sample, t) is not None)
            hits_b.append(det_b.update(sample + offset, t) is not None)
        assert hits_a == hits_b

    def test_higher_z_alerts_no_more_often(self):
        def alert_count(z):
            rng = random.Random(77)
            detector = RssiDetector(DetectorConfig(z_threshold=z))
            hits = 0
            for t in range(220):
                mu = -60.8 if t < 200 else -52.8
                if detector.update(rng.gauss(mu, 2.6), t) is not None:
                    hits += 1
            return hits

        counts = [alert_count(z) for z in (1.0, 2.0, 3.0, 4.0)]
        assert counts == sorted(counts, reverse=True)


class TestRttUpdate:
    CFG = DetectorConfig()

    def test_direct_rtt_quiet(self):
        assert rtt_update(self.CFG, 10, 10) is None
        assert rtt_update(self.CFG, 15, 10) is None  # exactly rho * baseline

    def test_inflated_rtt_alerts(self):
        alert = rtt_update(self.CFG, 22, 10, time_ms=123)
        assert alert is not None
        assert alert.kind is AlertKind.RTT_INFLATION
        assert alert.time_ms == 123
        assert alert.score == pytest.approx(22 / 10 - 1.5)

    @given(
        baseline=st.floats(min_value=1, max_value=100),
        factor=st.floats(min_value=0.1, max_value=5),
    )
    @settings(max_examples=50)
    def test_threshold_boundary_property(self, baseline, factor):
        sample = baseline * factor
        alert = rtt_update(self.CFG, sample, baseline)
        assert (alert is not None) == (sample > 1.5 * baseline)


class TestEvaluate:
    def test_separated_distributions_detect_reliably(self):
        metrics = evaluate(EvalScenario(), runs=50, seed_base=0)
        assert metrics.true_positive_rate == 1.0
        assert metrics.runs == 50
        assert metrics.mean_time_to_detect_ms < 30_000

    def test_identical_distributions_give_chance_level(self):
        scenario = EvalScenario(attack_mu=-60.8, attack_sigma=2.6)
        metrics = evaluate(scenario, runs=50, seed_base=0)
        # the "attack" phase is statistically indistinguishable from clean
        # traffic, so detections are rare
        assert metrics.true_positive_rate < 0.3

    def test_per_window_rate_matches_gaussian_tail(self):
        metrics = evaluate(EvalScenario(), runs=300, seed_base=0)
        # analytic per-window false-alert rate for z=3 is about 0.00135
        assert 0.0005 <= metrics.false_alert_rate_per_window <= 0.003

    def test_deterministic_in_seed_base(self):
        a = evaluate(EvalScenario(), runs=20, seed_base=5)
        b = evaluate(EvalScenario(), runs=20, seed_base=5)
        assert a == b

    def test_runs_validated(self):
        with pytest.raises(ValueError):
            evaluate(EvalScenario(), runs=0)

    def test_metrics_rate_bounds_enforced(self):
        with pytest.raises(ValueError):
            DetectionMetrics(
                true_positive_rate=1.2, false_positive_rate=0.0,
                mean_time_to_detect_ms=0.0, runs=1,
            )


class TestMetricsCsv:
    def test_schema(self):
        metrics = evaluate(EvalScenario(), runs=5, seed_base=0)
        text = metrics_csv(metrics, DetectorConfig())
        lines = text.strip().split("\n")
        assert lines[0] == "runs,tpr,fpr,mean_ttd_ms,z,w,k"
        fields = lines[1].split(",")
        assert fields[0] == "5"
        assert fields[4:] == ["3.0", "5", "20"]
