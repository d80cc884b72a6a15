"""Acceptance suite: one test per headline criterion, each asserting the
stated tolerance and printing a single pass line with its measurements."""

import random
import statistics
import time

import pytest

from blelab import harness
from blelab.detection import EvalScenario, evaluate
from blelab.gatt import Uuid
from blelab.mitm import Direction, HrOverride, ModificationRule
from blelab.pairing import (
    JUST_WORKS,
    IoCapability,
    PairingMode,
    eavesdrop_recover,
    run_pairing,
    select_association,
)
from blelab.radio import (
    D_MIN_METERS,
    EMPIRICAL_RSSI_TABLE,
    PathLossParams,
    RadioLink,
    expected_rssi,
    sample_rssi,
)
from blelab.risk import Risk
from blelab.scenario import MitmConfig, ScenarioConfig


def attack_config(**kwargs):
    return ScenarioConfig(
        mitm=MitmConfig(
            enabled=True,
            start_ms=2000,
            rules=(
                ModificationRule(
                    Uuid.short(0x2A37), Direction.TO_CENTRAL, HrOverride(255)
                ),
            ),
        ),
        **kwargs,
    )


class Budget:
    """Wall-clock guard for a criterion's stated runtime bound."""

    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc == (None, None, None):
            assert self.elapsed < self.seconds, (
                f"runtime {self.elapsed:.1f}s exceeds {self.seconds}s budget"
            )


def test_association_matrix():
    with Budget(1):
        first = select_association(
            IoCapability.DISPLAY_ONLY, IoCapability.NO_INPUT_NO_OUTPUT
        )
        second = select_association(
            IoCapability.KEYBOARD_DISPLAY, IoCapability.NO_INPUT_NO_OUTPUT
        )
        assert first == JUST_WORKS and not first.authenticated
        assert second == JUST_WORKS and not second.authenticated
    print("PASS association matrix: both sensor pairings fall back to "
          "Just Works / unauthenticated")


def test_key_recovery_rates():
    with Budget(10) as budget:
        legacy_hits = 0
        for seed in range(200):
            keys, _, transcript = run_pairing(
                IoCapability.KEYBOARD_DISPLAY,
                IoCapability.NO_INPUT_NO_OUTPUT,
                PairingMode.LEGACY_LE,
                random.Random(seed),
            )
            if eavesdrop_recover(transcript) == keys.session_key:
                legacy_hits += 1
        sc_hits = 0
        for seed in range(200):
            keys, _, transcript = run_pairing(
                IoCapability.KEYBOARD_DISPLAY,
                IoCapability.NO_INPUT_NO_OUTPUT,
                PairingMode.SECURE_CONNECTIONS,
                random.Random(seed),
            )
            if eavesdrop_recover(transcript) == keys.session_key:
                sc_hits += 1
        assert legacy_hits == 200
        assert sc_hits == 0
    print(f"PASS key recovery: legacy 200/200, secure connections 0/200 "
          f"({budget.elapsed:.1f}s)")


def test_255_bpm_poc(tmp_path):
    with Budget(5):
        result = harness.run(attack_config(), out_dir=tmp_path)
        attacked = [bpm for t, bpm in result.central_bpm if t >= 2000]
        assert attacked and set(attacked) == {255}
        assert set(result.peripheral_bpm) == {70}
    print(f"PASS 255-bpm POC: victim saw 255 for all {len(attacked)} samples, "
          f"sensor kept emitting 70")


def test_rssi_model():
    with Budget(1):
        model_3m = expected_rssi(3.0, PathLossParams())
        assert model_3m == pytest.approx(-65.57, abs=0.01)
        assert abs(model_3m - (-66.0)) <= 1.0
        model_half_m = expected_rssi(0.5, PathLossParams())
        assert model_half_m == pytest.approx(-57.79, abs=0.01)
        deviation = abs(model_half_m - (-52.8))
        assert 4.0 < deviation < 6.0
    print(f"PASS RSSI model: -65.57 at 3 m, documented {deviation:.2f} dB "
          f"near-field deviation at 0.5 m")


def test_sampler_fidelity():
    with Budget(5):
        rng = random.Random(20_19)
        for distance, (mean, sigma) in sorted(EMPIRICAL_RSSI_TABLE.items()):
            link = RadioLink(
                "sensor", "phone",
                distance_m=max(distance, D_MIN_METERS),
                empirical=(mean, sigma),
            )
            samples = [sample_rssi(link, rng) for _ in range(10_000)]
            assert statistics.fmean(samples) == pytest.approx(mean, abs=0.1)
            assert statistics.stdev(samples) == pytest.approx(sigma, abs=0.15)
    print("PASS sampler fidelity: all four measured distances within "
          "0.1 dB mean / 0.15 dB std over 10k samples")


def test_detector_monte_carlo():
    with Budget(60) as budget:
        metrics = evaluate(EvalScenario(), runs=1000, seed_base=0)
        assert metrics.true_positive_rate >= 0.99
        assert 0.0005 <= metrics.false_alert_rate_per_window <= 0.003
    print(f"PASS detector Monte Carlo: TPR={metrics.true_positive_rate:.3f}, "
          f"per-window false-alert rate="
          f"{metrics.false_alert_rate_per_window:.5f} ({budget.elapsed:.1f}s)")


def test_rtt_inflation():
    with Budget(5):
        direct = harness.build_world(
            ScenarioConfig(supports_echo=True, rtt_probe_interval_ms=2000)
        )
        direct.run_to_end()
        direct_rtts = [s.rtt_ms for s in direct.central.rtt_samples if s.supported]
        assert direct_rtts and set(direct_rtts) == {10}
        assert not any(
            a.kind.value == "RttInflation" for a in direct.central.alerts
        )

        attacked = harness.build_world(
            attack_config(supports_echo=True, rtt_probe_interval_ms=2000)
        )
        attacked.run_to_end()
        mitm_rtts = [s.rtt_ms for s in attacked.central.rtt_samples if s.supported]
        assert mitm_rtts and set(mitm_rtts) == {22}
        rtt_alerts = [
            a for a in attacked.central.alerts if a.kind.value == "RttInflation"
        ]
        assert len(rtt_alerts) == len(mitm_rtts)
    print(f"PASS RTT inflation: direct 10 ms (quiet), proxied 22 ms with "
          f"{len(rtt_alerts)}/{len(mitm_rtts)} samples alerting")


def test_risk_report(tmp_path):
    with Budget(1):
        findings = harness.assess(ScenarioConfig(), out_dir=tmp_path)
        assert [f.risk for f in findings] == [
            Risk.CRITICAL, Risk.CRITICAL, Risk.HIGH, Risk.MEDIUM, Risk.HIGH,
        ]
        assert [f.title for f in findings] == [
            "Low energy legacy pairing provides no passive eavesdropping protection.",
            "The Just Works pairing method provides no MITM protection.",
            "No user authentication exists.",
            "End-to-end security is not performed.",
            "Discoverable and/or connectable devices are prone to attack.",
        ]
        distinct_cells = {(f.likelihood, f.impact, f.risk) for f in findings}
        assert len(distinct_cells) == 3
    print("PASS risk report: 5 findings, risks "
          "(Critical, Critical, High, Medium, High), 3 distinct matrix cells")


def test_determinism(tmp_path):
    with Budget(10) as budget:
        config = attack_config(seed=7)
        first = harness.run(config, out_dir=tmp_path / "a")
        second = harness.run(config, out_dir=tmp_path / "b")
        assert first.events_path.read_bytes() == second.events_path.read_bytes()
        assert first.journal_path.read_bytes() == second.journal_path.read_bytes()
    print(f"PASS determinism: byte-identical events.jsonl and journal.jsonl "
          f"({budget.elapsed:.1f}s)")
