"""Run orchestration: build a seeded world from a scenario config, execute
it, and emit event log, MitM journal, alerts, metrics and risk reports."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import detection, risk
from .actors import CentralDevice, ConstantSource, PeripheralDevice, SeededWalkSource
from .detection import DetectionMetrics, EvalScenario
from .mitm import MitmController
from .pairing import select_association
from .radio import (
    EMPIRICAL_RSSI_TABLE,
    PathLossParams,
    RadioLink,
    VirtualRadio,
    expected_rssi,
)
from .scenario import ConfigInvalid, ScenarioConfig

SENSOR_ID = "polar-h7"
PHONE_ID = "phone"


@dataclass
class RunResult:
    events_path: Optional[Path]
    journal_path: Optional[Path]
    alerts: list[detection.Alert]
    central_bpm: list[tuple[int, int]]
    peripheral_bpm: list[int]
    rtt_samples: list
    out_dir: Optional[Path] = None
    metrics: Optional[DetectionMetrics] = None


@dataclass
class World:
    """A fully wired scenario, ready to be advanced by the event queue."""

    config: ScenarioConfig
    net: VirtualRadio
    peripheral: PeripheralDevice
    central: CentralDevice
    attacker: Optional[MitmController] = None
    mitm_started: bool = False
    _extra: dict = field(default_factory=dict)

    def advance_to(self, t_ms: int) -> None:
        self.net.queue.run_until(t_ms)

    def run_to_end(self) -> None:
        self.advance_to(self.config.duration_ms)


def _make_source(config: ScenarioConfig):
    hr = config.hr_source
    if hr.kind == "constant":
        return ConstantSource(hr.bpm)
    return SeededWalkSource(hr.seed, hr.min_bpm, hr.max_bpm, hr.step_max)


def build_world(
    config: ScenarioConfig, auto_start_mitm: bool = True, force_attacker: bool = False
) -> World:
    """Wire devices, links and (optionally) the attacker. With
    auto_start_mitm the session clones and starts itself at mitm.start_ms;
    otherwise start is left to the control API."""
    config.validate()
    net = VirtualRadio(seed=config.seed)

    peripheral = PeripheralDevice(
        device_id=SENSOR_ID,
        hr_source=_make_source(config),
        notify_interval_ms=config.notify_interval_ms,
        adv_interval_ms=config.adv_interval_ms,
        io_capability=config.responder_io,
        supports_echo=config.supports_echo,
    )
    central = CentralDevice(
        device_id=PHONE_ID,
        io_capability=config.initiator_io,
        pairing_mode=config.pairing_mode,
        passkey=config.passkey,
        connect_delay_ms=config.connect_delay_ms,
        detector_config=config.detector,
        rtt_probe_interval_ms=config.rtt_probe_interval_ms,
        rtt_baseline_ms=config.rtt_baseline_ms,
    )
    net.add_device(peripheral)
    net.add_device(central)

    params = config.path_loss or PathLossParams()
    empirical = (
        EMPIRICAL_RSSI_TABLE[config.sensor_to_phone_m] if config.empirical_mode else None
    )
    net.add_link(
        RadioLink(
            SENSOR_ID,
            PHONE_ID,
            distance_m=config.sensor_to_phone_m,
            params=params,
            empirical=empirical,
        )
    )

    attacker = None
    if config.mitm.enabled or force_attacker:
        attacker = MitmController(
            net,
            target_id=SENSOR_ID,
            victim_id=PHONE_ID,
            pairing_mode=config.pairing_mode,
            attacker_distance_m=config.attacker_to_phone_m,
            rules=list(config.mitm.rules),
            manual_mode=config.mitm.manual_mode,
        )
        net.add_link(
            RadioLink(
                attacker.core.id,
                SENSOR_ID,
                distance_m=config.attacker_to_phone_m,
                params=params,
            )
        )

    world = World(config=config, net=net, peripheral=peripheral, central=central,
                  attacker=attacker)

    peripheral.start_advertising()
    central.start()

    if attacker is not None and config.mitm.enabled and auto_start_mitm:

        def start_attack() -> None:
            attacker.clone_target(peripheral.db)
            attacker.start_session()
            world.mitm_started = True

        net.queue.schedule(config.mitm.start_ms, start_attack)

    return world


def output_dir(config: ScenarioConfig, base: "str | Path" = "out") -> Path:
    digest = hashlib.sha256(config.canonical_json().encode()).hexdigest()[:12]
    return Path(base) / f"{digest}-{config.seed}"


def write_events(world: World, path: Path) -> None:
    with open(path, "w") as fh:
        for record in world.net.event_log:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_journal(world: World, path: Path) -> None:
    with open(path, "w") as fh:
        if world.attacker is not None:
            for entry in world.attacker.session.journal:
                fh.write(json.dumps(entry.to_record(), sort_keys=True) + "\n")


def run(config: ScenarioConfig, out_dir: "str | Path | None" = None) -> RunResult:
    """Execute one seeded simulation and emit events.jsonl + journal.jsonl."""
    world = build_world(config)
    world.run_to_end()
    out = Path(out_dir) if out_dir is not None else output_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    events_path = out / "events.jsonl"
    journal_path = out / "journal.jsonl"
    write_events(world, events_path)
    write_journal(world, journal_path)
    with open(out / "alerts.json", "w") as fh:
        json.dump(
            [
                {"time_ms": a.time_ms, "kind": a.kind.value, "score": a.score}
                for a in world.central.alerts
            ],
            fh,
            indent=2,
        )
    return RunResult(
        events_path=events_path,
        journal_path=journal_path,
        alerts=list(world.central.alerts),
        central_bpm=list(world.central.bpm_log),
        peripheral_bpm=list(world.peripheral.emitted_bpm),
        rtt_samples=list(world.central.rtt_samples),
        out_dir=out,
    )


def rssi_distribution(config: ScenarioConfig, distance_m: float) -> tuple[float, float]:
    """(mean, std) of the RSSI seen at the phone for a transmitter at the
    given distance, per the scenario's propagation mode."""
    if config.empirical_mode:
        if distance_m not in EMPIRICAL_RSSI_TABLE:
            raise ConfigInvalid([f"distance {distance_m}: not in the empirical table"])
        return EMPIRICAL_RSSI_TABLE[distance_m]
    params = config.path_loss
    assert params is not None
    return expected_rssi(distance_m, params), params.sigma_db


def montecarlo(
    config: ScenarioConfig,
    runs: int,
    seed_base: int = 0,
    out_dir: "str | Path | None" = None,
) -> DetectionMetrics:
    """Monte Carlo detector evaluation over synthetic RSSI streams drawn from
    the scenario's sensor/attacker distance distributions."""
    if runs < 1:
        raise ConfigInvalid(["runs: must be >= 1"])
    config.validate()
    baseline_mu, baseline_sigma = rssi_distribution(config, config.sensor_to_phone_m)
    attack_mu, attack_sigma = rssi_distribution(config, config.attacker_to_phone_m)
    scenario = EvalScenario(
        baseline_mu=baseline_mu,
        baseline_sigma=baseline_sigma,
        attack_mu=attack_mu,
        attack_sigma=attack_sigma,
        config=config.detector,
    )
    metrics = detection.evaluate(scenario, runs, seed_base)
    out = Path(out_dir) if out_dir is not None else output_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(detection.metrics_csv(metrics, config.detector))
    return metrics


def scenario_facts(config: ScenarioConfig) -> risk.ScenarioFacts:
    return risk.ScenarioFacts(
        pairing_mode=config.pairing_mode,
        association_method=select_association(config.initiator_io, config.responder_io),
        always_discoverable=config.always_discoverable,
        user_auth_present=config.user_auth_present,
        end_to_end_security=config.end_to_end_security,
    )


def assess(
    config: ScenarioConfig, out_dir: "str | Path | None" = None
) -> list[risk.VulnerabilityFinding]:
    """Static risk assessment of the scenario; writes report.json/report.txt."""
    config.validate()
    facts = scenario_facts(config)
    findings = risk.applicable_findings(facts)
    out = Path(out_dir) if out_dir is not None else output_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(risk.report_json(findings, facts))
    (out / "report.txt").write_text(risk.report_text(findings, facts))
    return findings
