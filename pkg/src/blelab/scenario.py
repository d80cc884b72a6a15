"""Scenario configuration: a strict JSON document that, together with the
seed, fully determines a run. Unknown keys are rejected."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import mitm as mitm_mod
from .detection import DetectorConfig
from .gatt import Uuid
from .pairing import IoCapability, PairingMode
from .radio import EMPIRICAL_RSSI_TABLE, PathLossParams


class ConfigInvalid(Exception):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


@dataclass(frozen=True)
class HrSourceConfig:
    kind: str = "constant"  # constant | walk
    bpm: int = 70
    seed: int = 42
    min_bpm: int = 60
    max_bpm: int = 100
    step_max: int = 3


@dataclass(frozen=True)
class MitmConfig:
    enabled: bool = False
    start_ms: int = 2000
    rules: tuple[mitm_mod.ModificationRule, ...] = ()
    manual_mode: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    duration_ms: int = 30_000
    pairing_mode: PairingMode = PairingMode.LEGACY_LE
    initiator_io: IoCapability = IoCapability.KEYBOARD_DISPLAY
    responder_io: IoCapability = IoCapability.NO_INPUT_NO_OUTPUT
    passkey: Optional[int] = None
    sensor_to_phone_m: float = 1.0
    attacker_to_phone_m: float = 0.5
    path_loss: Optional[PathLossParams] = None  # None means empirical table mode
    mitm: MitmConfig = MitmConfig()
    detector: DetectorConfig = DetectorConfig()
    rtt_probe_interval_ms: Optional[int] = None
    rtt_baseline_ms: int = 10
    notify_interval_ms: int = 1000
    hr_source: HrSourceConfig = HrSourceConfig()
    connect_delay_ms: int = 3000
    adv_interval_ms: int = 100
    supports_echo: bool = False
    always_discoverable: bool = True
    user_auth_present: bool = False
    end_to_end_security: bool = False

    @property
    def empirical_mode(self) -> bool:
        return self.path_loss is None

    def validate(self) -> None:
        errors = []
        if self.duration_ms <= 0:
            errors.append("duration_ms: must be positive")
        for name, value in (
            ("distances.sensor_to_phone", self.sensor_to_phone_m),
            ("distances.attacker_to_phone", self.attacker_to_phone_m),
        ):
            if value <= 0:
                errors.append(f"{name}: must be positive")
            elif self.empirical_mode and value not in EMPIRICAL_RSSI_TABLE:
                errors.append(
                    f"{name}: empirical mode requires one of {sorted(EMPIRICAL_RSSI_TABLE)}"
                )
        if self.passkey is not None and not 0 <= self.passkey <= 999_999:
            errors.append("passkey: must be a six-digit number")
        if self.notify_interval_ms <= 0:
            errors.append("notify_interval_ms: must be positive")
        if self.mitm.enabled and self.mitm.start_ms < 0:
            errors.append("mitm.start_ms: must be non-negative")
        if errors:
            raise ConfigInvalid(errors)

    def canonical_json(self) -> str:
        return json.dumps(config_to_dict(self), sort_keys=True)


def _require_keys(doc: dict, allowed: set[str], context: str, errors: list[str]) -> None:
    for key in doc:
        if key not in allowed:
            errors.append(f"{context}{key}: unknown key")


def _parse_transform(doc: dict, errors: list[str]) -> mitm_mod.Transform:
    kind = doc.get("type")
    if kind == "passthrough":
        return mitm_mod.Passthrough()
    if kind == "constant_override":
        return mitm_mod.ConstantOverride(bytes.fromhex(doc.get("bytes_hex", "")))
    if kind == "hr_override":
        return mitm_mod.HrOverride(int(doc.get("bpm", 0)))
    if kind == "hr_offset":
        return mitm_mod.HrOffset(int(doc.get("delta", 0)))
    errors.append(f"mitm.rules.transform.type: unknown type {kind!r}")
    return mitm_mod.Passthrough()


def _parse_rule(doc: dict, errors: list[str]) -> mitm_mod.ModificationRule:
    _require_keys(doc, {"uuid", "direction", "transform"}, "mitm.rules.", errors)
    try:
        direction = mitm_mod.Direction(doc.get("direction", "both"))
    except ValueError:
        errors.append(f"mitm.rules.direction: unknown direction {doc.get('direction')!r}")
        direction = mitm_mod.Direction.BOTH
    from .gatt import uuid as parse_uuid

    return mitm_mod.ModificationRule(
        match_uuid=parse_uuid(doc.get("uuid", "0x2a37")),
        direction=direction,
        transform=_parse_transform(doc.get("transform", {"type": "passthrough"}), errors),
    )


_TOP_KEYS = {
    "seed", "duration_ms", "pairing_mode", "initiator_io", "responder_io", "passkey",
    "distances", "path_loss", "mitm", "detector", "rtt_probe", "rtt_baseline_ms",
    "notify_interval_ms", "hr_source", "connect_delay_ms", "adv_interval_ms",
    "supports_echo", "always_discoverable", "user_auth_present", "end_to_end_security",
}


def config_from_dict(doc: dict[str, Any]) -> ScenarioConfig:
    errors: list[str] = []
    _require_keys(doc, _TOP_KEYS, "", errors)

    def enum_field(cls, key: str, default):
        raw = doc.get(key)
        if raw is None:
            return default
        try:
            return cls(raw)
        except ValueError:
            errors.append(f"{key}: unknown value {raw!r}")
            return default

    distances = doc.get("distances", {})
    _require_keys(distances, {"sensor_to_phone", "attacker_to_phone"}, "distances.", errors)

    path_loss_doc = doc.get("path_loss", "empirical")
    path_loss = None
    if path_loss_doc != "empirical":
        _require_keys(path_loss_doc, {"n", "a_dbm", "sigma_db"}, "path_loss.", errors)
        try:
            path_loss = PathLossParams(
                n=float(path_loss_doc.get("n", 1.0)),
                a_dbm=float(path_loss_doc.get("a_dbm", -60.8)),
                sigma_db=float(path_loss_doc.get("sigma_db", 0.0)),
            )
        except ValueError as exc:
            errors.append(f"path_loss: {exc}")

    mitm_doc = doc.get("mitm", {})
    _require_keys(mitm_doc, {"enabled", "start_ms", "rules", "manual_mode"}, "mitm.", errors)
    mitm_cfg = MitmConfig(
        enabled=bool(mitm_doc.get("enabled", False)),
        start_ms=int(mitm_doc.get("start_ms", 2000)),
        rules=tuple(_parse_rule(r, errors) for r in mitm_doc.get("rules", [])),
        manual_mode=bool(mitm_doc.get("manual_mode", False)),
    )

    det_doc = doc.get("detector", {})
    _require_keys(det_doc, {"k", "w", "z", "rho"}, "detector.", errors)
    try:
        detector = DetectorConfig(
            baseline_count=int(det_doc.get("k", 20)),
            window_size=int(det_doc.get("w", 5)),
            z_threshold=float(det_doc.get("z", 3.0)),
            rtt_factor=float(det_doc.get("rho", 1.5)),
        )
    except ValueError as exc:
        errors.append(f"detector: {exc}")
        detector = DetectorConfig()

    probe_doc = doc.get("rtt_probe")
    probe_interval = None
    if probe_doc is not None:
        _require_keys(probe_doc, {"interval_ms"}, "rtt_probe.", errors)
        probe_interval = int(probe_doc.get("interval_ms", 2000))

    hr_doc = doc.get("hr_source", {})
    _require_keys(hr_doc, {"kind", "bpm", "seed", "min_bpm", "max_bpm", "step_max"},
                  "hr_source.", errors)
    hr_source = HrSourceConfig(
        kind=hr_doc.get("kind", "constant"),
        bpm=int(hr_doc.get("bpm", 70)),
        seed=int(hr_doc.get("seed", 42)),
        min_bpm=int(hr_doc.get("min_bpm", 60)),
        max_bpm=int(hr_doc.get("max_bpm", 100)),
        step_max=int(hr_doc.get("step_max", 3)),
    )
    if hr_source.kind not in ("constant", "walk"):
        errors.append(f"hr_source.kind: unknown kind {hr_source.kind!r}")

    if errors:
        raise ConfigInvalid(errors)

    config = ScenarioConfig(
        seed=int(doc.get("seed", 0)),
        duration_ms=int(doc.get("duration_ms", 30_000)),
        pairing_mode=enum_field(PairingMode, "pairing_mode", PairingMode.LEGACY_LE),
        initiator_io=enum_field(IoCapability, "initiator_io", IoCapability.KEYBOARD_DISPLAY),
        responder_io=enum_field(IoCapability, "responder_io", IoCapability.NO_INPUT_NO_OUTPUT),
        passkey=doc.get("passkey"),
        sensor_to_phone_m=float(distances.get("sensor_to_phone", 1.0)),
        attacker_to_phone_m=float(distances.get("attacker_to_phone", 0.5)),
        path_loss=path_loss,
        mitm=mitm_cfg,
        detector=detector,
        rtt_probe_interval_ms=probe_interval,
        rtt_baseline_ms=int(doc.get("rtt_baseline_ms", 10)),
        notify_interval_ms=int(doc.get("notify_interval_ms", 1000)),
        hr_source=hr_source,
        connect_delay_ms=int(doc.get("connect_delay_ms", 3000)),
        adv_interval_ms=int(doc.get("adv_interval_ms", 100)),
        supports_echo=bool(doc.get("supports_echo", False)),
        always_discoverable=bool(doc.get("always_discoverable", True)),
        user_auth_present=bool(doc.get("user_auth_present", False)),
        end_to_end_security=bool(doc.get("end_to_end_security", False)),
    )
    if errors:
        raise ConfigInvalid(errors)
    config.validate()
    return config


def config_to_dict(config: ScenarioConfig) -> dict[str, Any]:
    def transform_doc(t: mitm_mod.Transform) -> dict:
        if isinstance(t, mitm_mod.ConstantOverride):
            return {"type": "constant_override", "bytes_hex": t.data.hex()}
        if isinstance(t, mitm_mod.HrOverride):
            return {"type": "hr_override", "bpm": t.bpm}
        if isinstance(t, mitm_mod.HrOffset):
            return {"type": "hr_offset", "delta": t.delta}
        return {"type": "passthrough"}

    return {
        "seed": config.seed,
        "duration_ms": config.duration_ms,
        "pairing_mode": config.pairing_mode.value,
        "initiator_io": config.initiator_io.value,
        "responder_io": config.responder_io.value,
        "passkey": config.passkey,
        "distances": {
            "sensor_to_phone": config.sensor_to_phone_m,
            "attacker_to_phone": config.attacker_to_phone_m,
        },
        "path_loss": "empirical"
        if config.path_loss is None
        else {
            "n": config.path_loss.n,
            "a_dbm": config.path_loss.a_dbm,
            "sigma_db": config.path_loss.sigma_db,
        },
        "mitm": {
            "enabled": config.mitm.enabled,
            "start_ms": config.mitm.start_ms,
            "rules": [
                {
                    "uuid": str(r.match_uuid),
                    "direction": r.direction.value,
                    "transform": transform_doc(r.transform),
                }
                for r in config.mitm.rules
            ],
            "manual_mode": config.mitm.manual_mode,
        },
        "detector": {
            "k": config.detector.baseline_count,
            "w": config.detector.window_size,
            "z": config.detector.z_threshold,
            "rho": config.detector.rtt_factor,
        },
        "rtt_probe": None
        if config.rtt_probe_interval_ms is None
        else {"interval_ms": config.rtt_probe_interval_ms},
        "rtt_baseline_ms": config.rtt_baseline_ms,
        "notify_interval_ms": config.notify_interval_ms,
        "hr_source": {
            "kind": config.hr_source.kind,
            "bpm": config.hr_source.bpm,
            "seed": config.hr_source.seed,
            "min_bpm": config.hr_source.min_bpm,
            "max_bpm": config.hr_source.max_bpm,
            "step_max": config.hr_source.step_max,
        },
        "connect_delay_ms": config.connect_delay_ms,
        "adv_interval_ms": config.adv_interval_ms,
        "supports_echo": config.supports_echo,
        "always_discoverable": config.always_discoverable,
        "user_auth_present": config.user_auth_present,
        "end_to_end_security": config.end_to_end_security,
    }


def load_config(path: "str | Path") -> ScenarioConfig:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigInvalid(["top level: expected a JSON object"])
    return config_from_dict(doc)
