"""Victim device behaviors: the heart-rate peripheral and the mobile-app
central, glued to the virtual radio through GATT ops over encrypted frames."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Optional

from . import gatt, pairing, radio
from .detection import Alert, DetectorConfig, RssiDetector, rtt_update
from .gatt import GattOp, OpKind
from .pairing import IoCapability, PairingMode
from .radio import Connection, Device, Frame, FrameKind, GapRole, VirtualRadio

DEFAULT_NOTIFY_INTERVAL_MS = 1000
CONNECT_RETRY_MS = 200

ECHO_SUPPORTED = b"\x01"
ECHO_REFUSED = b"\x00"


class ActorError(Exception):
    pass


class Unsupported(ActorError):
    pass


# --- GATT op wire form: kind byte + 16-bit uuid (big-endian) + value -------

_KIND_CODES = {k: i for i, k in enumerate(OpKind)}
_KIND_FROM_CODE = {i: k for k, i in _KIND_CODES.items()}


def op_to_bytes(op: GattOp) -> bytes:
    short = op.target_uuid.short_form
    if short is None:
        raise ValueError("wire form supports 16-bit uuids only")
    return bytes([_KIND_CODES[op.kind]]) + short.to_bytes(2, "big") + op.payload


def op_from_bytes(data: bytes, op_id: int = 0) -> GattOp:
    if len(data) < 3:
        raise ValueError("truncated GATT op")
    return GattOp(
        kind=_KIND_FROM_CODE[data[0]],
        target_uuid=gatt.Uuid.short(int.from_bytes(data[1:3], "big")),
        payload=data[3:],
        op_id=op_id,
    )


class HeartRateSource:
    def next_bpm(self) -> int:  # pragma: no cover
        raise NotImplementedError


@dataclass
class ConstantSource(HeartRateSource):
    bpm: int

    def next_bpm(self) -> int:
        return self.bpm


class SeededWalkSource(HeartRateSource):
    """Random walk clamped to [min_bpm, max_bpm], driven by its own seed so
    heart-rate values are independent of radio noise draws."""

    def __init__(self, seed: int, min_bpm: int = 60, max_bpm: int = 100, step_max: int = 3):
        if min_bpm > max_bpm:
            raise ValueError("min_bpm must not exceed max_bpm")
        self.min_bpm = min_bpm
        self.max_bpm = max_bpm
        self.step_max = step_max
        self._rng = random.Random(seed)
        self._bpm = (min_bpm + max_bpm) // 2

    def next_bpm(self) -> int:
        self._bpm += self._rng.randint(-self.step_max, self.step_max)
        self._bpm = min(self.max_bpm, max(self.min_bpm, self._bpm))
        return self._bpm


class GattServerDevice(Device):
    """Shared peripheral-side behavior: advertise, accept one connection,
    pair as responder, and serve GATT ops."""

    def __init__(
        self,
        device_id: str,
        db: gatt.AttributeDatabase,
        adv_data: bytes,
        gap_role: GapRole = GapRole.PERIPHERAL,
        address: Optional[str] = None,
        adv_interval_ms: int = radio.DEFAULT_ADV_INTERVAL_MS,
        io_capability: IoCapability = IoCapability.NO_INPUT_NO_OUTPUT,
        supports_echo: bool = False,
    ):
        super().__init__(device_id, gap_role, address)
        self.db = db
        self.adv_data = adv_data
        self.adv_interval_ms = adv_interval_ms
        self.io_capability = io_capability
        self.supports_echo = supports_echo
        self.connection: Optional[Connection] = None
        self.advertising = False

    @property
    def connectable(self) -> bool:
        return self.gap_role is GapRole.PERIPHERAL

    def start_advertising(self) -> None:
        assert self.radio is not None
        self.advertising = True
        radio.advertise(
            self,
            self.radio,
            interval_ms=self.adv_interval_ms,
            adv_payload=self.adv_data,
            stop_when=lambda: not self.advertising,
        )

    def on_frame(self, frame: Frame, rssi_dbm: Optional[float]) -> None:
        assert self.radio is not None
        if frame.kind is FrameKind.CONNECT_REQ:
            if not (self.connectable and self.advertising and self.connection is None):
                return  # busy or not connectable; requester will retry/rescan
            conn = self.radio.make_connection(frame.sender, self.id)
            self.connection = conn
            self.advertising = False
            central = self.radio.devices[frame.sender]
            self.on_connected(conn)
            self.radio.queue.schedule_in(
                conn.link.one_way_latency_ms, lambda: central.on_connected(conn)
            )
            return
        if self.connection is None or frame.sender != self.connection.peer_of(self.id):
            return
        if frame.kind is FrameKind.ECHO_REQ:
            payload = ECHO_SUPPORTED if self.supports_echo else ECHO_REFUSED
            self.radio.send(
                Frame(FrameKind.ECHO_RSP, self.id, frame.sender, payload=payload,
                      meta=dict(frame.meta))
            )
            return
        if frame.kind is FrameKind.DATA:
            plaintext = pairing.decrypt_link(
                self.connection.session_key,
                self.connection.next_counter(f"rx:{frame.sender}"),
                frame.payload,
            )
            self.handle_gatt(op_from_bytes(plaintext), frame)

    def handle_gatt(self, op: GattOp, frame: Frame) -> None:
        response = gatt.apply_gatt_op(self.db, op)
        if op.kind is OpKind.SUBSCRIBE:
            self.on_subscribed(op.target_uuid)
        if response is not None:
            self.send_gatt(response)

    def on_subscribed(self, uuid: gatt.Uuid) -> None:  # pragma: no cover
        pass

    def send_gatt(self, op: GattOp) -> None:
        assert self.radio is not None and self.connection is not None
        peer = self.connection.peer_of(self.id)
        ciphertext = pairing.encrypt_link(
            self.connection.session_key,
            self.connection.next_counter(f"tx:{self.id}"),
            op_to_bytes(op),
        )
        self.radio.send(Frame(FrameKind.DATA, self.id, peer, payload=ciphertext))


class PeripheralDevice(GattServerDevice):
    """Polar-H7-like heart-rate sensor."""

    def __init__(
        self,
        device_id: str = "polar-h7",
        name: str = "PolarSim H7",
        hr_source: Optional[HeartRateSource] = None,
        notify_interval_ms: int = DEFAULT_NOTIFY_INTERVAL_MS,
        **kwargs,
    ):
        super().__init__(
            device_id,
            db=gatt.build_heart_rate_profile(),
            adv_data=name.encode(),
            **kwargs,
        )
        self.name = name
        self.hr_source = hr_source or ConstantSource(70)
        self.notify_interval_ms = notify_interval_ms
        self.emitted_bpm: list[int] = []
        self._ticking = False

    def on_subscribed(self, uuid: gatt.Uuid) -> None:
        if uuid == gatt.Uuid.short(gatt.HEART_RATE_MEASUREMENT) and not self._ticking:
            self._ticking = True
            assert self.radio is not None
            self.radio.queue.schedule_in(self.notify_interval_ms, self._tick)

    def _tick(self) -> None:
        assert self.radio is not None
        char = self.db.find(gatt.HEART_RATE_MEASUREMENT)
        if self.connection is None or not char.subscribed:
            self._ticking = False
            return
        bpm = self.hr_source.next_bpm()
        self.emitted_bpm.append(bpm)
        payload = gatt.encode_hr_measurement(gatt.HeartRateMeasurement(bpm=bpm))
        char.value = payload
        self.send_gatt(GattOp(OpKind.NOTIFY, char.uuid, payload))
        self.radio.queue.schedule_in(self.notify_interval_ms, self._tick)


@dataclass
class RttSample:
    time_ms: int
    rtt_ms: Optional[int]  # None when the peripheral refused the echo
    supported: bool


class CentralDevice(Device):
    """Mobile-app central: scans, connects, pairs, subscribes to the
    heart-rate stream, and runs the RSSI/RTT monitors."""

    def __init__(
        self,
        device_id: str = "phone",
        io_capability: IoCapability = IoCapability.KEYBOARD_DISPLAY,
        pairing_mode: PairingMode = PairingMode.LEGACY_LE,
        passkey: Optional[int] = None,
        connect_delay_ms: int = 0,
        detector_config: Optional[DetectorConfig] = None,
        rtt_probe_interval_ms: Optional[int] = None,
        rtt_baseline_ms: Optional[int] = None,
    ):
        super().__init__(device_id, GapRole.CENTRAL)
        self.io_capability = io_capability
        self.pairing_mode = pairing_mode
        self.passkey = passkey
        self.connect_delay_ms = connect_delay_ms
        self.detector = RssiDetector(detector_config) if detector_config else None
        self.rtt_probe_interval_ms = rtt_probe_interval_ms
        self.rtt_baseline_ms = rtt_baseline_ms
        self.rtt_config = detector_config or DetectorConfig()
        self.auto_subscribe = True
        self.target_id: Optional[str] = None

        self.connection: Optional[Connection] = None
        self.transcript: Optional[pairing.PairingTranscript] = None
        self.keys: Optional[pairing.KeyMaterial] = None
        self.subscribed = False
        self.peer_address: Optional[str] = None
        self.bpm_log: list[tuple[int, int]] = []  # (time_ms, bpm)
        self.rssi_trace: list[tuple[int, float]] = []
        self.alerts: list[Alert] = []
        self.rtt_samples: list[RttSample] = []
        self.pairing_error: Optional[Exception] = None
        self.on_rssi: Optional[Callable[[int, float], None]] = None
        self.on_alert: Optional[Callable[[Alert], None]] = None
        self._connecting_to: Optional[str] = None
        self._ready_to_connect = False
        self._echo_sent_at: dict[int, int] = {}
        self._next_probe_id = 0

    def start(self) -> None:
        assert self.radio is not None
        self.scanning = True
        self.radio.queue.schedule_in(self.connect_delay_ms, self._mark_ready)

    def _mark_ready(self) -> None:
        self._ready_to_connect = True

    def _observe_rssi(self, rssi_dbm: Optional[float]) -> None:
        if rssi_dbm is None or self.detector is None:
            return
        assert self.radio is not None
        self.rssi_trace.append((self.radio.now_ms, rssi_dbm))
        if self.on_rssi is not None:
            self.on_rssi(self.radio.now_ms, rssi_dbm)
        alert = self.detector.update(rssi_dbm, self.radio.now_ms)
        if alert is not None:
            self.alerts.append(alert)
            if self.on_alert is not None:
                self.on_alert(alert)

    def on_frame(self, frame: Frame, rssi_dbm: Optional[float]) -> None:
        assert self.radio is not None
        if frame.kind is FrameKind.ADV_IND:
            self._observe_rssi(rssi_dbm)
            if (
                self._ready_to_connect
                and self.connection is None
                and self._connecting_to is None
                and (self.target_id is None or frame.sender == self.target_id)
            ):
                self._initiate_connect(frame.sender)
            return
        if self.connection is None or frame.sender != self.connection.peer_of(self.id):
            return
        if frame.kind is FrameKind.ECHO_RSP:
            self._handle_echo_rsp(frame)
            return
        if frame.kind is FrameKind.DATA:
            self._observe_rssi(rssi_dbm)
            plaintext = pairing.decrypt_link(
                self.connection.session_key,
                self.connection.next_counter(f"rx:{frame.sender}"),
                frame.payload,
            )
            self._handle_gatt(op_from_bytes(plaintext))

    def _initiate_connect(self, target_id: str) -> None:
        assert self.radio is not None
        self._connecting_to = target_id
        self.radio.send(Frame(FrameKind.CONNECT_REQ, self.id, target_id))
        self.radio.queue.schedule_in(CONNECT_RETRY_MS, self._retry_if_unconnected)

    def _retry_if_unconnected(self) -> None:
        # Lost the race (peripheral accepted someone else): resume scanning.
        if self.connection is None:
            self._connecting_to = None

    def on_connected(self, conn: Connection) -> None:
        assert self.radio is not None
        self.connection = conn
        self.scanning = False
        peer = self.radio.devices[conn.peer_of(self.id)]
        self.peer_address = peer.address
        try:
            self.keys, _, self.transcript = pairing.run_pairing(
                initiator_io=self.io_capability,
                responder_io=getattr(peer, "io_capability", IoCapability.NO_INPUT_NO_OUTPUT),
                mode=self.pairing_mode,
                rng=self.radio.rng,
                initiator_passkey=self.passkey,
                responder_passkey=getattr(peer, "expected_passkey", self.passkey),
            )
        except pairing.PairingError as exc:
            self.pairing_error = exc
            self.connection = None
            return
        conn.session_key = self.keys.session_key
        if self.auto_subscribe:
            self.send_gatt(GattOp(OpKind.SUBSCRIBE, gatt.Uuid.short(gatt.HEART_RATE_MEASUREMENT)))
            self.subscribed = True
        if self.rtt_probe_interval_ms is not None:
            self.radio.queue.schedule_in(self.rtt_probe_interval_ms, self._rtt_probe_tick)

    def send_gatt(self, op: GattOp) -> None:
        assert self.radio is not None and self.connection is not None
        peer = self.connection.peer_of(self.id)
        ciphertext = pairing.encrypt_link(
            self.connection.session_key,
            self.connection.next_counter(f"tx:{self.id}"),
            op_to_bytes(op),
        )
        self.radio.send(Frame(FrameKind.DATA, self.id, peer, payload=ciphertext))

    def _handle_gatt(self, op: GattOp) -> None:
        assert self.radio is not None
        if op.kind is OpKind.NOTIFY and op.target_uuid == gatt.Uuid.short(
            gatt.HEART_RATE_MEASUREMENT
        ):
            measurement = gatt.decode_hr_measurement(op.payload)
            self.bpm_log.append((self.radio.now_ms, measurement.bpm))

    # --- RTT probing -------------------------------------------------------

    def _rtt_probe_tick(self) -> None:
        assert self.radio is not None
        if self.connection is None:
            return
        probe_id = self._next_probe_id
        self._next_probe_id += 1
        self._echo_sent_at[probe_id] = self.radio.now_ms
        self.radio.send(
            Frame(
                FrameKind.ECHO_REQ,
                self.id,
                self.connection.peer_of(self.id),
                meta={"probe_id": probe_id},
            )
        )
        self.radio.queue.schedule_in(self.rtt_probe_interval_ms, self._rtt_probe_tick)

    def _handle_echo_rsp(self, frame: Frame) -> None:
        assert self.radio is not None
        probe_id = frame.meta.get("probe_id")
        sent_at = self._echo_sent_at.pop(probe_id, None)
        if sent_at is None:
            return
        if frame.payload == ECHO_REFUSED:
            self.rtt_samples.append(RttSample(self.radio.now_ms, None, supported=False))
            return
        rtt = self.radio.now_ms - sent_at
        self.rtt_samples.append(RttSample(self.radio.now_ms, rtt, supported=True))
        if self.rtt_baseline_ms is not None:
            alert = rtt_update(self.rtt_config, rtt, self.rtt_baseline_ms, self.radio.now_ms)
            if alert is not None:
                self.alerts.append(alert)
                if self.on_alert is not None:
                    self.on_alert(alert)


def central_connect_and_subscribe(
    central: CentralDevice, net: VirtualRadio, timeout_ms: int = 10_000
) -> Connection:
    """Drive the simulation until the central is subscribed; raises Timeout
    if nothing connectable shows up, or the underlying pairing error."""
    central.start()
    deadline = net.now_ms + central.connect_delay_ms + timeout_ms
    while net.now_ms < deadline:
        if not net.queue.step():
            break
        if central.pairing_error is not None:
            raise central.pairing_error
        if central.subscribed and central.connection is not None:
            return central.connection
    if central.pairing_error is not None:
        raise central.pairing_error
    raise radio.Timeout(f"{central.id}: no connection within {timeout_ms} ms")
