"""Active man-in-the-middle: an interception core (fake central toward the
real peripheral) and a proxy face (fake peripheral toward the real central),
with rule-based and manual on-the-fly modification plus a replay journal."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import gatt
from .actors import CentralDevice, GattServerDevice
from .gatt import GattOp, OpKind
from .pairing import IoCapability, PairingMode
from .radio import (
    EMPIRICAL_RSSI_TABLE,
    Frame,
    FrameKind,
    GapRole,
    PathLossParams,
    RadioLink,
    VirtualRadio,
)

FAKE_ADV_INTERVAL_MS = 20  # out-advertise the real peripheral
PROXY_PROCESSING_MS = 2  # applied on the victim -> peripheral crossing
HOLD_TIMEOUT_MS = 30_000
DEFAULT_ATTACKER_DISTANCE_M = 0.5


class MitmError(Exception):
    pass


class TargetNotObserved(MitmError):
    pass


class VictimAlreadyConnected(MitmError):
    pass


class UnknownOpId(MitmError):
    pass


class NotHeld(MitmError):
    pass


class SessionState(enum.Enum):
    CLONING = "Cloning"
    READY = "Ready"
    ACTIVE = "Active"
    STOPPED = "Stopped"


class Direction(enum.Enum):
    TO_CENTRAL = "toCentral"
    TO_PERIPHERAL = "toPeripheral"
    BOTH = "both"


# --- transforms ------------------------------------------------------------


class Transform:
    def apply(self, payload: bytes) -> bytes:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class Passthrough(Transform):
    def apply(self, payload: bytes) -> bytes:
        return payload


@dataclass(frozen=True)
class ConstantOverride(Transform):
    data: bytes

    def apply(self, payload: bytes) -> bytes:
        return self.data


@dataclass(frozen=True)
class HrOverride(Transform):
    bpm: int

    def apply(self, payload: bytes) -> bytes:
        m = gatt.decode_hr_measurement(payload)
        return gatt.encode_hr_measurement(
            gatt.HeartRateMeasurement(bpm=self.bpm, format=m.format, sensor_contact=m.sensor_contact)
        )


@dataclass(frozen=True)
class HrOffset(Transform):
    delta: int

    def apply(self, payload: bytes) -> bytes:
        m = gatt.decode_hr_measurement(payload)
        limit = 255 if m.format == "uint8" else 65535
        bpm = min(limit, max(0, m.bpm + self.delta))
        return gatt.encode_hr_measurement(
            gatt.HeartRateMeasurement(bpm=bpm, format=m.format, sensor_contact=m.sensor_contact)
        )


@dataclass(frozen=True)
class ModificationRule:
    match_uuid: gatt.Uuid
    direction: Direction
    transform: Transform

    def __post_init__(self) -> None:
        hr = gatt.Uuid.short(gatt.HEART_RATE_MEASUREMENT)
        if isinstance(self.transform, (HrOverride, HrOffset)) and self.match_uuid != hr:
            raise ValueError("heart-rate transforms apply to 0x2a37 only")

    def matches(self, uuid: gatt.Uuid, direction: Direction) -> bool:
        return self.match_uuid == uuid and self.direction in (direction, Direction.BOTH)


@dataclass(frozen=True)
class OpLogEntry:
    op_id: int
    time_ms: int
    direction: Direction
    uuid: gatt.Uuid
    before: bytes
    after: bytes
    decision: str  # auto | manual-forward | manual-modify | manual-drop | timeout-forward
    kind: OpKind = OpKind.NOTIFY  # internal, not exported

    def to_record(self) -> dict:
        return {
            "op_id": self.op_id,
            "time_ms": self.time_ms,
            "direction": self.direction.value,
            "uuid": str(self.uuid),
            "before_hex": self.before.hex(),
            "after_hex": self.after.hex(),
            "decision": self.decision,
        }


@dataclass
class HeldOp:
    op_id: int
    op: GattOp
    direction: Direction
    deadline_ms: int


@dataclass
class MitmSession:
    target_id: str
    fake_address: str
    state: SessionState = SessionState.CLONING
    rules: list[ModificationRule] = field(default_factory=list)
    journal: list[OpLogEntry] = field(default_factory=list)
    manual_mode: bool = False
    attacker_distance_to_central_m: float = DEFAULT_ATTACKER_DISTANCE_M
    hold_timeout_ms: int = HOLD_TIMEOUT_MS
    processing_ms: int = PROXY_PROCESSING_MS


class _FakePeripheral(GattServerDevice):
    """The proxy face: advertises the cloned identity and relays every GATT
    op from its victim through the controller."""

    def __init__(self, controller: "MitmController", db: gatt.AttributeDatabase, adv_data: bytes):
        super().__init__(
            device_id=f"{controller.session.target_id}-fake",
            db=db,
            adv_data=adv_data,
            gap_role=GapRole.PERIPHERAL,
            address=controller.session.fake_address,
            adv_interval_ms=FAKE_ADV_INTERVAL_MS,
            supports_echo=True,  # relays echoes; the real device decides
        )
        self.controller = controller

    def handle_gatt(self, op: GattOp, frame: Frame) -> None:
        if op.kind is OpKind.SUBSCRIBE:
            gatt.apply_gatt_op(self.db, op)  # keep the mirrored db honest
        self.controller.cross(op, Direction.TO_PERIPHERAL)

    def on_frame(self, frame: Frame, rssi_dbm: Optional[float]) -> None:
        if frame.kind is FrameKind.ECHO_REQ and self.connection is not None:
            self.controller.relay_echo_req(frame)
            return
        super().on_frame(frame, rssi_dbm)


class _InterceptionCore(CentralDevice):
    """The fake central toward the real peripheral."""

    def __init__(self, controller: "MitmController", pairing_mode: PairingMode):
        super().__init__(
            device_id=f"{controller.session.target_id}-core",
            io_capability=IoCapability.KEYBOARD_DISPLAY,
            pairing_mode=pairing_mode,
        )
        self.controller = controller
        self.target_id: Optional[str] = None
        self.observed_advs: dict[str, bytes] = {}
        self.auto_subscribe = False

    def on_frame(self, frame: Frame, rssi_dbm: Optional[float]) -> None:
        if frame.kind is FrameKind.ADV_IND:
            self.observed_advs[frame.sender] = frame.payload
            if self.target_id is not None and frame.sender != self.target_id:
                return
        if frame.kind is FrameKind.ECHO_RSP:
            self.controller.relay_echo_rsp(frame)
            return
        super().on_frame(frame, rssi_dbm)

    def on_connected(self, conn) -> None:
        super().on_connected(conn)
        if self.pairing_error is None:
            self.controller.on_core_connected()

    def _handle_gatt(self, op: GattOp) -> None:
        self.controller.cross(op, Direction.TO_CENTRAL)


class MitmController:
    """Owns the session state, both proxy halves, the rule engine and the
    journal. All mutation happens inside the simulation loop."""

    def __init__(
        self,
        net: VirtualRadio,
        target_id: str,
        victim_id: str,
        fake_address: str = "fa:ke:00:00:00:01",
        pairing_mode: PairingMode = PairingMode.LEGACY_LE,
        attacker_distance_m: float = DEFAULT_ATTACKER_DISTANCE_M,
        core_link_distance_m: float = DEFAULT_ATTACKER_DISTANCE_M,
        rules: Optional[list[ModificationRule]] = None,
        manual_mode: bool = False,
    ):
        self.net = net
        self.victim_id = victim_id
        self.pairing_mode = pairing_mode
        self.session = MitmSession(
            target_id=target_id,
            fake_address=fake_address,
            rules=list(rules or []),
            manual_mode=manual_mode,
            attacker_distance_to_central_m=attacker_distance_m,
        )
        self._core_link_distance_m = core_link_distance_m
        self.core = _InterceptionCore(self, pairing_mode)
        net.add_device(self.core)
        self.core.scanning = True
        self.fake: Optional[_FakePeripheral] = None
        self.held: dict[int, HeldOp] = {}
        self._next_op_id = 1
        self._pending_to_peripheral: list[GattOp] = []
        self.on_journal: Optional[Callable[[OpLogEntry], None]] = None
        self.on_held: Optional[Callable[[HeldOp], None]] = None

    # --- lifecycle ---------------------------------------------------------

    def clone_target(self, observed_db: gatt.AttributeDatabase) -> _FakePeripheral:
        """Build the fake peripheral from the observed advertisement and a
        structural copy of the target's attribute database."""
        adv_data = self.core.observed_advs.get(self.session.target_id)
        if adv_data is None:
            raise TargetNotObserved(f"{self.session.target_id} has not been seen advertising")
        if self.session.fake_address == self.net.devices[self.session.target_id].address:
            raise MitmError("fake address collides with the target's")
        self.fake = _FakePeripheral(self, observed_db.clone(), adv_data)
        self.net.add_device(self.fake)
        # Attacker positioning: the fake's frames reach the victim with the
        # attacker-distance RSSI distribution; the core sits near the sensor.
        victim_link = self.net.link_between(self.victim_id, self.session.target_id)
        params = victim_link.params if victim_link is not None else PathLossParams()
        attacker_d = self.session.attacker_distance_to_central_m
        self.net.add_link(
            RadioLink(
                self.victim_id,
                self.fake.id,
                distance_m=attacker_d,
                params=params,
                empirical=EMPIRICAL_RSSI_TABLE.get(attacker_d)
                if victim_link is not None and victim_link.empirical is not None
                else None,
            )
        )
        self.net.add_link(
            RadioLink(
                self.core.id,
                self.session.target_id,
                distance_m=self._core_link_distance_m,
                params=params,
            )
        )
        self.session.state = SessionState.READY
        return self.fake

    def start_session(self) -> None:
        if self.session.state is not SessionState.READY:
            raise MitmError(f"cannot start from state {self.session.state.value}")
        for conn in self.net.connections:
            if conn.peripheral_id == self.session.target_id and conn.central_id == self.victim_id:
                raise VictimAlreadyConnected("victim already holds a link to the real target")
        assert self.fake is not None
        self.fake.start_advertising()
        self.core.target_id = self.session.target_id
        self.core.connect_delay_ms = 0
        self.core.start()
        self.session.state = SessionState.ACTIVE

    def stop_session(self) -> None:
        if self.fake is not None:
            self.fake.advertising = False
            self.fake.connection = None
        self.core.connection = None
        self.core.scanning = False
        self.session.state = SessionState.STOPPED

    def on_core_connected(self) -> None:
        for op in self._pending_to_peripheral:
            self._send_to_peripheral(op)
        self._pending_to_peripheral.clear()

    # --- forwarding --------------------------------------------------------

    def _first_match(self, uuid: gatt.Uuid, direction: Direction) -> Optional[ModificationRule]:
        for rule in self.session.rules:
            if rule.matches(uuid, direction):
                return rule
        return None

    def cross(self, op: GattOp, direction: Direction) -> None:
        """Every GATT op traversing the proxy enters here exactly once."""
        if self.session.state is not SessionState.ACTIVE:
            return
        entry_id = self._next_op_id
        self._next_op_id += 1
        rule = self._first_match(op.target_uuid, direction)
        if self.session.manual_mode and rule is not None:
            held = HeldOp(
                op_id=entry_id,
                op=op,
                direction=direction,
                deadline_ms=self.net.now_ms + self.session.hold_timeout_ms,
            )
            self.held[entry_id] = held
            if self.on_held is not None:
                self.on_held(held)
            self.net.queue.schedule(held.deadline_ms, lambda: self._expire(entry_id))
            return
        after = rule.transform.apply(op.payload) if rule is not None else op.payload
        self._release(entry_id, op, direction, after, "auto")

    def _expire(self, entry_id: int) -> None:
        held = self.held.pop(entry_id, None)
        if held is None:
            return
        self._release(entry_id, held.op, held.direction, held.op.payload, "timeout-forward")

    def operator_decision(
        self, op_id: int, action: str, data: Optional[bytes] = None
    ) -> OpLogEntry:
        held = self.held.pop(op_id, None)
        if held is None:
            raise NotHeld(f"op {op_id} is not held")
        if action == "forward":
            return self._release(op_id, held.op, held.direction, held.op.payload, "manual-forward")
        if action == "modify":
            if data is None:
                raise MitmError("modify requires replacement bytes")
            return self._release(op_id, held.op, held.direction, data, "manual-modify")
        if action == "drop":
            return self._journal_only(op_id, held.op, held.direction, "manual-drop")
        raise MitmError(f"unknown decision {action!r}")

    def replay(self, op_id: int) -> OpLogEntry:
        if self.session.state is not SessionState.ACTIVE:
            raise MitmError("session is not active")
        source = next((e for e in self.session.journal if e.op_id == op_id), None)
        if source is None:
            raise UnknownOpId(f"no journal entry {op_id}")
        entry_id = self._next_op_id
        self._next_op_id += 1
        op = GattOp(source.kind, source.uuid, source.after)
        return self._release(entry_id, op, source.direction, source.after, "auto")

    def _journal_only(
        self, entry_id: int, op: GattOp, direction: Direction, decision: str
    ) -> OpLogEntry:
        entry = OpLogEntry(
            op_id=entry_id,
            time_ms=self.net.now_ms,
            direction=direction,
            uuid=op.target_uuid,
            before=op.payload,
            after=op.payload,
            decision=decision,
            kind=op.kind,
        )
        self.session.journal.append(entry)
        if self.on_journal is not None:
            self.on_journal(entry)
        return entry

    def _release(
        self, entry_id: int, op: GattOp, direction: Direction, after: bytes, decision: str
    ) -> OpLogEntry:
        entry = OpLogEntry(
            op_id=entry_id,
            time_ms=self.net.now_ms,
            direction=direction,
            uuid=op.target_uuid,
            before=op.payload,
            after=after,
            decision=decision,
            kind=op.kind,
        )
        self.session.journal.append(entry)
        if self.on_journal is not None:
            self.on_journal(entry)
        out = GattOp(op.kind, op.target_uuid, after, entry_id)
        if direction is Direction.TO_PERIPHERAL:
            self._send_to_peripheral(out)
        else:
            self._send_to_central(out)
        return entry

    def _send_to_peripheral(self, op: GattOp) -> None:
        if self.core.connection is None:
            self._pending_to_peripheral.append(op)
            return
        self._send_encrypted(self.core, op, extra_delay_ms=self.session.processing_ms)

    def _send_to_central(self, op: GattOp) -> None:
        if self.fake is None or self.fake.connection is None:
            return  # victim not attached yet; op was journaled regardless
        self._send_encrypted(self.fake, op)

    @staticmethod
    def _send_encrypted(device, op: GattOp, extra_delay_ms: int = 0) -> None:
        from . import pairing
        from .actors import op_to_bytes

        conn = device.connection
        peer = conn.peer_of(device.id)
        ciphertext = pairing.encrypt_link(
            conn.session_key, conn.next_counter(f"tx:{device.id}"), op_to_bytes(op)
        )
        device.radio.send(
            Frame(FrameKind.DATA, device.id, peer, payload=ciphertext),
            extra_delay_ms=extra_delay_ms,
        )

    # --- echo relay --------------------------------------------------------

    def relay_echo_req(self, frame: Frame) -> None:
        if self.core.connection is None:
            return
        self.net.send(
            Frame(
                FrameKind.ECHO_REQ,
                self.core.id,
                self.session.target_id,
                meta=dict(frame.meta),
            ),
            extra_delay_ms=self.session.processing_ms,
        )

    def relay_echo_rsp(self, frame: Frame) -> None:
        if self.fake is None or self.fake.connection is None:
            return
        self.net.send(
            Frame(
                FrameKind.ECHO_RSP,
                self.fake.id,
                self.fake.connection.peer_of(self.fake.id),
                payload=frame.payload,
                meta=dict(frame.meta),
            )
        )
