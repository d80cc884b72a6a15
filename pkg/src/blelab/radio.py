"""Deterministic discrete-event virtual radio.

Advertising, connection establishment, frame delivery with latency, and
RSSI generation from the log-distance path-loss model
RSSI(d) = -10 * N * log10(d) + a, optionally overridden by a per-distance
empirical table.
"""

from __future__ import annotations

import enum
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

D_MIN_METERS = 0.1
ADVERTISING_CHANNELS = (37, 38, 39)
DATA_CHANNEL = 0

DEFAULT_ONE_WAY_LATENCY_MS = 5
DEFAULT_ADV_INTERVAL_MS = 100

# Measured (mean dBm, std dB) per distance, usable in place of the model.
EMPIRICAL_RSSI_TABLE: dict[float, tuple[float, float]] = {
    0.0: (-26.4, 1.2),
    0.5: (-52.8, 3.3),
    1.0: (-60.8, 2.6),
    3.0: (-66.0, 3.0),
}


class RadioError(Exception):
    pass


class DistanceTooSmall(RadioError):
    pass


class RoleViolation(RadioError):
    pass


class Timeout(RadioError):
    pass


class NotConnected(RadioError):
    pass


class GapRole(enum.Enum):
    BROADCASTER = "broadcaster"
    OBSERVER = "observer"
    PERIPHERAL = "peripheral"
    CENTRAL = "central"


@dataclass(frozen=True)
class PathLossParams:
    n: float = 1.0  # path-loss constant
    a_dbm: float = -60.8  # power observed at 1 m
    sigma_db: float = 0.0  # gaussian shadowing std

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError("path-loss constant must be positive")
        if self.sigma_db < 0:
            raise ValueError("sigma must be non-negative")


def expected_rssi(distance_m: float, params: PathLossParams) -> float:
    if distance_m < D_MIN_METERS:
        raise DistanceTooSmall(f"d={distance_m} m is below the {D_MIN_METERS} m model floor")
    return -10.0 * params.n * math.log10(distance_m) + params.a_dbm


@dataclass
class RadioLink:
    endpoint_a: str
    endpoint_b: str
    distance_m: float
    params: PathLossParams = PathLossParams()
    one_way_latency_ms: int = DEFAULT_ONE_WAY_LATENCY_MS
    # (mean, std) override; set when the scenario runs in empirical mode.
    empirical: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if self.distance_m < D_MIN_METERS:
            raise DistanceTooSmall(f"link distance {self.distance_m} m below {D_MIN_METERS} m")
        if self.one_way_latency_ms <= 0:
            raise ValueError("one-way latency must be positive")


def sample_rssi(link: RadioLink, rng: random.Random) -> float:
    if link.empirical is not None:
        mean, sigma = link.empirical
    else:
        mean = expected_rssi(link.distance_m, link.params)
        sigma = link.params.sigma_db
    return mean + rng.gauss(0.0, sigma) if sigma > 0 else mean


class FrameKind(enum.Enum):
    ADV_IND = "AdvInd"
    CONNECT_REQ = "ConnectReq"
    DATA = "Data"
    ECHO_REQ = "EchoReq"
    ECHO_RSP = "EchoRsp"


@dataclass
class Frame:
    kind: FrameKind
    sender: str
    receiver: Optional[str]  # None for broadcast (advertising)
    channel: int = DATA_CHANNEL
    payload: bytes = b""
    send_time_ms: int = 0
    meta: dict = field(default_factory=dict)  # decoded op metadata, not on air

    def __post_init__(self) -> None:
        if self.kind is FrameKind.ADV_IND and self.channel not in ADVERTISING_CHANNELS:
            raise ValueError("AdvInd only on channels 37/38/39")


class EventQueue:
    """Min-heap of (virtual time, insertion seq) -> callback; the single
    source of ordering for the whole simulation."""

    def __init__(self, seed: int = 0):
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0
        self.now_ms = 0
        self.rng = random.Random(seed)
        self.seed = seed

    def schedule(self, at_ms: int, fn: Callable[[], None]) -> None:
        if at_ms < self.now_ms:
            raise ValueError("cannot schedule in the past")
        heapq.heappush(self._heap, (at_ms, self._seq, fn))
        self._seq += 1

    def schedule_in(self, delay_ms: int, fn: Callable[[], None]) -> None:
        self.schedule(self.now_ms + delay_ms, fn)

    def run_until(self, t_ms: int) -> None:
        while self._heap and self._heap[0][0] <= t_ms:
            at, _, fn = heapq.heappop(self._heap)
            assert at >= self.now_ms
            self.now_ms = at
            fn()
        self.now_ms = max(self.now_ms, t_ms)

    def step(self) -> bool:
        if not self._heap:
            return False
        at, _, fn = heapq.heappop(self._heap)
        self.now_ms = at
        fn()
        return True


@dataclass
class Connection:
    conn_id: int
    central_id: str
    peripheral_id: str
    link: RadioLink
    established_at_ms: int
    session_key: Optional[bytes] = None
    # per-direction nonce counters for link encryption
    tx_counters: dict[str, int] = field(default_factory=dict)

    def next_counter(self, sender: str) -> int:
        value = self.tx_counters.get(sender, 0)
        self.tx_counters[sender] = value + 1
        return value

    def peer_of(self, device_id: str) -> str:
        return self.peripheral_id if device_id == self.central_id else self.central_id


class Device:
    """Base class for anything attached to the radio."""

    def __init__(self, device_id: str, gap_role: GapRole, address: Optional[str] = None):
        self.id = device_id
        self.gap_role = gap_role
        self.address = address or device_id
        self.radio: Optional[VirtualRadio] = None
        self.scanning = False
        self.connections: dict[int, Connection] = {}

    def on_frame(self, frame: Frame, rssi_dbm: Optional[float]) -> None:  # pragma: no cover
        pass

    def on_connected(self, conn: Connection) -> None:  # pragma: no cover
        pass


class VirtualRadio:
    """Owns virtual time, device roster, links, and the frame event log."""

    def __init__(self, seed: int = 0):
        self.queue = EventQueue(seed)
        self.devices: dict[str, Device] = {}
        self.links: dict[frozenset[str], RadioLink] = {}
        self.event_log: list[dict] = []
        self._next_conn_id = 1
        self.connections: list[Connection] = []

    @property
    def now_ms(self) -> int:
        return self.queue.now_ms

    @property
    def rng(self) -> random.Random:
        return self.queue.rng

    def add_device(self, device: Device) -> None:
        if device.id in self.devices:
            raise ValueError(f"duplicate device id {device.id}")
        device.radio = self
        self.devices[device.id] = device

    def add_link(self, link: RadioLink) -> None:
        self.links[frozenset((link.endpoint_a, link.endpoint_b))] = link

    def link_between(self, a: str, b: str) -> Optional[RadioLink]:
        return self.links.get(frozenset((a, b)))

    def _log(self, frame: Frame, rssi_dbm: Optional[float]) -> None:
        self.event_log.append(
            {
                "time_ms": self.now_ms,
                "kind": frame.kind.value,
                "channel": frame.channel,
                "sender": frame.sender,
                "receiver": frame.receiver if frame.receiver is not None else "*",
                "rssi_dbm": round(rssi_dbm, 2) if rssi_dbm is not None else None,
                "payload_hex": frame.payload.hex(),
            }
        )

    def broadcast(self, frame: Frame) -> None:
        """Deliver an advertising frame to every scanning device in range.
        Logged once at transmit time; each receiver samples its own RSSI."""
        frame.send_time_ms = self.now_ms
        self._log(frame, None)
        for device_id in sorted(self.devices):
            if device_id == frame.sender:
                continue
            link = self.link_between(frame.sender, device_id)
            device = self.devices[device_id]
            if link is None or not device.scanning:
                continue
            rssi = sample_rssi(link, self.rng)
            self.queue.schedule_in(
                link.one_way_latency_ms,
                lambda d=device, f=frame, r=rssi: d.on_frame(f, r),
            )

    def send(self, frame: Frame, extra_delay_ms: int = 0) -> None:
        """Deliver a unicast frame after the link's one-way latency."""
        assert frame.receiver is not None
        link = self.link_between(frame.sender, frame.receiver)
        if link is None:
            raise RadioError(f"no link between {frame.sender} and {frame.receiver}")
        frame.send_time_ms = self.now_ms
        rssi = sample_rssi(link, self.rng)
        self._log(frame, rssi)
        receiver = self.devices[frame.receiver]
        self.queue.schedule_in(
            link.one_way_latency_ms + extra_delay_ms,
            lambda: receiver.on_frame(frame, rssi),
        )

    def make_connection(self, central_id: str, peripheral_id: str) -> Connection:
        link = self.link_between(central_id, peripheral_id)
        if link is None:
            raise RadioError(f"no link between {central_id} and {peripheral_id}")
        conn = Connection(
            conn_id=self._next_conn_id,
            central_id=central_id,
            peripheral_id=peripheral_id,
            link=link,
            established_at_ms=self.now_ms,
        )
        self._next_conn_id += 1
        self.connections.append(conn)
        self.devices[central_id].connections[conn.conn_id] = conn
        self.devices[peripheral_id].connections[conn.conn_id] = conn
        return conn


def advertise(device: Device, radio: VirtualRadio, interval_ms: int = DEFAULT_ADV_INTERVAL_MS,
              adv_payload: bytes = b"", stop_when: Optional[Callable[[], bool]] = None) -> None:
    """Schedule cyclic AdvInd transmission on channels 37/38/39."""
    if device.gap_role not in (GapRole.PERIPHERAL, GapRole.BROADCASTER):
        raise RoleViolation(f"{device.gap_role.value} devices do not advertise")

    def tick() -> None:
        if stop_when is not None and stop_when():
            return
        for channel in ADVERTISING_CHANNELS:
            radio.broadcast(
                Frame(
                    kind=FrameKind.ADV_IND,
                    sender=device.id,
                    receiver=None,
                    channel=channel,
                    payload=adv_payload,
                )
            )
        radio.queue.schedule_in(interval_ms, tick)

    radio.queue.schedule(radio.now_ms, tick)


def echo_rtt(connection: Connection, responder_processing_ms: int = 0) -> int:
    """Round-trip time of an echo over a direct link: 2x one-way latency
    plus the responder's processing delay."""
    if connection is None:
        raise NotConnected("echo requires an established connection")
    return 2 * connection.link.one_way_latency_ms + responder_processing_ms
