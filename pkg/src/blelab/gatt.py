"""GATT data model: services, characteristics, attribute database and the
heart-rate measurement (0x2A37) byte encoding."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional

# Bluetooth base UUID: 16-bit identifiers expand into the xxxx slot of
# 0000xxxx-0000-1000-8000-00805f9b34fb.
_BASE_UUID = 0x00000000_0000_1000_8000_00805F9B34FB
_SHORT_MASK = 0x0000FFFF_0000_0000_0000_000000000000
_SHORT_SHIFT = 96

MAX_ATTRIBUTE_VALUE_LEN = 512

HEART_RATE_SERVICE = 0x180D
HEART_RATE_MEASUREMENT = 0x2A37


class GattError(Exception):
    pass


class UnknownUuid(GattError):
    pass


class PropertyViolation(GattError):
    pass


class TooShort(GattError):
    pass


@dataclass(frozen=True)
class Uuid:
    """128-bit UUID; 16-bit short forms are stored expanded so that the two
    spellings of the same identifier compare equal."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < (1 << 128):
            raise ValueError("UUID out of 128-bit range")

    @classmethod
    def short(cls, value16: int) -> "Uuid":
        if not 0 <= value16 < (1 << 16):
            raise ValueError("short UUID out of 16-bit range")
        return cls(_BASE_UUID | (value16 << _SHORT_SHIFT))

    @property
    def short_form(self) -> Optional[int]:
        """The 16-bit form, or None if this UUID is not base-expanded."""
        if (self.value & ~_SHORT_MASK) == _BASE_UUID:
            return (self.value >> _SHORT_SHIFT) & 0xFFFF
        return None

    def __str__(self) -> str:
        short = self.short_form
        if short is not None:
            return f"0x{short:04x}"
        h = f"{self.value:032x}"
        return f"{h[0:8]}-{h[8:12]}-{h[12:16]}-{h[16:20]}-{h[20:32]}"


def uuid(value: "int | str | Uuid") -> Uuid:
    """Coerce an int (16-bit short or 128-bit), hex string or Uuid."""
    if isinstance(value, Uuid):
        return value
    if isinstance(value, str):
        digits = value.replace("-", "").removeprefix("0x")
        if len(digits) <= 4:
            return Uuid.short(int(digits, 16))
        return Uuid(int(digits, 16))
    if value < (1 << 16):
        return Uuid.short(value)
    return Uuid(value)


class Property(enum.Flag):
    READ = enum.auto()
    WRITE = enum.auto()
    NOTIFY = enum.auto()
    INDICATE = enum.auto()


@dataclass
class Characteristic:
    uuid: Uuid
    handle: int
    properties: Property
    value: bytes = b""
    subscribed: bool = False

    def __post_init__(self) -> None:
        if self.handle <= 0:
            raise ValueError("handle must be positive")
        if len(self.value) > MAX_ATTRIBUTE_VALUE_LEN:
            raise ValueError("attribute value exceeds 512 bytes")


@dataclass
class Service:
    uuid: Uuid
    characteristics: list[Characteristic] = field(default_factory=list)

    def __post_init__(self) -> None:
        handles = [c.handle for c in self.characteristics]
        if handles != sorted(set(handles)):
            raise ValueError("characteristic handles must be strictly increasing")


@dataclass
class AttributeDatabase:
    services: list[Service] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.check_invariants()

    def check_invariants(self) -> None:
        handles = [c.handle for c in self.iter_characteristics()]
        if handles != sorted(set(handles)):
            raise ValueError("handles must be strictly increasing across the database")
        pairs = [(str(s.uuid), str(c.uuid)) for s in self.services for c in s.characteristics]
        if len(pairs) != len(set(pairs)):
            raise ValueError("duplicate (service, characteristic) uuid pair")

    def iter_characteristics(self) -> Iterator[Characteristic]:
        for service in self.services:
            yield from service.characteristics

    def find(self, target: "int | str | Uuid") -> Characteristic:
        target = uuid(target)
        for c in self.iter_characteristics():
            if c.uuid == target:
                return c
        raise UnknownUuid(f"no characteristic {target}")

    def clone(self) -> "AttributeDatabase":
        return AttributeDatabase(
            services=[
                Service(
                    uuid=s.uuid,
                    characteristics=[
                        Characteristic(c.uuid, c.handle, c.properties, c.value)
                        for c in s.characteristics
                    ],
                )
                for s in self.services
            ]
        )


def build_heart_rate_profile() -> AttributeDatabase:
    """Heart-rate service 0x180D with the measurement characteristic 0x2A37
    (notify + read), handles assigned from 1 upward."""
    return AttributeDatabase(
        services=[
            Service(
                uuid=Uuid.short(HEART_RATE_SERVICE),
                characteristics=[
                    Characteristic(
                        uuid=Uuid.short(HEART_RATE_MEASUREMENT),
                        handle=1,
                        properties=Property.NOTIFY | Property.READ,
                    )
                ],
            )
        ]
    )


@dataclass(frozen=True)
class HeartRateMeasurement:
    bpm: int
    format: str = "uint8"  # "uint8" | "uint16"
    sensor_contact: Optional[bool] = None

    def __post_init__(self) -> None:
        if self.format not in ("uint8", "uint16"):
            raise ValueError(f"unknown format {self.format!r}")
        limit = 255 if self.format == "uint8" else 65535
        if not 0 <= self.bpm <= limit:
            raise ValueError(f"bpm {self.bpm} out of range for {self.format}")


# Flags byte: bit0 = 1 iff the value is uint16; bits1-2 = sensor contact
# (0b00 not supported, 0b10 supported/not detected, 0b11 detected).
_CONTACT_BITS = {None: 0b00, False: 0b10, True: 0b11}
_CONTACT_FROM_BITS = {0b00: None, 0b01: None, 0b10: False, 0b11: True}


def encode_hr_measurement(m: HeartRateMeasurement) -> bytes:
    flags = (1 if m.format == "uint16" else 0) | (_CONTACT_BITS[m.sensor_contact] << 1)
    width = 2 if m.format == "uint16" else 1
    return bytes([flags]) + m.bpm.to_bytes(width, "little")


def decode_hr_measurement(data: bytes) -> HeartRateMeasurement:
    if len(data) < 2:
        raise TooShort(f"heart-rate payload of {len(data)} bytes")
    flags = data[0]
    is_uint16 = bool(flags & 0x01)
    width = 2 if is_uint16 else 1
    if len(data) != 1 + width:
        raise TooShort(f"expected {1 + width} bytes for flags 0x{flags:02x}, got {len(data)}")
    return HeartRateMeasurement(
        bpm=int.from_bytes(data[1 : 1 + width], "little"),
        format="uint16" if is_uint16 else "uint8",
        sensor_contact=_CONTACT_FROM_BITS[(flags >> 1) & 0b11],
    )


class OpKind(enum.Enum):
    READ = "read"
    READ_RESPONSE = "read_response"
    WRITE = "write"
    NOTIFY = "notify"
    SUBSCRIBE = "subscribe"


@dataclass(frozen=True)
class GattOp:
    kind: OpKind
    target_uuid: Uuid
    payload: bytes = b""
    op_id: int = 0


def apply_gatt_op(db: AttributeDatabase, op: GattOp) -> Optional[GattOp]:
    """Apply a GATT operation to the database, mutating the addressed
    characteristic only. Returns the response op (ReadResponse) or None."""
    char = db.find(op.target_uuid)
    if op.kind is OpKind.READ:
        if not char.properties & Property.READ:
            raise PropertyViolation(f"{char.uuid} is not readable")
        return GattOp(OpKind.READ_RESPONSE, char.uuid, char.value, op.op_id)
    if op.kind is OpKind.WRITE:
        if not char.properties & Property.WRITE:
            raise PropertyViolation(f"{char.uuid} is not writable")
        if len(op.payload) > MAX_ATTRIBUTE_VALUE_LEN:
            raise PropertyViolation("write exceeds 512-byte attribute maximum")
        char.value = op.payload
        return None
    if op.kind is OpKind.SUBSCRIBE:
        if not char.properties & Property.NOTIFY:
            raise PropertyViolation(f"{char.uuid} does not support notify")
        char.subscribed = True
        return None
    if op.kind is OpKind.NOTIFY:
        # Owner-side value refresh before the notification goes out.
        char.value = op.payload
        return None
    raise PropertyViolation(f"{op.kind} is not applicable to a server database")
