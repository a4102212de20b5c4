"""Addresses, simulated time, timers, message shapes and their canonical encoding.

Every protocol message is a :class:`Message` envelope around one frozen body
dataclass.  The byte encoding produced by :func:`serialize_message` is
canonical (fixed field order, big-endian integers, length-prefixed variable
fields) because MICs are computed over it.  ``docs/wire_format.md`` documents
the layout.
"""

from __future__ import annotations

import enum
import functools
import struct
import typing
from dataclasses import dataclass, field, fields
from ipaddress import IPv4Address
from typing import ClassVar, Optional, Union

from .errors import ConfigError, MalformedMessage

WIRE_VERSION = 1
# Ethernet II header (14) + FCS (4).
LINK_HEADER_BYTES = 18

SimTime = int  # milliseconds of simulated time
IpAddress = IPv4Address
ZERO_IP = IPv4Address("0.0.0.0")


def ip(text: Union[str, IPv4Address]) -> IPv4Address:
    return text if isinstance(text, IPv4Address) else IPv4Address(text)


@functools.total_ordering
@dataclass(frozen=True)
class MacAddress:
    octets: bytes

    def __post_init__(self):
        if len(self.octets) != 6:
            raise ValueError(f"MAC address needs 6 octets, got {len(self.octets)}")

    @classmethod
    def parse(cls, text: Union[str, "MacAddress"]) -> "MacAddress":
        if isinstance(text, MacAddress):
            return text
        parts = text.split(":")
        if len(parts) != 6 or any(len(p) != 2 for p in parts):
            raise ValueError(f"not a MAC address: {text!r}")
        return cls(bytes(int(p, 16) for p in parts))

    @classmethod
    def from_int(cls, value: int) -> "MacAddress":
        return cls(value.to_bytes(6, "big"))

    @property
    def is_broadcast(self) -> bool:
        return self.octets == b"\xff" * 6

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.octets)

    def __repr__(self) -> str:
        return f"MacAddress('{self}')"

    def __lt__(self, other: "MacAddress") -> bool:
        return self.octets < other.octets


BROADCAST_MAC = MacAddress(b"\xff" * 6)
# Carried as mac_b in a negative S-UARP response.
ZERO_MAC = MacAddress(b"\x00" * 6)


def mac(text: Union[str, MacAddress]) -> MacAddress:
    return MacAddress.parse(text)


@dataclass(frozen=True)
class TimerConfig:
    """Protocol timer durations in milliseconds.

    t1: response wait before the host re-sends a request.
    t2: piggyback window for the acknowledgment.
    t3: server ACK wait before it re-sends a response; must exceed t2.
    t4: resolution cache TTL.
    delta_t: accepted transmission delay for freshness checks.
    """

    t1: int = 500
    t2: int = 200
    t3: int = 1000
    t4: int = 5 * 60 * 1000
    delta_t: int = 300

    def __post_init__(self):
        for name in ("t1", "t2", "t3", "t4", "delta_t"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ConfigError(f"timer {name} must be a positive integer, got {value!r}")
        if self.t3 <= self.t2:
            raise ConfigError(f"t3 ({self.t3}) must be greater than t2 ({self.t2})")


class MessageKind(enum.IntEnum):
    ARP_REQUEST = 1
    ARP_REPLY = 2
    SUARP_REQ = 3
    SUARP_RES = 4
    SUARP_ACK = 5
    DHCP_DISCOVER = 6
    DHCP_OFFER = 7
    DHCP_REQUEST = 8
    DHCP_ACK = 9
    DHCP_NAK = 10
    DHCP_DECLINE = 11
    REGISTRATION_ADVERT = 12
    DATA = 13

    @property
    def label(self) -> str:
        return "".join(part.capitalize() for part in self.name.split("_"))


class MicScheme(enum.IntEnum):
    CBC_RESIDUE = 1
    KEYED_HASH = 2


@dataclass(frozen=True)
class Mic:
    digest: bytes
    scheme: MicScheme

    def __post_init__(self):
        object.__setattr__(self, "scheme", MicScheme(self.scheme))


# -- message bodies ---------------------------------------------------------


@dataclass(frozen=True)
class ArpRequest:
    KIND: ClassVar[MessageKind] = MessageKind.ARP_REQUEST
    sender_ip: IPv4Address
    sender_mac: MacAddress
    target_ip: IPv4Address


@dataclass(frozen=True)
class ArpReply:
    KIND: ClassVar[MessageKind] = MessageKind.ARP_REPLY
    sender_ip: IPv4Address
    sender_mac: MacAddress
    target_ip: IPv4Address
    target_mac: MacAddress


@dataclass(frozen=True)
class SuarpReq:
    KIND: ClassVar[MessageKind] = MessageKind.SUARP_REQ
    ip_a: IPv4Address
    mac_a: MacAddress
    ip_b: IPv4Address


@dataclass(frozen=True)
class SuarpRes:
    KIND: ClassVar[MessageKind] = MessageKind.SUARP_RES
    ip_a: IPv4Address
    mac_a: MacAddress
    ip_b: IPv4Address
    mac_b: MacAddress
    t_s: int

    @property
    def is_negative(self) -> bool:
        return self.mac_b == ZERO_MAC


@dataclass(frozen=True)
class SuarpAck:
    KIND: ClassVar[MessageKind] = MessageKind.SUARP_ACK
    ip_b: IPv4Address
    t_s: int
    t_a: int
    nrn: Optional[bytes] = None


@dataclass(frozen=True)
class DhcpDiscover:
    KIND: ClassVar[MessageKind] = MessageKind.DHCP_DISCOVER
    xid: int
    client_mac: MacAddress
    timestamp: int


@dataclass(frozen=True)
class DhcpOffer:
    KIND: ClassVar[MessageKind] = MessageKind.DHCP_OFFER
    xid: int
    client_mac: MacAddress
    offered_ip: IPv4Address
    lease_duration: int
    server_id: IPv4Address
    timestamp: int


@dataclass(frozen=True)
class DhcpRequest:
    KIND: ClassVar[MessageKind] = MessageKind.DHCP_REQUEST
    xid: int
    client_mac: MacAddress
    requested_ip: IPv4Address
    server_id: IPv4Address
    timestamp: int
    renewing: bool = False


@dataclass(frozen=True)
class DhcpAck:
    KIND: ClassVar[MessageKind] = MessageKind.DHCP_ACK
    xid: int
    client_mac: MacAddress
    assigned_ip: IPv4Address
    lease_duration: int
    server_id: IPv4Address
    timestamp: int
    nrn: Optional[bytes] = None


@dataclass(frozen=True)
class DhcpNak:
    KIND: ClassVar[MessageKind] = MessageKind.DHCP_NAK
    xid: int
    client_mac: MacAddress
    server_id: IPv4Address
    timestamp: int


@dataclass(frozen=True)
class DhcpDecline:
    KIND: ClassVar[MessageKind] = MessageKind.DHCP_DECLINE
    xid: int
    client_mac: MacAddress
    declined_ip: IPv4Address
    server_id: IPv4Address
    timestamp: int


@dataclass(frozen=True)
class RegistrationAdvert:
    """Static-mode advert: a host registering its mapping, or the server announcing itself."""

    KIND: ClassVar[MessageKind] = MessageKind.REGISTRATION_ADVERT
    ip: IPv4Address
    mac: MacAddress
    timestamp: int
    from_server: bool = False


class Echo(enum.IntEnum):
    NONE = 0
    REQUEST = 1
    REPLY = 2


@dataclass(frozen=True)
class Data:
    """Synthetic payload traffic: ping probes and piggyback carriers."""

    KIND: ClassVar[MessageKind] = MessageKind.DATA
    src_ip: IPv4Address
    dst_ip: IPv4Address
    seq: int = 0
    echo: int = Echo.NONE
    payload: bytes = b""


Body = Union[
    ArpRequest, ArpReply, SuarpReq, SuarpRes, SuarpAck, DhcpDiscover, DhcpOffer,
    DhcpRequest, DhcpAck, DhcpNak, DhcpDecline, RegistrationAdvert, Data,
]

BODY_TYPES: dict[MessageKind, type] = {
    cls.KIND: cls for cls in typing.get_args(Body)
}


@dataclass(frozen=True)
class Message:
    """Envelope: a plaintext body *or* a sealed (encrypted) body, plus attachments.

    ``mics`` are plain integrity codes, ``masked`` holds protected byte
    strings (XOR-masked or encrypted MICs), and ``piggyback`` optionally
    carries a second message riding on this one.
    """

    kind: MessageKind
    body: Optional[Body] = None
    sealed: bytes = b""
    mics: tuple[Mic, ...] = ()
    masked: tuple[bytes, ...] = ()
    piggyback: Optional["Message"] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MessageKind(self.kind))
        object.__setattr__(self, "mics", tuple(self.mics))
        object.__setattr__(self, "masked", tuple(self.masked))
        if (self.body is None) == (not self.sealed):
            raise ValueError("a message carries exactly one of body or sealed bytes")
        if self.body is not None and self.body.KIND != self.kind:
            raise ValueError(f"body {type(self.body).__name__} does not match kind {self.kind.name}")

    @classmethod
    def of(cls, body: Body, **kw) -> "Message":
        return cls(body.KIND, body, **kw)

    def with_piggyback(self, other: Optional["Message"]) -> "Message":
        return Message(self.kind, self.body, self.sealed, self.mics, self.masked, other)


# -- canonical encoding ------------------------------------------------------

_FLAG_BODY, _FLAG_SEALED, _FLAG_PIGGYBACK = 1, 2, 4


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedMessage("truncated message")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def blob(self) -> bytes:
        return self.take(self.u16())


def _u16(n: int) -> bytes:
    if n > 0xFFFF:
        raise ValueError("field longer than 65535 bytes")
    return struct.pack(">H", n)


def _blob(data: bytes) -> bytes:
    return _u16(len(data)) + data


def _enc_ip(v) -> bytes:
    return v.packed


def _dec_ip(r: _Reader):
    return IPv4Address(r.take(4))


def _enc_mac(v) -> bytes:
    return v.octets


def _dec_mac(r: _Reader):
    return MacAddress(r.take(6))


def _enc_int(v) -> bytes:
    return struct.pack(">Q", int(v))


def _dec_int(r: _Reader):
    return r.u64()


def _enc_bool(v) -> bytes:
    return b"\x01" if v else b"\x00"


def _dec_bool(r: _Reader):
    b = r.u8()
    if b > 1:
        raise MalformedMessage("boolean field out of range")
    return bool(b)


def _enc_opt_bytes(v) -> bytes:
    return b"\x00" if v is None else b"\x01" + _blob(v)


def _dec_opt_bytes(r: _Reader):
    flag = r.u8()
    if flag == 0:
        return None
    if flag != 1:
        raise MalformedMessage("optional presence byte out of range")
    return r.blob()


_CODECS = {
    IPv4Address: (_enc_ip, _dec_ip),
    MacAddress: (_enc_mac, _dec_mac),
    int: (_enc_int, _dec_int),
    bool: (_enc_bool, _dec_bool),
    bytes: (lambda v: _blob(v), lambda r: r.blob()),
    Optional[bytes]: (_enc_opt_bytes, _dec_opt_bytes),
}


@functools.lru_cache(maxsize=None)
def _layout(cls: type) -> tuple:
    hints = typing.get_type_hints(cls)
    return tuple((f.name, _CODECS[hints[f.name]]) for f in fields(cls))


def serialize_body(body: Body) -> bytes:
    """Kind tag plus the body's fields; the byte string MICs and sealing operate on."""
    out = [bytes([body.KIND])]
    for name, (enc, _) in _layout(type(body)):
        out.append(enc(getattr(body, name)))
    return b"".join(out)


def _read_body(r: _Reader, kind: MessageKind) -> Body:
    cls = BODY_TYPES[kind]
    values = {name: dec(r) for name, (_, dec) in _layout(cls)}
    if kind == MessageKind.DATA and values["echo"] not in (0, 1, 2):
        raise MalformedMessage("echo field out of range")
    return cls(**values)


def parse_body(data: bytes) -> Body:
    r = _Reader(data)
    kind = _read_kind(r)
    body = _read_body(r, kind)
    if r.pos != len(data):
        raise MalformedMessage("trailing bytes after body")
    return body


def _read_kind(r: _Reader) -> MessageKind:
    tag = r.u8()
    try:
        return MessageKind(tag)
    except ValueError:
        raise MalformedMessage(f"unknown message kind tag {tag:#04x}") from None


def serialize_message(msg: Message) -> bytes:
    flags = 0
    parts = []
    if msg.body is not None:
        flags |= _FLAG_BODY
        parts.append(serialize_body(msg.body)[1:])
    else:
        flags |= _FLAG_SEALED
        parts.append(_blob(msg.sealed))
    if len(msg.mics) > 255 or len(msg.masked) > 255:
        raise ValueError("too many MIC attachments")
    parts.append(bytes([len(msg.mics)]))
    for m in msg.mics:
        if len(m.digest) > 255:
            raise ValueError("MIC digest too long")
        parts.append(bytes([m.scheme, len(m.digest)]) + m.digest)
    parts.append(bytes([len(msg.masked)]))
    for blob in msg.masked:
        parts.append(_blob(blob))
    if msg.piggyback is not None:
        flags |= _FLAG_PIGGYBACK
        parts.append(_blob(serialize_message(msg.piggyback)))
    return bytes([WIRE_VERSION, msg.kind, flags]) + b"".join(parts)


def _read_message(r: _Reader) -> Message:
    version = r.u8()
    if version != WIRE_VERSION:
        raise MalformedMessage(f"unsupported wire version {version}")
    kind = _read_kind(r)
    flags = r.u8()
    if flags & ~(_FLAG_BODY | _FLAG_SEALED | _FLAG_PIGGYBACK):
        raise MalformedMessage("unknown flag bits")
    has_body, has_sealed = bool(flags & _FLAG_BODY), bool(flags & _FLAG_SEALED)
    if has_body == has_sealed:
        raise MalformedMessage("exactly one of body/sealed must be present")
    body, sealed = None, b""
    if has_body:
        body = _read_body(r, kind)
    else:
        sealed = r.blob()
        if not sealed:
            raise MalformedMessage("empty sealed body")
    mics = []
    for _ in range(r.u8()):
        scheme = r.u8()
        if scheme not in (MicScheme.CBC_RESIDUE, MicScheme.KEYED_HASH):
            raise MalformedMessage(f"unknown MIC scheme {scheme}")
        mics.append(Mic(r.take(r.u8()), MicScheme(scheme)))
    masked = [r.blob() for _ in range(r.u8())]
    piggyback = None
    if flags & _FLAG_PIGGYBACK:
        piggyback = parse_message(r.blob())
    return Message(kind, body, sealed, tuple(mics), tuple(masked), piggyback)


def parse_message(data: bytes) -> Message:
    """Inverse of :func:`serialize_message`; raises MalformedMessage otherwise."""
    if not data:
        raise MalformedMessage("empty byte string")
    r = _Reader(bytes(data))
    msg = _read_message(r)
    if r.pos != len(r.data):
        raise MalformedMessage("trailing bytes after message")
    return msg


@dataclass(frozen=True)
class Frame:
    """Link-layer envelope; the unit of traffic accounting.

    ``ip_dst`` is set on routed unicast frames and ``relay_ip`` on DHCP
    traffic that a relay agent has forwarded (the giaddr of real DHCP).
    """

    src_mac: MacAddress
    dst_mac: MacAddress
    payload: Message
    sent_at: int = 0
    ip_dst: Optional[IPv4Address] = None
    relay_ip: Optional[IPv4Address] = None
    wire_size: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "wire_size", len(serialize_message(self.payload)) + LINK_HEADER_BYTES)

    @property
    def is_broadcast(self) -> bool:
        return self.dst_mac.is_broadcast

    def readdress(self, src_mac: MacAddress, dst_mac: MacAddress, sent_at: int, **kw) -> "Frame":
        values = dict(ip_dst=self.ip_dst, relay_ip=self.relay_ip)
        values.update(kw)
        return Frame(src_mac, dst_mac, self.payload, sent_at, **values)
