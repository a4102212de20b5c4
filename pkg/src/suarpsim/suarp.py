"""Unicast, integrity-protected address resolution against a central server.

A host asks the server (DHCP+ in dynamic mode, DHCP- in static mode) for
the MAC behind an IP instead of broadcasting.  The server answers with a
MIC-protected response; the host acknowledges, either riding on another
frame it sends to the server within ``t2`` or standalone afterwards.

Variants differ only in what they attach:

=======  ==================  ==============================  ==========================
variant  request             response                        acknowledgment
=======  ==================  ==============================  ==========================
BASE     plain               CBC residue over the response   sealed (ip_b, t_s, t_a)
ALT_V1   H(K, RN, req)       H(K, RN, res)                   sealed (.., NRN)
ALT_V2   H(K, RN, req)       S_K xor H(K, req, res),         plain + H(S_K, ack, NRN)
                             H(S_K, NRN)
=======  ==================  ==============================  ==========================
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from ipaddress import IPv4Address
from typing import Callable, Iterable, Mapping, Optional, Union

from .crypto import (
    DIGEST_SIZE, NONCE_SIZE, KeyStore, SessionKey, SharedKey, cbc_residue_mic, decrypt_payload,
    encrypt_payload, keyed_hash_mic, mics_equal, new_nonce, xor_mask,
)
from .errors import (
    DecryptFailure, IntegrityReject, LengthMismatch, MalformedMessage, MappingUnknown,
    ServerUnreachable, UnknownAssociation,
)
from .legacy import CachingResolver, Resolution
from .model import (
    BROADCAST_MAC, ZERO_MAC, Frame, MacAddress, Message, MessageKind, Mic, MicScheme,
    RegistrationAdvert, SuarpAck, SuarpReq, SuarpRes, ip, parse_body, serialize_body,
    serialize_message,
)
from .netsim import Host, Pending, Service


class SuarpVariant(enum.Enum):
    BASE = "Base"
    ALT_V1 = "AltV1"
    ALT_V2 = "AltV2"

    @classmethod
    def parse(cls, text: Union[str, "SuarpVariant"]) -> "SuarpVariant":
        if isinstance(text, cls):
            return text
        for v in cls:
            if text.lower() in (v.value.lower(), v.name.lower()):
                return v
        raise ValueError(f"unknown variant {text!r}")


class Integrity(enum.Enum):
    PENDING = "pending"
    ICP = "ICP"
    ICF = "ICF"


class Phase(enum.Enum):
    AWAITING_RESPONSE = "awaiting_response"
    AWAITING_PIGGYBACK = "awaiting_piggyback"
    DONE = "done"
    FAILED = "failed"


# -- message schemas -----------------------------------------------------------


@dataclass(frozen=True)
class MicSchema:
    mics: int
    masked: int = 0
    sealed: bool = False
    scheme: Optional[MicScheme] = None


MIC_SCHEMA: dict[SuarpVariant, dict[MessageKind, MicSchema]] = {
    SuarpVariant.BASE: {
        MessageKind.SUARP_REQ: MicSchema(0),
        MessageKind.SUARP_RES: MicSchema(1, scheme=MicScheme.CBC_RESIDUE),
        MessageKind.SUARP_ACK: MicSchema(0, sealed=True),
    },
    SuarpVariant.ALT_V1: {
        MessageKind.SUARP_REQ: MicSchema(1, scheme=MicScheme.KEYED_HASH),
        MessageKind.SUARP_RES: MicSchema(1, scheme=MicScheme.KEYED_HASH),
        MessageKind.SUARP_ACK: MicSchema(0, sealed=True),
    },
    SuarpVariant.ALT_V2: {
        MessageKind.SUARP_REQ: MicSchema(1, scheme=MicScheme.KEYED_HASH),
        MessageKind.SUARP_RES: MicSchema(1, masked=1, scheme=MicScheme.KEYED_HASH),
        MessageKind.SUARP_ACK: MicSchema(1, scheme=MicScheme.KEYED_HASH),
    },
}

# MIC values checked per completed exchange (request side + response side + ack side).
VERIFICATIONS_PER_CYCLE = {SuarpVariant.BASE: 1, SuarpVariant.ALT_V1: 2, SuarpVariant.ALT_V2: 3}


def matches_schema(variant: SuarpVariant, msg: Message) -> bool:
    schema = MIC_SCHEMA[variant].get(msg.kind)
    if schema is None:
        return False
    if schema.sealed != bool(msg.sealed) or len(msg.mics) != schema.mics or len(msg.masked) != schema.masked:
        return False
    return schema.scheme is None or all(m.scheme == schema.scheme for m in msg.mics)


# -- per-variant constructions -------------------------------------------------


def _b(body) -> bytes:
    return serialize_body(body)


def request_message(variant: SuarpVariant, key: SharedKey, rn: bytes, req: SuarpReq) -> Message:
    if variant == SuarpVariant.BASE:
        return Message.of(req)
    return Message.of(req, mics=(keyed_hash_mic(key, rn, [_b(req)]),))


def verify_request(variant: SuarpVariant, key: SharedKey, rn: bytes, msg: Message) -> bool:
    if not matches_schema(variant, msg):
        return False
    if variant == SuarpVariant.BASE:
        return True
    return mics_equal(msg.mics[0], keyed_hash_mic(key, rn, [_b(msg.body)]))


def v2_transcript(req: SuarpReq, res: SuarpRes) -> bytes:
    return _b(req) + _b(res)


def v2_nrn(key: SharedKey, rn: bytes, req: SuarpReq, res: SuarpRes) -> bytes:
    return keyed_hash_mic(key, rn, [v2_transcript(req, res)]).digest[:NONCE_SIZE]


def response_message(variant: SuarpVariant, key: SharedKey, rn: bytes, req: SuarpReq, res: SuarpRes,
                     session_key: Optional[SessionKey] = None) -> Message:
    if variant == SuarpVariant.BASE:
        return Message.of(res, mics=(cbc_residue_mic(key, _b(res)),))
    if variant == SuarpVariant.ALT_V1:
        return Message.of(res, mics=(keyed_hash_mic(key, rn, [_b(res)]),))
    if session_key is None:
        raise ValueError("AltV2 responses need a session key")
    mic2 = keyed_hash_mic(key, None, [_b(req), _b(res)])
    mic3 = keyed_hash_mic(session_key, None, [v2_nrn(key, rn, req, res)])
    return Message.of(res, mics=(mic3,), masked=(xor_mask(session_key, mic2),))


@dataclass
class ResponseCheck:
    integrity: Integrity
    reason: str = ""
    session_key: Optional[SessionKey] = None
    nrn: Optional[bytes] = None


def verify_response(variant: SuarpVariant, key: SharedKey, rn: bytes, req: SuarpReq, msg: Message,
                    now: int, delta_t: int) -> ResponseCheck:
    """Recompute the response MIC(s) and apply the freshness bound."""
    if msg.body is None or not matches_schema(variant, msg):
        return ResponseCheck(Integrity.ICF, "schema")
    res: SuarpRes = msg.body
    if (res.ip_a, res.mac_a, res.ip_b) != (req.ip_a, req.mac_a, req.ip_b):
        return ResponseCheck(Integrity.ICF, "mismatch")
    if variant == SuarpVariant.BASE:
        ok = mics_equal(msg.mics[0], cbc_residue_mic(key, _b(res)))
        check = ResponseCheck(Integrity.ICP if ok else Integrity.ICF, "" if ok else "mic")
    elif variant == SuarpVariant.ALT_V1:
        ok = mics_equal(msg.mics[0], keyed_hash_mic(key, rn, [_b(res)]))
        check = ResponseCheck(Integrity.ICP if ok else Integrity.ICF, "" if ok else "mic")
    else:
        mic2 = keyed_hash_mic(key, None, [_b(req), _b(res)])
        try:
            session_key = SessionKey(xor_mask(msg.masked[0], mic2))
        except LengthMismatch:
            return ResponseCheck(Integrity.ICF, "mask")
        nrn = v2_nrn(key, rn, req, res)
        ok = mics_equal(msg.mics[0], keyed_hash_mic(session_key, None, [nrn]))
        check = ResponseCheck(Integrity.ICP if ok else Integrity.ICF, "" if ok else "mic",
                              session_key if ok else None, nrn if ok else None)
    if check.integrity == Integrity.ICP and now - res.t_s > delta_t:
        return ResponseCheck(Integrity.ICF, "stale")
    return check


def ack_message(variant: SuarpVariant, key: SharedKey, ack: SuarpAck, session_key: Optional[SessionKey] = None,
                nrn: Optional[bytes] = None, rng=None) -> Message:
    if variant == SuarpVariant.ALT_V2:
        return Message.of(ack, mics=(keyed_hash_mic(session_key, None, [_b(ack), nrn]),))
    return Message(MessageKind.SUARP_ACK, sealed=encrypt_payload(key, _b(ack), rng))


def open_ack(variant: SuarpVariant, key: SharedKey, msg: Message, session_key: Optional[SessionKey] = None,
             nrn: Optional[bytes] = None) -> Optional[SuarpAck]:
    """Return the acknowledgment body if it authenticates under this key, else None."""
    if not matches_schema(variant, msg):
        return None
    if variant == SuarpVariant.ALT_V2:
        if session_key is None or nrn is None:
            return None
        ok = mics_equal(msg.mics[0], keyed_hash_mic(session_key, None, [_b(msg.body), nrn]))
        return msg.body if ok else None
    try:
        body = parse_body(decrypt_payload(key, msg.sealed))
    except (DecryptFailure, MalformedMessage):
        return None
    return body if isinstance(body, SuarpAck) else None


# -- host side -----------------------------------------------------------------


@dataclass
class HostExchangeState:
    target_ip: IPv4Address
    phase: Phase = Phase.AWAITING_RESPONSE
    request_sent_at: int = 0
    response: Optional[SuarpRes] = None
    integrity: Integrity = Integrity.PENDING
    retries: int = 0
    request: Optional[Message] = None
    rn: bytes = b""
    response_bytes: bytes = b""
    response_received_at: int = 0
    session_key: Optional[SessionKey] = None
    nrn: Optional[bytes] = None
    ack: Optional[Message] = None
    frames_sent: int = 0
    waiters: list = field(default_factory=list)
    timer: object = None


@dataclass
class _Accepted:
    response_bytes: bytes
    exchange: HostExchangeState
    accepted_at: int


@dataclass
class Verdict:
    t: int
    target_ip: IPv4Address
    integrity: Integrity
    reason: str = ""


class SuarpClient(CachingResolver):
    """Host-side resolver: one exchange in flight, further targets queue behind it."""

    def __init__(self, variant, server_ip, server_mac, store: Optional[KeyStore] = None,
                 retries: Optional[int] = 3, ttl: Optional[int] = None, reack_window: Optional[int] = None):
        super().__init__(ttl)
        self.variant = SuarpVariant.parse(variant)
        self.server_ip = ip(server_ip) if server_ip is not None else None
        self.server_mac = MacAddress.parse(server_mac) if server_mac is not None else None
        self.store = store if store is not None else KeyStore()
        self.retries = retries
        self.reack_window = reack_window
        self.active: Optional[HostExchangeState] = None
        self.awaiting_ack: Optional[HostExchangeState] = None
        self.queue: list[HostExchangeState] = []
        self.history: list[HostExchangeState] = []
        self.verdicts: list[Verdict] = []
        self.stats: Counter = Counter()
        self._accepted: dict[IPv4Address, _Accepted] = {}
        self._ack_timer = None

    def bind(self, host: Host) -> None:
        super().bind(host)
        host.resolver = self

    @property
    def association(self):
        return (self.host.mac, str(self.server_ip))

    def known_mac(self, addr) -> Optional[MacAddress]:
        return self.server_mac if addr == self.server_ip else None

    def learn_server(self, server_ip, server_mac) -> None:
        self.server_ip, self.server_mac = ip(server_ip), MacAddress.parse(server_mac)

    # resolution

    def resolve(self, target_ip) -> Pending:
        target_ip = ip(target_ip)
        p = Pending(f"suarp {target_ip}")
        now = self.sim.now
        if target_ip == self.server_ip and self.server_mac is not None:
            p.resolve(Resolution(target_ip, self.server_mac, from_cache=True, completed_at=now))
            return p
        cached = self.cache.lookup(target_ip, now)
        if cached is not None:
            p.resolve(Resolution(target_ip, cached, from_cache=True, completed_at=now))
            return p
        for ex in ([self.active] if self.active else []) + self.queue:
            if ex.target_ip == target_ip:
                ex.waiters.append(p)
                return p
        ex = HostExchangeState(target_ip, waiters=[p])
        if self.server_mac is None:
            ex.phase = Phase.FAILED
            p.fail(ServerUnreachable("no resolution server known"))
            return p
        self.queue.append(ex)
        if self.active is None:
            self._next()
        return p

    def _next(self) -> None:
        if self.active is not None or not self.queue:
            return
        ex = self.queue.pop(0)
        self.active = ex
        try:
            entry = self.store.entry(self.association)
        except UnknownAssociation as exc:
            self._fail(ex, exc)
            return
        piggy = None
        if self.awaiting_ack is not None:
            if self.sim.now - self.awaiting_ack.response_received_at < self.sim.timers.t2:
                piggy = self._finalize_ack(self.awaiting_ack)
                self.stats["acks_piggybacked"] += 1
            else:
                self._send_standalone_ack()
        ex.rn = entry.current_rn
        req = SuarpReq(self.host.ip, self.host.mac, ex.target_ip)
        ex.request = request_message(self.variant, entry.shared_key, ex.rn, req)
        self._send_request(ex, piggy)

    def _send_request(self, ex: HostExchangeState, piggy: Optional[Message] = None) -> None:
        ex.request_sent_at = self.sim.now
        ex.frames_sent += 1
        self.stats["requests_sent"] += 1
        self._to_server(ex.request.with_piggyback(piggy) if piggy is not None else ex.request)
        ex.timer = self.sim.schedule(self.sim.timers.t1, self._response_timeout, ex)

    def _to_server(self, msg: Message) -> Frame:
        if self.host.is_local(self.server_ip) or self.host.gateway is None:
            return self.host.send(self.server_mac, msg, ip_dst=self.server_ip)
        return self.host.send(self.host.gateway, msg, ip_dst=self.server_ip)

    def _response_timeout(self, ex: HostExchangeState) -> None:
        if ex is not self.active or ex.phase != Phase.AWAITING_RESPONSE:
            return
        if self.retries is None or ex.retries < self.retries:
            ex.retries += 1
            self.stats["retransmits"] += 1
            self.sim.note("retry", self.host.name, f"request {ex.target_ip} again", msg_kind="SuarpReq")
            self._send_request(ex)
            return
        self._fail(ex, ServerUnreachable(f"no response for {ex.target_ip} after {ex.retries} retries"))

    def _fail(self, ex: HostExchangeState, error: Exception) -> None:
        ex.phase = Phase.FAILED
        if ex.timer is not None:
            ex.timer.cancel()
        self.history.append(ex)
        if self.active is ex:
            self.active = None
        for p in ex.waiters:
            p.fail(error)
        self._next()

    # inbound

    def handle(self, frame: Frame, msg: Message) -> bool:
        if msg.kind != MessageKind.SUARP_RES:
            return False
        now = self.sim.now
        raw = serialize_message(msg)
        res = msg.body
        target = res.ip_b if res is not None else None
        done = self._accepted.get(target)
        if done is not None and done.response_bytes == raw:
            self._duplicate(target, done)
            return True
        ex = self.active
        if ex is None or ex.phase != Phase.AWAITING_RESPONSE or res is None or res.ip_b != ex.target_ip:
            self._verdict(target, Integrity.ICF, "unsolicited")
            return True
        entry = self.store.entry(self.association)
        self.stats["mic_verifications"] += 1
        check = verify_response(self.variant, entry.shared_key, ex.rn, ex.request.body, msg, now,
                                self.sim.timers.delta_t)
        self._verdict(target, check.integrity, check.reason)
        if check.integrity != Integrity.ICP:
            return True
        ex.timer.cancel()
        ex.integrity = Integrity.ICP
        ex.response = res
        ex.response_bytes = raw
        ex.response_received_at = now
        ex.session_key = check.session_key
        if self.variant == SuarpVariant.ALT_V1:
            ex.nrn = new_nonce(self.sim.rng)
        else:
            ex.nrn = check.nrn
        ex.phase = Phase.AWAITING_PIGGYBACK
        if self.awaiting_ack is not None:
            self._send_standalone_ack()
        self.awaiting_ack = ex
        self._ack_timer = self.sim.schedule(self.sim.timers.t2 + 1, self._piggyback_window_closed, ex)
        self.active = None
        if res.is_negative:
            error = MappingUnknown(f"server holds no mapping for {res.ip_b}")
            for p in ex.waiters:
                p.fail(error)
        else:
            self.cache.insert(res.ip_b, res.mac_b, now)
            for p in ex.waiters:
                p.resolve(Resolution(res.ip_b, res.mac_b, frames_sent=ex.frames_sent, completed_at=now))
        self._next()
        return True

    def _verdict(self, target, integrity: Integrity, reason: str) -> None:
        self.verdicts.append(Verdict(self.sim.now, target, integrity, reason))
        self.stats[integrity.value if not reason else f"{integrity.value}:{reason}"] += 1
        self.sim.note("verdict", self.host.name, f"{integrity.value}{':' + reason if reason else ''}",
                      dst=str(target), msg_kind="SuarpRes")

    def _duplicate(self, target, done: _Accepted) -> None:
        self._verdict(target, Integrity.ICF, "duplicate")
        window = self.reack_window if self.reack_window is not None else 4 * self.sim.timers.t3
        if self.awaiting_ack is not None and self.awaiting_ack.response_bytes == done.response_bytes:
            self._send_standalone_ack()
        elif self.sim.now - done.accepted_at <= window:
            # same NRN, fresh t_a: the stored ACK would fail the server's freshness check
            self.stats["reacks"] += 1
            self._to_server(self._build_ack(done.exchange))

    # acknowledgment

    def _build_ack(self, ex: HostExchangeState) -> Message:
        entry = self.store.entry(self.association)
        res = ex.response
        ack_body = SuarpAck(res.ip_b, res.t_s, self.sim.now,
                            ex.nrn if self.variant != SuarpVariant.BASE else None)
        return ack_message(self.variant, entry.shared_key, ack_body, ex.session_key, ex.nrn, self.sim.rng)

    def _finalize_ack(self, ex: HostExchangeState) -> Message:
        entry = self.store.entry(self.association)
        res = ex.response
        ex.ack = self._build_ack(ex)
        if self.variant != SuarpVariant.BASE:
            self.store.commit_rn(self.association, ex.nrn)
        if ex.session_key is not None:
            entry.current_session_key = ex.session_key
        ex.phase = Phase.DONE
        self._accepted[res.ip_b] = _Accepted(ex.response_bytes, ex, self.sim.now)
        self.history.append(ex)
        self.awaiting_ack = None
        if self._ack_timer is not None:
            self._ack_timer.cancel()
            self._ack_timer = None
        return ex.ack

    def _send_standalone_ack(self) -> None:
        ex = self.awaiting_ack
        if ex is None:
            return
        ack = self._finalize_ack(ex)
        self.stats["acks_standalone"] += 1
        self._to_server(ack)

    def _piggyback_window_closed(self, ex: HostExchangeState) -> None:
        if self.awaiting_ack is ex:
            self._send_standalone_ack()

    def _to_server_frame(self, frame: Frame) -> bool:
        return frame.dst_mac == self.server_mac or (
            frame.ip_dst is not None and frame.ip_dst == self.server_ip)

    def outbound(self, frame: Frame) -> Frame:
        ex = self.awaiting_ack
        msg = frame.payload
        if ex is None or msg.piggyback is not None or msg.kind == MessageKind.SUARP_ACK:
            return frame
        if not self._to_server_frame(frame) or self.sim.now - ex.response_received_at >= self.sim.timers.t2:
            return frame
        ack = self._finalize_ack(ex)
        self.stats["acks_piggybacked"] += 1
        return Frame(frame.src_mac, frame.dst_mac, msg.with_piggyback(ack), frame.sent_at,
                     frame.ip_dst, frame.relay_ip)


def host_resolve(host: Host, target_ip) -> Pending:
    return host.resolver.resolve(target_ip)


# -- server side ---------------------------------------------------------------


@dataclass
class ServerExchange:
    association: tuple
    request: Message
    response: Message
    key: SharedKey
    sent_at: int
    client_ip: IPv4Address
    client_mac: MacAddress
    session_key: Optional[SessionKey] = None
    nrn: Optional[bytes] = None
    retransmits: int = 0
    timer: object = None


MappingSource = Union[Mapping, Callable[[], Mapping]]


class SuarpServer(Service):
    """Answers resolution requests from a mapping table and waits for ACKs."""

    def __init__(self, variant, store: KeyStore, mapping: MappingSource,
                 retransmits: Optional[int] = 3):
        self.variant = SuarpVariant.parse(variant)
        self.store = store
        self._mapping = mapping
        self.retransmits = retransmits
        self.outstanding: dict[tuple, ServerExchange] = {}
        self.stats: Counter = Counter()
        self.rejects: list[tuple[int, str]] = []

    @property
    def server_id(self) -> str:
        return str(self.host.ip)

    def mapping_table(self) -> dict:
        table = self._mapping() if callable(self._mapping) else self._mapping
        return {ip(k): MacAddress.parse(v) for k, v in table.items()}

    def lookup(self, addr: IPv4Address) -> Optional[MacAddress]:
        return self.mapping_table().get(addr)

    def handle(self, frame: Frame, msg: Message) -> bool:
        if msg.kind == MessageKind.SUARP_REQ:
            try:
                self.answer(frame, msg)
            except (IntegrityReject, UnknownAssociation) as exc:
                self.rejects.append((self.sim.now, str(exc)))
                self.stats["rejects"] += 1
                self.sim.note("reject", self.host.name, str(exc), msg_kind="SuarpReq")
            return True
        if msg.kind == MessageKind.SUARP_ACK:
            self.receive_ack(msg)
            return True
        return msg.kind == MessageKind.SUARP_RES

    def answer(self, frame: Frame, msg: Message) -> Message:
        """Verify the request and emit the response; raises on rejection."""
        req: SuarpReq = msg.body
        if req is None:
            raise IntegrityReject("request without a plaintext body")
        assoc = (req.mac_a, self.server_id)
        entry = self.store.entry(assoc)
        if self.variant != SuarpVariant.BASE:
            self.stats["mic_verifications"] += 1
        if not verify_request(self.variant, entry.shared_key, entry.current_rn, msg):
            raise IntegrityReject(f"request MIC from {req.mac_a} failed")
        now = self.sim.now
        mac_b = self.lookup(req.ip_b)
        if mac_b is None:
            self.stats["unknown_mapping"] += 1
        res = SuarpRes(req.ip_a, req.mac_a, req.ip_b, mac_b or ZERO_MAC, now)
        session_key = SessionKey.generate(self.sim.rng) if self.variant == SuarpVariant.ALT_V2 else None
        response = response_message(self.variant, entry.shared_key, entry.current_rn, req, res, session_key)
        nrn = v2_nrn(entry.shared_key, entry.current_rn, req, res) if self.variant == SuarpVariant.ALT_V2 else None
        previous = self.outstanding.pop((req.mac_a, req.ip_b), None)
        if previous is not None and previous.timer is not None:
            previous.timer.cancel()
        ex = ServerExchange(assoc, msg, response, entry.shared_key, now, req.ip_a, req.mac_a, session_key, nrn)
        self.outstanding[(req.mac_a, req.ip_b)] = ex
        self.stats["responses"] += 1
        self._send(ex)
        return response

    def _send(self, ex: ServerExchange) -> None:
        if self.host.is_local(ex.client_ip) or self.host.gateway is None:
            self.host.send(ex.client_mac, ex.response, ip_dst=ex.client_ip)
        else:
            self.host.send(self.host.gateway, ex.response, ip_dst=ex.client_ip)
        ex.timer = self.sim.schedule(self.sim.timers.t3, self._ack_timeout, ex)

    def _ack_timeout(self, ex: ServerExchange) -> None:
        key = (ex.client_mac, ex.response.body.ip_b)
        if self.outstanding.get(key) is not ex:
            return
        if self.retransmits is None or ex.retransmits < self.retransmits:
            ex.retransmits += 1
            self.stats["retransmits"] += 1
            self.sim.note("retry", self.host.name, f"response {key[1]} again", msg_kind="SuarpRes")
            self._send(ex)
            return
        del self.outstanding[key]
        self.stats["unacknowledged"] += 1
        self.sim.note("fail", self.host.name, f"no ACK from {ex.client_mac}", msg_kind="SuarpAck")

    def receive_ack(self, msg: Message) -> bool:
        now = self.sim.now
        for key, ex in list(self.outstanding.items()):
            if msg.body is not None and (msg.body.ip_b, msg.body.t_s) != (key[1], ex.response.body.t_s):
                continue
            if self.variant == SuarpVariant.ALT_V2:
                self.stats["mic_verifications"] += 1
            ack = open_ack(self.variant, ex.key, msg, ex.session_key, ex.nrn)
            if ack is None or ack.ip_b != key[1] or ack.t_s != ex.response.body.t_s:
                continue
            if now - ack.t_a > self.sim.timers.delta_t or ack.t_a < ack.t_s:
                self.sim.note("reject", self.host.name, "stale ACK", msg_kind="SuarpAck")
                return False
            if self.variant == SuarpVariant.ALT_V1:
                if ack.nrn is None or len(ack.nrn) != NONCE_SIZE:
                    continue
                self.store.commit_rn(ex.association, ack.nrn)
            elif self.variant == SuarpVariant.ALT_V2:
                self.store.commit_rn(ex.association, ex.nrn)
                self.store.entry(ex.association).current_session_key = ex.session_key
            ex.timer.cancel()
            del self.outstanding[key]
            self.stats["acks"] += 1
            self.sim.note("ack", self.host.name, f"acknowledged {key[1]} by {ex.client_mac}", msg_kind="SuarpAck")
            return True
        self.stats["acks_rejected"] += 1
        self.sim.note("reject", self.host.name, "unmatched ACK", msg_kind="SuarpAck")
        return False


def server_answer(server: SuarpServer, frame: Frame, msg: Message) -> Message:
    return server.answer(frame, msg)


# -- static addressing ---------------------------------------------------------


def registration_message(key: SharedKey, advert: RegistrationAdvert, rng=None) -> Message:
    """Mapping advert sealed under the host's key; the MAC rides along as a key hint."""
    return Message(MessageKind.REGISTRATION_ADVERT, sealed=encrypt_payload(key, serialize_body(advert), rng),
                   masked=(advert.mac.octets,))


class RegistrationServer(Service):
    """Static-mode directory: records sealed host adverts, announces itself periodically."""

    def __init__(self, store: KeyStore, advert_interval: int = 60_000, max_age: Optional[int] = None):
        self.store = store
        self.advert_interval = advert_interval
        self.max_age = max_age
        self.table: dict[IPv4Address, MacAddress] = {}
        self.ignored: list[tuple[int, str]] = []

    @property
    def server_id(self) -> str:
        return str(self.host.ip)

    def mapping_table(self) -> dict:
        return dict(self.table)

    def start(self) -> None:
        self.sim.schedule(0, self.advertise)

    def advertise(self) -> None:
        advert = RegistrationAdvert(self.host.ip, self.host.mac, self.sim.now, from_server=True)
        self.host.send(BROADCAST_MAC, Message.of(advert))
        if self.advert_interval:
            self.sim.schedule(self.advert_interval, self.advertise)

    def handle(self, frame: Frame, msg: Message) -> bool:
        if msg.kind != MessageKind.REGISTRATION_ADVERT:
            return False
        if msg.body is not None:
            return True
        try:
            self.register(msg)
        except (DecryptFailure, MalformedMessage, UnknownAssociation, IntegrityReject, ValueError) as exc:
            self.ignored.append((self.sim.now, str(exc)))
            self.sim.note("reject", self.host.name, f"registration ignored: {exc}", msg_kind="RegistrationAdvert")
        return True

    def register(self, msg: Message) -> RegistrationAdvert:
        if len(msg.masked) != 1 or len(msg.masked[0]) != 6:
            raise MalformedMessage("registration lacks its key hint")
        hint = MacAddress(msg.masked[0])
        entry = self.store.entry((hint, self.server_id))
        advert = parse_body(decrypt_payload(entry.shared_key, msg.sealed))
        if not isinstance(advert, RegistrationAdvert) or advert.mac != hint or advert.from_server:
            raise IntegrityReject("registration content does not match its sender")
        if self.max_age is not None and self.sim.now - advert.timestamp > self.max_age:
            raise IntegrityReject("stale registration")
        self.table[advert.ip] = advert.mac
        self.sim.note("register", self.host.name, f"{advert.ip}={advert.mac}", msg_kind="RegistrationAdvert")
        return advert


class StaticRegistrar(Service):
    """Host half of static mode: registers at power-up and learns the server from its adverts."""

    def __init__(self, client: SuarpClient, key: Optional[SharedKey] = None):
        self.client = client
        self.key = key
        self.registrations = 0

    def start(self) -> None:
        if self.client.server_mac is not None:
            self.sim.schedule(0, self.register)

    def _key(self) -> SharedKey:
        if self.key is not None:
            return self.key
        return self.client.store.entry(self.client.association).shared_key

    def register(self) -> None:
        try:
            key = self._key()
        except UnknownAssociation:
            self.sim.note("fail", self.host.name, "no key to register with", msg_kind="RegistrationAdvert")
            return
        advert = RegistrationAdvert(self.host.ip, self.host.mac, self.sim.now)
        self.registrations += 1
        self.client._to_server(registration_message(key, advert, self.sim.rng))

    def handle(self, frame: Frame, msg: Message) -> bool:
        if msg.kind != MessageKind.REGISTRATION_ADVERT or msg.body is None:
            return False
        advert = msg.body
        if advert.from_server:
            first = self.client.server_mac is None
            if first:
                self.client.learn_server(advert.ip, advert.mac)
            if first or self.registrations == 0:
                self.register()
        return True


def static_mode_register(registrar: StaticRegistrar) -> None:
    registrar.register()
