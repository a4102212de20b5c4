"""Keyed DHCP: the same four messages as plain DHCP, with MICs attached.

============  ===================  ==========================  ======================  ======================
variant       DISCOVER             OFFER                       REQUEST                 ACK
============  ===================  ==========================  ======================  ======================
BASE          plain                enc(CBC(offer))             MIC1, CBC(request)      plain or sealed
ALT_V1        H(K, RN, discover)   H(K, RN, offer)             H(K, RN, request)       sealed (ack, NRN)
ALT_V2        H(K, RN, discover)   S_K xor H(K, disc, offer),  S_K xor H(K, offer,     plain + H(S_K, ack,
                                   H(S_K, NRN)                 request), H(S_K, NRN)   NRN)
============  ===================  ==========================  ======================  ======================

A lease is committed only when the server emits a verified ACK.  The
server rolls RN forward as it sends the ACK and keeps the previous value as
a fallback, so a lost ACK does not strand the client.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

from .crypto import (
    NONCE_SIZE, KeyStore, SessionKey, SharedKey, cbc_residue_mic, decrypt_payload, encrypt_payload,
    keyed_hash_mic, mics_equal, new_nonce, xor_mask,
)
from .errors import DecryptFailure, LengthMismatch, MalformedMessage
from .legacy import DhcpClient, DhcpConfig, DhcpServer, Lease, ServerMode
from .model import (
    BROADCAST_MAC, DhcpAck, DhcpDiscover, DhcpOffer, DhcpRequest, Frame, Message, MessageKind, Mic,
    MicScheme, RegistrationAdvert, ip, parse_body, serialize_body,
)


class SdhcpVariant(enum.Enum):
    BASE = "Base"
    ALT_V1 = "AltV1"
    ALT_V2 = "AltV2"

    @classmethod
    def parse(cls, text) -> "SdhcpVariant":
        if isinstance(text, cls):
            return text
        for v in cls:
            if str(text).lower() in (v.value.lower(), v.name.lower()):
                return v
        raise ValueError(f"unknown variant {text!r}")


def _b(body) -> bytes:
    return serialize_body(body)


def _nrn(key: SharedKey, rn: bytes, discover: DhcpDiscover, offer: DhcpOffer) -> bytes:
    return keyed_hash_mic(key, rn, [_b(discover) + _b(offer)]).digest[:NONCE_SIZE]


@dataclass
class Exchange:
    """Per-transaction material one side keeps between steps."""

    key: SharedKey
    rn: bytes
    discover: Optional[DhcpDiscover] = None
    offer: Optional[DhcpOffer] = None
    mic1: bytes = b""
    session_key: Optional[SessionKey] = None
    nrn: Optional[bytes] = None


# -- step constructions --------------------------------------------------------


def discover_message(variant: SdhcpVariant, ex: Exchange, body: DhcpDiscover) -> Message:
    ex.discover = body
    if variant == SdhcpVariant.BASE:
        return Message.of(body)
    return Message.of(body, mics=(keyed_hash_mic(ex.key, ex.rn, [_b(body)]),))


def verify_discover(variant: SdhcpVariant, key: SharedKey, rn: bytes, msg: Message) -> bool:
    if variant == SdhcpVariant.BASE:
        return not msg.mics and not msg.masked
    return (len(msg.mics) == 1 and not msg.masked
            and mics_equal(msg.mics[0], keyed_hash_mic(key, rn, [_b(msg.body)])))


def offer_message(variant: SdhcpVariant, ex: Exchange, body: DhcpOffer, rng=None) -> Message:
    ex.offer = body
    if variant == SdhcpVariant.BASE:
        mic1 = cbc_residue_mic(ex.key, _b(body))
        ex.mic1 = mic1.digest
        return Message.of(body, masked=(encrypt_payload(ex.key, mic1.digest, rng),))
    if variant == SdhcpVariant.ALT_V1:
        return Message.of(body, mics=(keyed_hash_mic(ex.key, ex.rn, [_b(body)]),))
    ex.session_key = SessionKey.generate(rng)
    ex.nrn = _nrn(ex.key, ex.rn, ex.discover, body)
    mic2 = keyed_hash_mic(ex.key, None, [_b(ex.discover), _b(body)])
    mic3 = keyed_hash_mic(ex.session_key, None, [ex.nrn])
    return Message.of(body, mics=(mic3,), masked=(xor_mask(ex.session_key, mic2),))


def verify_offer(variant: SdhcpVariant, ex: Exchange, msg: Message) -> bool:
    body = msg.body
    if body is None:
        return False
    if variant == SdhcpVariant.BASE:
        if msg.mics or len(msg.masked) != 1:
            return False
        try:
            mic1 = decrypt_payload(ex.key, msg.masked[0])
        except DecryptFailure:
            return False
        if not mics_equal(mic1, cbc_residue_mic(ex.key, _b(body))):
            return False
        ex.mic1 = mic1
    elif variant == SdhcpVariant.ALT_V1:
        if len(msg.mics) != 1 or msg.masked:
            return False
        if not mics_equal(msg.mics[0], keyed_hash_mic(ex.key, ex.rn, [_b(body)])):
            return False
    else:
        if len(msg.mics) != 1 or len(msg.masked) != 1 or ex.discover is None:
            return False
        mic2 = keyed_hash_mic(ex.key, None, [_b(ex.discover), _b(body)])
        try:
            session_key = SessionKey(xor_mask(msg.masked[0], mic2))
        except LengthMismatch:
            return False
        nrn = _nrn(ex.key, ex.rn, ex.discover, body)
        if not mics_equal(msg.mics[0], keyed_hash_mic(session_key, None, [nrn])):
            return False
        ex.session_key, ex.nrn = session_key, nrn
    ex.offer = body
    return True


def request_message(variant: SdhcpVariant, ex: Exchange, body: DhcpRequest) -> Message:
    if variant == SdhcpVariant.BASE:
        mic1 = Mic(ex.mic1 or b"\x00" * 8, MicScheme.CBC_RESIDUE)
        return Message.of(body, mics=(mic1, cbc_residue_mic(ex.key, _b(body))))
    if variant == SdhcpVariant.ALT_V1:
        return Message.of(body, mics=(keyed_hash_mic(ex.key, ex.rn, [_b(body)]),))
    # a client that never verified the offer has no session key; it sends zeros
    session_key = ex.session_key or SessionKey(bytes(20))
    mic4 = keyed_hash_mic(ex.key, None, [_b(ex.offer), _b(body)])
    mic5 = keyed_hash_mic(session_key, None, [ex.nrn or bytes(NONCE_SIZE)])
    return Message.of(body, mics=(mic5,), masked=(xor_mask(session_key, mic4),))


def verify_request(variant: SdhcpVariant, ex: Exchange, msg: Message) -> bool:
    body = msg.body
    if body is None or ex.offer is None:
        return False
    if variant == SdhcpVariant.BASE:
        return (len(msg.mics) == 2 and not msg.masked
                and mics_equal(msg.mics[0], ex.mic1)
                and mics_equal(msg.mics[1], cbc_residue_mic(ex.key, _b(body))))
    if variant == SdhcpVariant.ALT_V1:
        return (len(msg.mics) == 1 and not msg.masked
                and mics_equal(msg.mics[0], keyed_hash_mic(ex.key, ex.rn, [_b(body)])))
    if len(msg.mics) != 1 or len(msg.masked) != 1:
        return False
    mic4 = keyed_hash_mic(ex.key, None, [_b(ex.offer), _b(body)])
    try:
        recovered = xor_mask(msg.masked[0], mic4)
    except LengthMismatch:
        return False
    return (mics_equal(recovered, ex.session_key.secret)
            and mics_equal(msg.mics[0], keyed_hash_mic(ex.session_key, None, [ex.nrn])))


def ack_message(variant: SdhcpVariant, ex: Exchange, body: DhcpAck, encrypt: bool = True, rng=None) -> Message:
    if variant == SdhcpVariant.ALT_V2:
        return Message.of(body, mics=(keyed_hash_mic(ex.session_key, None, [_b(body), ex.nrn]),))
    if variant == SdhcpVariant.BASE and not encrypt:
        return Message.of(body)
    return Message(MessageKind.DHCP_ACK, sealed=encrypt_payload(ex.key, _b(body), rng))


def open_ack(variant: SdhcpVariant, ex: Exchange, msg: Message) -> Optional[DhcpAck]:
    if variant == SdhcpVariant.ALT_V2:
        if msg.body is None or len(msg.mics) != 1 or ex.session_key is None:
            return None
        ok = mics_equal(msg.mics[0], keyed_hash_mic(ex.session_key, None, [_b(msg.body), ex.nrn]))
        return msg.body if ok else None
    if msg.body is not None:
        return msg.body if variant == SdhcpVariant.BASE and not msg.mics else None
    try:
        body = parse_body(decrypt_payload(ex.key, msg.sealed))
    except (DecryptFailure, MalformedMessage):
        return None
    if not isinstance(body, DhcpAck):
        return None
    if variant == SdhcpVariant.ALT_V1 and (body.nrn is None or len(body.nrn) != NONCE_SIZE):
        return None
    return body


# -- agents --------------------------------------------------------------------


class SdhcpServer(DhcpServer):
    """DHCP+ address issuing: verifies every client step before answering."""

    is_plus = True

    def __init__(self, pool: Iterable, store: KeyStore, variant="AltV1", config: Optional[DhcpConfig] = None,
                 encrypt_ack: bool = True, static_leases: Optional[dict] = None, announce: bool = True):
        super().__init__(pool, config, static_leases)
        self.store = store
        self.variant = SdhcpVariant.parse(variant)
        self.encrypt_ack = encrypt_ack
        self.announce = announce
        self._ctx: dict[tuple, Exchange] = {}
        self.verifications = 0

    def start(self) -> None:
        super().start()
        if self.announce:
            self.sim.schedule(0, self.announce_identity)

    def announce_identity(self) -> None:
        advert = RegistrationAdvert(self.host.ip, self.host.mac, self.sim.now, from_server=True)
        self.host.send(BROADCAST_MAC, Message.of(advert))

    def _assoc(self, client_mac):
        return (client_mac, str(self.server_id))

    def accept_discover(self, frame: Frame, msg: Message) -> bool:
        body: DhcpDiscover = msg.body
        entry = self.store.get(self._assoc(body.client_mac))
        if entry is None:
            return False
        self.verifications += self.variant != SdhcpVariant.BASE
        for rn in (entry.current_rn, entry.previous_rn):
            if rn is not None and verify_discover(self.variant, entry.shared_key, rn, msg):
                self._ctx[(body.client_mac, body.xid)] = Exchange(entry.shared_key, rn, discover=body)
                return True
        return False

    def build_offer(self, frame: Frame, discover: Message, offer: DhcpOffer) -> Message:
        ex = self._ctx[(offer.client_mac, offer.xid)]
        return offer_message(self.variant, ex, offer, self.sim.rng)

    def accept_request(self, frame: Frame, msg: Message, lease: Lease) -> bool:
        body: DhcpRequest = msg.body
        ex = self._ctx.get((body.client_mac, body.xid))
        if ex is None or body.renewing:
            return False
        if abs(self.sim.now - body.timestamp) > self.sim.timers.delta_t:
            return False
        self.verifications += 1
        return verify_request(self.variant, ex, msg)

    def build_ack(self, frame: Frame, request: Message, ack: DhcpAck) -> Message:
        key = (ack.client_mac, ack.xid)
        ex = self._ctx.pop(key)
        assoc = self._assoc(ack.client_mac)
        if self.variant == SdhcpVariant.ALT_V1:
            nrn = new_nonce(self.sim.rng)
            ack = DhcpAck(ack.xid, ack.client_mac, ack.assigned_ip, ack.lease_duration, ack.server_id,
                          ack.timestamp, nrn)
            self._roll(assoc, ex.rn, nrn)
        elif self.variant == SdhcpVariant.ALT_V2:
            self._roll(assoc, ex.rn, ex.nrn)
            self.store.entry(assoc).current_session_key = ex.session_key
        return ack_message(self.variant, ex, ack, self.encrypt_ack, self.sim.rng)

    def _roll(self, assoc, used_rn: bytes, nrn: bytes) -> None:
        entry = self.store.entry(assoc)
        if used_rn != entry.current_rn:
            # the client answered under the fallback value; realign before rolling
            entry.current_rn = used_rn
        self.store.commit_rn(assoc, nrn)


class SdhcpClient(DhcpClient):
    """Keyed DHCP client bound to a single DHCP+ server id."""

    def __init__(self, variant, store: KeyStore, server_id, config: Optional[DhcpConfig] = None,
                 verify_offers: bool = True):
        super().__init__(config)
        self.variant = SdhcpVariant.parse(variant)
        self.store = store
        self.server_id = ip(server_id)
        self.verify_offers = verify_offers
        self._ex: Optional[Exchange] = None
        self.rejected = 0

    @property
    def association(self):
        return (self.client_mac, str(self.server_id))

    def _exchange(self) -> Exchange:
        entry = self.store.entry(self.association)
        return Exchange(entry.shared_key, entry.current_rn)

    def build_discover(self, body: DhcpDiscover) -> Message:
        self._ex = self._exchange()
        return discover_message(self.variant, self._ex, body)

    def accept_offer(self, frame: Frame, msg: Message) -> bool:
        body = msg.body
        if body is None or body.server_id != self.server_id or self._ex is None:
            return False
        if abs(self.sim.now - body.timestamp) > self.sim.timers.delta_t:
            self.rejected += 1
            return False
        ok = verify_offer(self.variant, self._ex, msg)
        if not ok:
            self.rejected += 1
            if not self.verify_offers:
                # press on with a guessed MIC1 instead of the one we could not decrypt
                self._ex.offer = body
                self._ex.mic1 = self.sim.rng.randbytes(8)
                return True
        return ok

    def build_request(self, offer: Optional[Message], body: DhcpRequest) -> Message:
        if offer is None:
            # keyed renewals repeat the full exchange; see renew()
            return Message.of(body)
        return request_message(self.variant, self._ex, body)

    def renew(self):
        return self.acquire()

    def open_ack(self, frame: Frame, msg: Message) -> Optional[DhcpAck]:
        if self._ex is None:
            return None
        ack = open_ack(self.variant, self._ex, msg)
        if ack is None or ack.client_mac != self.client_mac or ack.xid != self._xid:
            self.rejected += 1
            return None
        if abs(self.sim.now - ack.timestamp) > self.sim.timers.delta_t:
            self.rejected += 1
            return None
        if self.variant == SdhcpVariant.ALT_V1:
            self.store.commit_rn(self.association, ack.nrn)
        elif self.variant == SdhcpVariant.ALT_V2:
            self.store.commit_rn(self.association, self._ex.nrn)
            self.store.entry(self.association).current_session_key = self._ex.session_key
        self._ex = None
        return ack

    def aborted(self) -> None:
        self._ex = None


def sdhcp_acquire(client: SdhcpClient):
    return client.acquire()


def coexistence_arbitrate(servers: Iterable[DhcpServer]) -> list[DhcpServer]:
    """Who may answer a DISCOVER: active DHCP+ servers if any, else the legacy ones.

    Legacy servers are set Passive when an active DHCP+ is present; they are
    never re-activated here.
    """
    servers = list(servers)
    plus = [s for s in servers if s.is_plus and s.mode == ServerMode.ACTIVE and s.host.iface.up]
    if plus:
        for s in servers:
            if not s.is_plus:
                s.mode = ServerMode.PASSIVE
        return plus
    return [s for s in servers if s.mode == ServerMode.ACTIVE and s.host.iface.up]
