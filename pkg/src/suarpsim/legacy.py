"""Textbook ARP and DHCP agents: the unauthenticated baselines.

The ARP agent updates its cache from any request or reply it sees, which is
exactly the weakness cache poisoning exploits.  The DHCP server and client
expose hook methods (``accept_*``/``build_*``) that the secure variants in
:mod:`suarpsim.sdhcp` override.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from ipaddress import IPv4Address
from typing import Callable, Iterable, Optional

from .errors import LeaseExpired, NakReceived, NoOffer, Timeout
from .model import (
    BROADCAST_MAC, ZERO_IP, ArpReply, ArpRequest, DhcpAck, DhcpDecline, DhcpDiscover, DhcpNak,
    DhcpOffer, DhcpRequest, Frame, MacAddress, Message, MessageKind, ip,
)
from .netsim import Host, Pending, Service, Simulator


# -- resolution cache ----------------------------------------------------------


@dataclass
class CacheEntry:
    mac: MacAddress
    inserted_at: int


class ResolutionCache:
    """IP -> MAC map whose entries are served only while younger than ``ttl``.

    Inserting overwrites unconditionally.  ``history`` keeps every insertion
    as ``(time, ip, mac)`` for attack accounting.
    """

    def __init__(self, ttl: int, on_insert: Optional[Callable[[IPv4Address, MacAddress, int], None]] = None):
        self.ttl = ttl
        self.entries: dict[IPv4Address, CacheEntry] = {}
        self.history: list[tuple[int, IPv4Address, MacAddress]] = []
        self.on_insert = on_insert

    def lookup(self, addr: IPv4Address, now: int) -> Optional[MacAddress]:
        entry = self.entries.get(addr)
        if entry is None or now - entry.inserted_at >= self.ttl:
            return None
        return entry.mac

    def insert(self, addr: IPv4Address, mac: MacAddress, now: int) -> None:
        self.entries[addr] = CacheEntry(mac, now)
        self.history.append((now, addr, mac))
        if self.on_insert:
            self.on_insert(addr, mac, now)

    def __contains__(self, addr) -> bool:
        return addr in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class Resolution:
    ip: IPv4Address
    mac: MacAddress
    from_cache: bool = False
    frames_sent: int = 0
    completed_at: int = 0


class CachingResolver(Service):
    """Shared plumbing: a TTL cache and trace notes for each insertion."""

    def __init__(self, ttl: Optional[int] = None):
        self._ttl = ttl
        self._cache: Optional[ResolutionCache] = None

    @property
    def cache(self) -> ResolutionCache:
        if self._cache is None:
            ttl = self._ttl if self._ttl is not None else self.sim.timers.t4
            self._cache = ResolutionCache(ttl, self._noted_insert)
        return self._cache

    def _noted_insert(self, addr, mac, now) -> None:
        self.sim.note("cache", self.host.name, f"{addr}={mac}")


# -- ARP -----------------------------------------------------------------------


class LegacyArp(CachingResolver):
    """Broadcast request / unicast reply resolver with an unauthenticated cache."""

    def __init__(self, gratuitous: bool = True, retries: Optional[int] = 3, ttl: Optional[int] = None):
        super().__init__(ttl)
        self.gratuitous = gratuitous
        self.retries = retries
        self._pending: dict[IPv4Address, dict] = {}

    def bind(self, host: Host) -> None:
        super().bind(host)
        host.resolver = self

    def resolve(self, target_ip) -> Pending:
        target_ip = ip(target_ip)
        p = Pending(f"arp {target_ip}")
        now = self.sim.now
        cached = self.cache.lookup(target_ip, now)
        if cached is not None:
            p.resolve(Resolution(target_ip, cached, from_cache=True, completed_at=now))
            return p
        state = self._pending.get(target_ip)
        if state is not None:
            state["waiters"].append(p)
            return p
        state = self._pending[target_ip] = {"waiters": [p], "tries": 0, "timer": None, "frames": 0}
        self._broadcast(target_ip, state)
        return p

    def _broadcast(self, target_ip, state) -> None:
        req = ArpRequest(self.host.ip, self.host.mac, target_ip)
        self.host.send(BROADCAST_MAC, Message.of(req))
        state["frames"] += 1
        state["timer"] = self.sim.schedule(self.sim.timers.t1, self._timeout, target_ip)

    def _timeout(self, target_ip) -> None:
        state = self._pending.get(target_ip)
        if state is None:
            return
        if self.retries is None or state["tries"] < self.retries:
            state["tries"] += 1
            self._broadcast(target_ip, state)
            return
        del self._pending[target_ip]
        for p in state["waiters"]:
            p.fail(Timeout(f"no ARP reply for {target_ip}"))

    def handle(self, frame: Frame, msg: Message) -> bool:
        body = msg.body
        now = self.sim.now
        if msg.kind == MessageKind.ARP_REQUEST:
            if body.target_ip == self.host.ip:
                self.cache.insert(body.sender_ip, body.sender_mac, now)
                reply = ArpReply(self.host.ip, self.host.mac, body.sender_ip, body.sender_mac)
                self.host.send(body.sender_mac, Message.of(reply))
            elif self.gratuitous and body.sender_ip != self.host.ip:
                self.cache.insert(body.sender_ip, body.sender_mac, now)
            return True
        if msg.kind == MessageKind.ARP_REPLY:
            self.cache.insert(body.sender_ip, body.sender_mac, now)
            self._complete(body.sender_ip, body.sender_mac)
            return True
        return False

    def _complete(self, addr, mac) -> None:
        state = self._pending.pop(addr, None)
        if state is None:
            return
        if state["timer"] is not None:
            state["timer"].cancel()
        for p in state["waiters"]:
            p.resolve(Resolution(addr, mac, frames_sent=state["frames"], completed_at=self.sim.now))


def arp_resolve(host: Host, target_ip) -> Pending:
    return host.resolver.resolve(target_ip)


# -- DHCP ----------------------------------------------------------------------


class LeaseState(enum.Enum):
    OFFERED = "offered"
    BOUND = "bound"
    EXPIRED = "expired"


@dataclass
class Lease:
    ip: IPv4Address
    client_mac: MacAddress
    granted_at: int
    duration: int
    state: LeaseState
    server_id: IPv4Address = ZERO_IP
    xid: int = 0
    hold_until: int = 0

    @property
    def expires_at(self) -> int:
        return self.granted_at + self.duration

    def state_at(self, now: int) -> LeaseState:
        if self.state == LeaseState.BOUND and now >= self.expires_at:
            return LeaseState.EXPIRED
        if self.state == LeaseState.OFFERED and now >= self.hold_until:
            return LeaseState.EXPIRED
        return self.state


@dataclass
class DhcpConfig:
    lease_duration: int = 10 * 60 * 1000
    offer_hold: int = 2000
    response_timeout: int = 1000
    retries: Optional[int] = 3
    auto_renew: bool = False
    renew_fraction: float = 0.9


class ServerMode(enum.Enum):
    ACTIVE = "active"
    PASSIVE = "passive"


class DhcpServer(Service):
    """Pool-based DHCP server.

    Offers reserve an address for ``offer_hold``; a REQUEST naming another
    server releases the reservation; Bound leases expire after their
    duration and the address returns to the pool.
    """

    is_plus = False

    def __init__(self, pool: Iterable, config: Optional[DhcpConfig] = None,
                 static_leases: Optional[dict] = None, patched: bool = True):
        self.pool = [ip(a) for a in pool]
        self.config = config or DhcpConfig()
        self.leases: dict[IPv4Address, Lease] = {}
        self.quarantined: set[IPv4Address] = set()
        self.mode = ServerMode.ACTIVE
        # a patched server resigns to Passive when it hears a secure server announce itself
        self.patched = patched
        self.rejects: list[tuple[int, str, str]] = []
        self.acks_sent = 0
        self._static = {ip(k): MacAddress.parse(v) for k, v in (static_leases or {}).items()}

    @property
    def server_id(self) -> IPv4Address:
        return self.host.ip

    def start(self) -> None:
        for addr, mac in self._static.items():
            self.leases[addr] = Lease(addr, mac, 0, 1 << 62, LeaseState.BOUND, self.server_id)

    # bookkeeping

    def sweep(self, now: int) -> None:
        for addr, lease in list(self.leases.items()):
            if lease.state != LeaseState.EXPIRED and lease.state_at(now) == LeaseState.EXPIRED:
                previous = lease.state
                lease.state = LeaseState.EXPIRED
                self.sim.note("lease", self.host.name, f"{previous.value}->expired {addr}")

    def bound_leases(self, now: Optional[int] = None) -> list[Lease]:
        now = self.sim.now if now is None else now
        return [l for l in self.leases.values() if l.state_at(now) == LeaseState.BOUND]

    def mapping_table(self, now: Optional[int] = None) -> dict[IPv4Address, MacAddress]:
        """Projection of the Bound leases: IP -> client MAC."""
        return {l.ip: l.client_mac for l in self.bound_leases(now)}

    def _is_free(self, addr, now) -> bool:
        lease = self.leases.get(addr)
        return addr not in self.quarantined and (lease is None or lease.state_at(now) == LeaseState.EXPIRED)

    def _reserve(self, client_mac: MacAddress, xid: int, now: int) -> Optional[Lease]:
        for lease in self.leases.values():
            if lease.client_mac == client_mac and lease.state_at(now) in (LeaseState.BOUND, LeaseState.OFFERED):
                if lease.state_at(now) == LeaseState.OFFERED:
                    lease.hold_until = now + self.config.offer_hold
                    lease.xid = xid
                return lease
        previous = [l for l in self.leases.values() if l.client_mac == client_mac and self._is_free(l.ip, now)]
        candidates = [l.ip for l in previous] + [a for a in self.pool if self._is_free(a, now)]
        if not candidates:
            return None
        addr = candidates[0]
        lease = Lease(addr, client_mac, now, self.config.lease_duration, LeaseState.OFFERED,
                      self.server_id, xid, now + self.config.offer_hold)
        self.leases[addr] = lease
        self.sim.schedule(self.config.offer_hold, self.sweep_now)
        return lease

    def sweep_now(self) -> None:
        self.sweep(self.sim.now)

    def reject(self, reason: str, msg_kind: MessageKind) -> None:
        self.rejects.append((self.sim.now, msg_kind.label, reason))
        self.sim.note("reject", self.host.name, reason, msg_kind=msg_kind.label)

    # transmission helpers

    def reply(self, frame: Frame, msg: Message, broadcast: bool = False) -> None:
        if frame.relay_ip is not None:
            self.host.send(frame.src_mac, msg, ip_dst=frame.relay_ip, relay_ip=frame.relay_ip)
        elif broadcast:
            self.host.send(BROADCAST_MAC, msg)
        else:
            self.host.send(msg.body.client_mac if msg.body is not None else frame.src_mac, msg)

    # hooks

    def accept_discover(self, frame: Frame, msg: Message) -> bool:
        return True

    def build_offer(self, frame: Frame, discover: Message, offer: DhcpOffer) -> Message:
        return Message.of(offer)

    def accept_request(self, frame: Frame, msg: Message, lease: Lease) -> bool:
        return True

    def build_ack(self, frame: Frame, request: Message, ack: DhcpAck) -> Message:
        return Message.of(ack)

    def committed(self, lease: Lease) -> None:
        pass

    # protocol

    def reactivate(self) -> None:
        self.mode = ServerMode.ACTIVE

    def handle(self, frame: Frame, msg: Message) -> bool:
        if msg.kind == MessageKind.REGISTRATION_ADVERT:
            body = msg.body
            if body is not None and body.from_server and self.patched and not self.is_plus \
                    and self.mode == ServerMode.ACTIVE:
                self.mode = ServerMode.PASSIVE
                self.sim.note("mode", self.host.name, f"passive (secure server {body.ip} present)")
            return False
        if msg.kind not in (MessageKind.DHCP_DISCOVER, MessageKind.DHCP_REQUEST, MessageKind.DHCP_DECLINE):
            return False
        if self.mode != ServerMode.ACTIVE:
            return True
        self.sweep(self.sim.now)
        if msg.kind == MessageKind.DHCP_DISCOVER:
            self.on_discover(frame, msg)
        elif msg.kind == MessageKind.DHCP_REQUEST:
            self.on_request(frame, msg)
        else:
            self.on_decline(frame, msg)
        return True

    def on_discover(self, frame: Frame, msg: Message) -> Optional[Message]:
        now = self.sim.now
        if msg.body is None or not self.accept_discover(frame, msg):
            self.reject("discover failed verification", msg.kind)
            return None
        body: DhcpDiscover = msg.body
        lease = self._reserve(body.client_mac, body.xid, now)
        if lease is None:
            nak = Message.of(DhcpNak(body.xid, body.client_mac, self.server_id, now))
            self.sim.note("lease", self.host.name, "pool exhausted")
            self.reply(frame, nak, broadcast=True)
            return nak
        offer_body = DhcpOffer(body.xid, body.client_mac, lease.ip, lease.duration, self.server_id, now)
        offer = self.build_offer(frame, msg, offer_body)
        self.reply(frame, offer)
        return offer

    def on_request(self, frame: Frame, msg: Message) -> Optional[Message]:
        now = self.sim.now
        body: DhcpRequest = msg.body
        if body is None:
            return None
        if body.server_id != self.server_id:
            lease = self.leases.get(body.requested_ip)
            for l in list(self.leases.values()):
                if l.client_mac == body.client_mac and l.state_at(now) == LeaseState.OFFERED:
                    l.state = LeaseState.EXPIRED
                    self.sim.note("lease", self.host.name, f"reclaimed offer {l.ip}")
            return None
        lease = self.leases.get(body.requested_ip)
        valid = lease is not None and lease.client_mac == body.client_mac
        if valid and body.renewing:
            valid = lease.state_at(now) == LeaseState.BOUND
        elif valid:
            valid = lease.state_at(now) in (LeaseState.OFFERED, LeaseState.BOUND)
        if not valid:
            nak = Message.of(DhcpNak(body.xid, body.client_mac, self.server_id, now))
            self.reply(frame, nak, broadcast=True)
            return nak
        if not self.accept_request(frame, msg, lease):
            self.reject("request failed verification", msg.kind)
            return None
        lease.state = LeaseState.BOUND
        lease.granted_at = now
        lease.duration = self.config.lease_duration
        lease.xid = body.xid
        ack_body = DhcpAck(body.xid, body.client_mac, lease.ip, lease.duration, self.server_id, now)
        ack = self.build_ack(frame, msg, ack_body)
        self.committed(lease)
        self.acks_sent += 1
        self.sim.note("lease", self.host.name, f"bound {lease.ip}={lease.client_mac}")
        self.sim.schedule(lease.duration, self.sweep_now)
        self.reply(frame, ack)
        return ack

    def on_decline(self, frame: Frame, msg: Message) -> None:
        body: DhcpDecline = msg.body
        if body is None or body.server_id != self.server_id:
            return
        lease = self.leases.get(body.declined_ip)
        if lease is not None and lease.client_mac == body.client_mac:
            del self.leases[body.declined_ip]
            self.quarantined.add(body.declined_ip)
            self.sim.note("lease", self.host.name, f"declined {body.declined_ip}")


class DhcpClient(Service):
    """DISCOVER -> first OFFER -> REQUEST -> ACK, with bounded retries."""

    def __init__(self, config: Optional[DhcpConfig] = None, reject_ips: Iterable = ()):
        self.config = config or DhcpConfig()
        self.reject_ips = {ip(a) for a in reject_ips}
        self.lease: Optional[Lease] = None
        self.server_mac: Optional[MacAddress] = None
        self.via_relay = False
        self.state = "init"
        self.messages: list[tuple[int, str]] = []
        self._xid = 0
        self._pending: Optional[Pending] = None
        self._timer = None
        self._tries = 0
        self._offer: Optional[Message] = None
        self._renew_timer = None

    @property
    def client_mac(self) -> MacAddress:
        return self.host.mac

    # hooks

    def build_discover(self, body: DhcpDiscover) -> Message:
        return Message.of(body)

    def accept_offer(self, frame: Frame, msg: Message) -> bool:
        return msg.body is not None

    def build_request(self, offer: Message, body: DhcpRequest) -> Message:
        return Message.of(body)

    def open_ack(self, frame: Frame, msg: Message) -> Optional[DhcpAck]:
        return msg.body

    def aborted(self) -> None:
        pass

    # operations

    def acquire(self) -> Pending:
        self._pending = Pending("dhcp acquire")
        self._tries = 0
        self._discover()
        return self._pending

    def _discover(self) -> None:
        self._xid = self.sim.rng.getrandbits(32)
        self.state = "selecting"
        self._offer = None
        body = DhcpDiscover(self._xid, self.client_mac, self.sim.now)
        self._send_broadcast(self.build_discover(body))
        self._arm()

    def _send_broadcast(self, msg: Message) -> None:
        self.messages.append((self.sim.now, msg.kind.label))
        self.host.send(BROADCAST_MAC, msg)

    def _arm(self) -> None:
        if self._timer is not None:
            self._timer.cancel()
        self._timer = self.sim.schedule(self.config.response_timeout, self._timeout, self._xid)

    def _timeout(self, xid) -> None:
        if xid != self._xid or self.state in ("bound", "init"):
            return
        renewing = self.state == "renewing"
        self.aborted()
        if self.config.retries is None or self._tries < self.config.retries:
            self._tries += 1
            if renewing:
                self._send_renew()
            else:
                self._discover()
            return
        self.state = "init" if not renewing else "bound"
        self._finish(error=NoOffer("no DHCP server answered"))

    def _finish(self, result=None, error=None) -> None:
        p, self._pending = self._pending, None
        if self._timer is not None:
            self._timer.cancel()
        if p is not None:
            if error is not None:
                p.fail(error)
            else:
                p.resolve(result)

    def handle(self, frame: Frame, msg: Message) -> bool:
        kind = msg.kind
        if kind not in (MessageKind.DHCP_OFFER, MessageKind.DHCP_ACK, MessageKind.DHCP_NAK):
            return False
        body = msg.body
        if body is not None and (body.client_mac != self.client_mac or body.xid != self._xid):
            return True
        if kind == MessageKind.DHCP_OFFER:
            self._on_offer(frame, msg)
        elif kind == MessageKind.DHCP_ACK:
            self._on_ack(frame, msg)
        elif self.state in ("requesting", "renewing", "selecting"):
            self.messages.append((self.sim.now, kind.label))
            self.state = "init"
            self._finish(error=NakReceived(f"server {body.server_id} refused the lease"))
        return True

    def _on_offer(self, frame: Frame, msg: Message) -> None:
        if self.state != "selecting":
            return
        if not self.accept_offer(frame, msg):
            self.sim.note("reject", self.host.name, "offer failed verification", msg_kind=msg.kind.label)
            return
        self.messages.append((self.sim.now, msg.kind.label))
        body: DhcpOffer = msg.body
        self.server_mac = frame.src_mac
        self.via_relay = frame.relay_ip is not None
        if body.offered_ip in self.reject_ips:
            decline = DhcpDecline(body.xid, self.client_mac, body.offered_ip, body.server_id, self.sim.now)
            self._send_broadcast(Message.of(decline))
            self.reject_ips.discard(body.offered_ip)
            self._discover()
            return
        self._offer = msg
        self.state = "requesting"
        req = DhcpRequest(body.xid, self.client_mac, body.offered_ip, body.server_id, self.sim.now)
        self._send_broadcast(self.build_request(msg, req))
        self._arm()

    def _on_ack(self, frame: Frame, msg: Message) -> None:
        if self.state not in ("requesting", "renewing"):
            return
        ack = self.open_ack(frame, msg)
        if ack is None:
            self.sim.note("reject", self.host.name, "ack failed verification", msg_kind=msg.kind.label)
            return
        self.messages.append((self.sim.now, msg.kind.label))
        now = self.sim.now
        self.lease = Lease(ack.assigned_ip, self.client_mac, now, ack.lease_duration, LeaseState.BOUND,
                           ack.server_id, ack.xid)
        self.host.iface.ip = ack.assigned_ip
        self.state = "bound"
        self.sim.note("lease", self.host.name, f"client bound {ack.assigned_ip}")
        if self.config.auto_renew:
            if self._renew_timer is not None:
                self._renew_timer.cancel()
            self._renew_timer = self.sim.schedule(int(ack.lease_duration * self.config.renew_fraction),
                                                  self._auto_renew)
        self._finish(result=self.lease)

    # renewal

    def renew(self) -> Pending:
        now = self.sim.now
        if self.lease is None:
            raise LeaseExpired("no lease to renew")
        if self.lease.state_at(now) != LeaseState.BOUND:
            self.lease.state = LeaseState.EXPIRED
            raise LeaseExpired(f"lease on {self.lease.ip} expired at {self.lease.expires_at}")
        self._pending = Pending("dhcp renew")
        self._tries = 0
        self._send_renew()
        return self._pending

    def _send_renew(self) -> None:
        self._xid = self.sim.rng.getrandbits(32)
        self.state = "renewing"
        lease = self.lease
        req = DhcpRequest(self._xid, self.client_mac, lease.ip, lease.server_id, self.sim.now, renewing=True)
        msg = self.build_request(None, req)
        self.messages.append((self.sim.now, msg.kind.label))
        if self.via_relay and self.host.gateway is not None:
            self.host.send(self.host.gateway, msg, ip_dst=lease.server_id)
        else:
            self.host.send(self.server_mac, msg)
        self._arm()

    def _auto_renew(self) -> None:
        if self.lease is not None and self.lease.state_at(self.sim.now) == LeaseState.BOUND and self._pending is None:
            self.renew()

    def lease_state(self, now: Optional[int] = None) -> Optional[LeaseState]:
        if self.lease is None:
            return None
        return self.lease.state_at(self.sim.now if now is None else now)


def dhcp_acquire(client: DhcpClient) -> Pending:
    return client.acquire()


def lease_renew(client: DhcpClient, lease: Lease, now: Optional[int] = None) -> Pending:
    if client.lease is not lease:
        client.lease = lease
    if now is not None and lease.state_at(now) != LeaseState.BOUND:
        lease.state = LeaseState.EXPIRED
        raise LeaseExpired(f"lease on {lease.ip} expired at {lease.expires_at}")
    return client.renew()


def server_leases(sim: Simulator) -> list[tuple[str, Lease]]:
    out = []
    for node in sim.nodes.values():
        for svc in getattr(node, "services", ()):
            if isinstance(svc, DhcpServer):
                out.extend((node.name, l) for l in svc.leases.values())
    return out


def check_lease_uniqueness(sim: Simulator) -> None:
    """Invariant: no two simultaneously Bound leases share an IP."""
    seen: dict[IPv4Address, str] = {}
    for name, lease in server_leases(sim):
        if lease.state_at(sim.now) != LeaseState.BOUND:
            continue
        if lease.ip in seen:
            raise AssertionError(f"IP {lease.ip} bound twice ({seen[lease.ip]}, {name})")
        seen[lease.ip] = name
