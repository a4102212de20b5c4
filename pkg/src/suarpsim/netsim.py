"""Deterministic discrete-event LAN engine.

Segments are broadcast domains.  Nodes own one :class:`Interface` per
attached segment.  Every emitted frame ends up in exactly one ledger
bucket: delivered, dropped by the loss model, or dropped at the segment
boundary (no attached interface matched the destination MAC).

Events fire in ``(fire_at, seq)`` order, with ``seq`` assigned when the
event is queued, so a run is a pure function of its inputs and seed.
"""

from __future__ import annotations

import heapq
import json
import logging
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from ipaddress import IPv4Address, IPv4Network
from typing import Any, Callable, Iterable, Iterator, Optional

from .errors import ConfigError, MalformedTrace, NoServerConfigured, NotAttached
from .model import (
    BROADCAST_MAC, Data, Frame, MacAddress, Message, MessageKind, TimerConfig, ip, mac,
)

log = logging.getLogger(__name__)

TRACE_SCHEMA_VERSION = 1

RELAYED_KINDS = frozenset({
    MessageKind.DHCP_DISCOVER, MessageKind.DHCP_REQUEST, MessageKind.DHCP_DECLINE,
})
RELAY_REPLY_KINDS = frozenset({MessageKind.DHCP_OFFER, MessageKind.DHCP_ACK, MessageKind.DHCP_NAK})


# -- trace -------------------------------------------------------------------


class TraceLog:
    """Append-only event log, rendered as JSON lines.

    Every record has the keys t, kind, seg, src, dst, msg_kind, size, outcome;
    ``emit`` records may add ``piggyback``.
    """

    def __init__(self):
        self.events: list[dict] = []
        self.ledger: Counter = Counter()

    def record(self, t: int, kind: str, src: str = "", dst: str = "", msg_kind: Optional[str] = None,
               size: int = 0, outcome: str = "", seg: str = "", **extra) -> dict:
        event = {"t": t, "kind": kind, "seg": seg, "src": src, "dst": dst,
                 "msg_kind": msg_kind, "size": size, "outcome": outcome}
        event.update(extra)
        self.events.append(event)
        return event

    def __iter__(self) -> Iterator[dict]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def of_kind(self, kind: str) -> list[dict]:
        return [e for e in self.events if e["kind"] == kind]

    def emissions(self, msg_kinds: Optional[Iterable[str]] = None) -> list[dict]:
        wanted = None if msg_kinds is None else set(msg_kinds)
        return [e for e in self.events if e["kind"] == "emit" and (wanted is None or e["msg_kind"] in wanted)]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in self.events)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "TraceLog":
        trace = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedTrace(f"line {lineno}: {exc}") from None
            if not isinstance(event, dict) or not {"t", "kind"} <= event.keys():
                raise MalformedTrace(f"line {lineno}: missing t/kind")
            trace.events.append(event)
        return trace


# -- loss model --------------------------------------------------------------


@dataclass
class LossModel:
    """Per-segment drop probability plus an optional scripted drop rule.

    ``rule(frame, segment_name)`` returning True drops that frame outright.
    """

    default_drop: float = 0.0
    per_segment: dict[str, float] = field(default_factory=dict)
    rng_seed: int = 0
    rule: Optional[Callable[[Frame, str], bool]] = None

    def __post_init__(self):
        for p in [self.default_drop, *self.per_segment.values()]:
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"drop probability {p} outside [0, 1]")
        self._rng = random.Random(self.rng_seed)

    def drops(self, frame: Frame, segment: str) -> bool:
        if self.rule is not None and self.rule(frame, segment):
            return True
        p = self.per_segment.get(segment, self.default_drop)
        return p > 0.0 and self._rng.random() < p


# -- topology objects --------------------------------------------------------


@dataclass(eq=False)
class Interface:
    node: "Node"
    segment: "Segment"
    mac: MacAddress
    ip: Optional[IPv4Address] = None
    network: Optional[IPv4Network] = None
    up: bool = True
    relay_server: Optional[IPv4Address] = None

    def __repr__(self) -> str:
        return f"<Interface {self.node.name}@{self.segment.name} {self.mac}>"


class Segment:
    def __init__(self, name: str):
        self.name = name
        self.interfaces: list[Interface] = []

    def __repr__(self) -> str:
        return f"<Segment {self.name}>"


class Timer:
    __slots__ = ("fire_at", "cancelled")

    def __init__(self, fire_at: int):
        self.fire_at = fire_at
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class Node:
    """Anything attached to a segment.  Subclasses override :meth:`receive`."""

    def __init__(self, name: str):
        self.name = name
        self.interfaces: list[Interface] = []
        self.sim: Optional[Simulator] = None
        self.taps: list[TapHandle] = []

    @property
    def iface(self) -> Interface:
        if not self.interfaces:
            raise NotAttached(f"{self.name} has no interface")
        return self.interfaces[0]

    @property
    def mac(self) -> MacAddress:
        return self.iface.mac

    @property
    def ip(self) -> Optional[IPv4Address]:
        return self.iface.ip

    def start(self) -> None:
        """Called once when the simulation begins (power-up)."""

    def receive(self, frame: Frame, iface: Interface) -> None:
        pass

    def transmit(self, frame: Frame, iface: Optional[Interface] = None) -> None:
        self.sim.transmit(iface or self.iface, frame)


# -- tap ---------------------------------------------------------------------

TAP_MODES = ("observe", "inject", "mitm")


class TapHandle:
    """Adversary access to a segment.

    observe: copies of what the node's NIC receives (broadcasts plus frames
    addressed to it); with ``promiscuous`` every frame on the segment.
    inject: may emit frames with any source MAC.
    mitm: frames addressed to the node but destined for another IP are
    re-forwarded to the real owner after a copy is kept.
    """

    def __init__(self, node: Node, iface: Interface, mode: str, promiscuous: bool = False):
        self.node = node
        self.iface = iface
        self.mode = mode
        self.promiscuous = promiscuous
        self.observed: list[Frame] = []
        self.forwarded: list[Frame] = []
        self.on_frame: Optional[Callable[[Frame], None]] = None

    def feed(self, frame: Frame) -> None:
        self.observed.append(frame)
        if self.on_frame is not None:
            self.on_frame(frame)

    def inject(self, frame: Frame) -> None:
        if self.mode not in ("inject", "mitm"):
            raise PermissionError("tap is observe-only")
        self.node.sim.transmit(self.iface, frame, spoofed=True)


def tap_install(sim: "Simulator", adversary_node: Node, mode: str, segment: Optional[str] = None,
                promiscuous: bool = False) -> TapHandle:
    if mode not in TAP_MODES:
        raise ConfigError(f"unknown tap mode {mode!r}")
    candidates = [i for i in adversary_node.interfaces if segment is None or i.segment.name == segment]
    if not candidates or adversary_node.sim is not sim:
        raise NotAttached(f"{adversary_node.name} is not attached to {segment or 'any segment'}")
    tap = TapHandle(adversary_node, candidates[0], mode, promiscuous)
    adversary_node.taps.append(tap)
    if promiscuous:
        sim.sniffers.append(tap)
    return tap


# -- simulator ---------------------------------------------------------------


class Simulator:
    def __init__(self, seed: int = 0, timers: Optional[TimerConfig] = None,
                 loss: Optional[LossModel] = None, hop_delay: int = 1):
        if hop_delay < 0:
            raise ConfigError("hop delay must be non-negative")
        self.seed = seed
        self.rng = random.Random(seed)
        self.timers = timers or TimerConfig()
        self.loss = loss or LossModel(rng_seed=seed)
        self.hop_delay = hop_delay
        self.now = 0
        self.trace = TraceLog()
        self.segments: dict[str, Segment] = {}
        self.nodes: dict[str, Node] = {}
        self.invariants: list[Callable[["Simulator"], None]] = []
        self.sniffers: list[TapHandle] = []
        self._queue: list = []
        self._seq = 0
        self._started = False
        self._routes: dict = {}

    # topology

    def add_segment(self, name: str) -> Segment:
        if name in self.segments:
            raise ConfigError(f"duplicate segment {name!r}")
        seg = self.segments[name] = Segment(name)
        return seg

    def add_node(self, node: Node) -> Node:
        if node.name in self.nodes:
            raise ConfigError(f"duplicate node name {node.name!r}")
        self.nodes[node.name] = node
        node.sim = self
        return node

    def attach(self, node: Node, segment: str, mac_addr, ip_addr=None, network=None) -> Interface:
        if segment not in self.segments:
            raise ConfigError(f"unknown segment {segment!r}")
        if node.name not in self.nodes:
            self.add_node(node)
        addr = mac(mac_addr)
        if addr.is_broadcast:
            raise ConfigError("the broadcast address cannot be assigned to an interface")
        seg = self.segments[segment]
        iface = Interface(node, seg, addr, ip(ip_addr) if ip_addr is not None else None,
                          IPv4Network(network) if network is not None else None)
        seg.interfaces.append(iface)
        node.interfaces.append(iface)
        self._routes.clear()
        return iface

    def validate(self) -> None:
        seen: dict[MacAddress, str] = {}
        for node in self.nodes.values():
            for iface in node.interfaces:
                if iface.mac in seen:
                    raise ConfigError(f"MAC {iface.mac} used by both {seen[iface.mac]} and {node.name}")
                seen[iface.mac] = node.name

    def node_by_ip(self, addr) -> Optional[Interface]:
        addr = ip(addr)
        for node in self.nodes.values():
            for iface in node.interfaces:
                if iface.ip == addr:
                    return iface
        return None

    # routing across segments (static, derived from topology)

    def route(self, from_iface: Interface, dst_ip: IPv4Address) -> Optional[tuple[Interface, MacAddress]]:
        """Next hop for a router/host leaving ``from_iface.node`` toward ``dst_ip``."""
        key = (from_iface.node.name, dst_ip)
        if key in self._routes:
            return self._routes[key]
        target = self.node_by_ip(dst_ip)
        result = None
        if target is not None:
            start = from_iface.node
            # BFS over (node) through shared segments; hops are router interfaces.
            prev: dict[int, tuple] = {id(start): None}
            queue = deque([start])
            found = None
            while queue:
                n = queue.popleft()
                for out in n.interfaces:
                    if target.segment is out.segment:
                        found = (n, out)
                        break
                    for peer in out.segment.interfaces:
                        pn = peer.node
                        if isinstance(pn, Router) and id(pn) not in prev:
                            prev[id(pn)] = (n, out, peer)
                            queue.append(pn)
                if found:
                    break
            if found:
                n, out = found
                next_mac = target.mac
                while prev[id(n)] is not None:
                    pn, pout, peer = prev[id(n)]
                    out, next_mac, n = pout, peer.mac, pn
                result = (out, next_mac)
        self._routes[key] = result
        return result

    # scheduling

    def schedule(self, delay: int, fn: Callable, *args) -> Timer:
        if delay < 0:
            raise ValueError("cannot schedule into the past")
        return self.at(self.now + delay, fn, *args)

    def at(self, when: int, fn: Callable, *args) -> Timer:
        if when < self.now:
            raise ValueError("cannot schedule into the past")
        timer = Timer(when)
        heapq.heappush(self._queue, (when, self._seq, timer, fn, args))
        self._seq += 1
        return timer

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        for node in list(self.nodes.values()):
            node.start()

    def run(self, until: Optional[int] = None, max_events: Optional[int] = None) -> TraceLog:
        """Drain events up to and including ``until`` (or until the queue is empty)."""
        self.start()
        processed = 0
        while self._queue:
            when, _, timer, fn, args = self._queue[0]
            if until is not None and when > until:
                break
            heapq.heappop(self._queue)
            if timer.cancelled:
                continue
            self.now = when
            fn(*args)
            processed += 1
            for check in self.invariants:
                check(self)
            if max_events is not None and processed >= max_events:
                break
        if until is not None and self.now < until:
            self.now = until
        return self.trace

    @property
    def pending_events(self) -> int:
        return sum(1 for e in self._queue if not e[2].cancelled)

    # transmission

    def transmit(self, iface: Interface, frame: Frame, spoofed: bool = False) -> None:
        """Put ``frame`` on ``iface``'s segment and schedule its deliveries."""
        seg = iface.segment
        if frame.sent_at != self.now:
            frame = frame.readdress(frame.src_mac, frame.dst_mac, self.now)
        msg = frame.payload
        extra = {}
        if msg.piggyback is not None:
            extra["piggyback"] = msg.piggyback.kind.label
        self.ledger["emitted"] += 1
        if not iface.up:
            outcome = "dropped_boundary"
            receivers = []
        elif self.loss.drops(frame, seg.name):
            outcome = "dropped_loss"
            receivers = []
        else:
            if frame.is_broadcast:
                receivers = [i for i in seg.interfaces if i is not iface]
            else:
                receivers = [i for i in seg.interfaces if i.mac == frame.dst_mac and i is not iface]
            outcome = "delivered" if receivers else "dropped_boundary"
        self.ledger[outcome] += 1
        self.trace.record(self.now, "emit", str(frame.src_mac), str(frame.dst_mac), msg.kind.label,
                          frame.wire_size, outcome, seg.name, **extra)
        if outcome == "delivered" and frame.is_broadcast:
            # A bus medium echoes a broadcast back to its sender's NIC.
            self.ledger["receptions"] += 1
        for tap in self.sniffers:
            if tap.iface.segment is seg and tap.iface is not iface and outcome == "delivered" \
                    and tap.iface not in receivers:
                tap.feed(frame)
        for r in receivers:
            self.schedule(self.hop_delay, self._deliver, r, frame)

    @property
    def ledger(self) -> Counter:
        return self.trace.ledger

    def _deliver(self, iface: Interface, frame: Frame) -> None:
        if not iface.up:
            self.trace.record(self.now, "rx", str(frame.src_mac), iface.node.name, frame.payload.kind.label,
                              frame.wire_size, "interface_down", iface.segment.name)
            return
        self.ledger["receptions"] += 1
        self.trace.record(self.now, "rx", str(frame.src_mac), iface.node.name, frame.payload.kind.label,
                          frame.wire_size, "ok", iface.segment.name)
        for tap in iface.node.taps:
            if tap.iface is iface:
                tap.feed(frame)
        iface.node.receive(frame, iface)

    def note(self, kind: str, node: str, outcome: str, dst: str = "", msg_kind: Optional[str] = None) -> None:
        """Record a non-frame event (cache mutation, state transition, lease change)."""
        self.trace.record(self.now, kind, node, dst, msg_kind, 0, outcome)


# -- routers and relay agents -------------------------------------------------


class Router(Node):
    """Forwards routed unicast frames; relay-flagged interfaces also relay DHCP.

    Broadcasts are never forwarded.  A relay-flagged interface re-emits
    DHCP broadcasts as unicast toward its configured server and converts
    the server's replies back onto the client segment.
    """

    def __init__(self, name: str):
        super().__init__(name)
        self.relayed: list[Frame] = []

    def enable_relay(self, segment: str, server_ip) -> Interface:
        for iface in self.interfaces:
            if iface.segment.name == segment:
                iface.relay_server = ip(server_ip)
                return iface
        raise NotAttached(f"{self.name} has no interface on {segment}")

    def owns_ip(self, addr) -> Optional[Interface]:
        for iface in self.interfaces:
            if iface.ip == addr:
                return iface
        return None

    def receive(self, frame: Frame, iface: Interface) -> None:
        kind = frame.payload.kind
        if frame.is_broadcast:
            if kind in RELAYED_KINDS and frame.relay_ip is None:
                if iface.relay_server is None:
                    return
                self.relay_forward(frame, iface)
            return
        if frame.ip_dst is None:
            return
        own = self.owns_ip(frame.ip_dst)
        if own is not None:
            if kind in RELAY_REPLY_KINDS:
                self._relay_back(frame, own)
            return
        hop = self.sim.route(iface, frame.ip_dst)
        if hop is None:
            self.sim.note("drop", self.name, f"no route to {frame.ip_dst}")
            return
        out, next_mac = hop
        self.sim.transmit(out, frame.readdress(out.mac, next_mac, self.sim.now))

    def relay_forward(self, frame: Frame, iface: Interface) -> Frame:
        if iface.relay_server is None:
            raise NoServerConfigured(f"{self.name} has no DHCP server configured on {iface.segment.name}")
        hop = self.sim.route(iface, iface.relay_server)
        if hop is None:
            raise NoServerConfigured(f"server {iface.relay_server} unreachable from {self.name}")
        out, next_mac = hop
        fwd = frame.readdress(out.mac, next_mac, self.sim.now, ip_dst=iface.relay_server, relay_ip=iface.ip)
        self.relayed.append(fwd)
        self.sim.note("relay", self.name, f"to {iface.relay_server}", msg_kind=frame.payload.kind.label)
        self.sim.transmit(out, fwd)
        return fwd

    def _relay_back(self, frame: Frame, own: Interface) -> None:
        body = frame.payload.body
        if frame.payload.kind == MessageKind.DHCP_NAK or body is None:
            dst = BROADCAST_MAC
        else:
            dst = body.client_mac
        self.sim.transmit(own, Frame(own.mac, dst, frame.payload, self.sim.now, relay_ip=own.ip))


def relay_forward(agent: Router, frame: Frame) -> Frame:
    """Forward a client broadcast received on the agent's relay interface."""
    for iface in agent.interfaces:
        if iface.relay_server is not None:
            return agent.relay_forward(frame, iface)
    raise NoServerConfigured(f"{agent.name} has no relay interface")


# -- hosts -------------------------------------------------------------------


class Service:
    """A protocol component running inside a :class:`Host`."""

    host: "Host"

    def bind(self, host: "Host") -> None:
        self.host = host

    @property
    def sim(self) -> Simulator:
        return self.host.sim

    def start(self) -> None:
        pass

    def handle(self, frame: Frame, msg: Message) -> bool:
        """Process an inbound message; return True when consumed."""
        return False

    def outbound(self, frame: Frame) -> Frame:
        return frame


class Host(Node):
    """Single-homed end station with pluggable protocol services.

    ``resolver`` is whichever service answers IP->MAC queries (legacy ARP,
    S-UARP client); the host uses it for :meth:`send_data`.
    """

    def __init__(self, name: str):
        super().__init__(name)
        self.services: list[Service] = []
        self.resolver = None
        self.gateway: Optional[MacAddress] = None
        self.received: list[Frame] = []
        self.data_seq = 0
        self.on_data: Optional[Callable[[Frame], None]] = None

    def add_service(self, svc: Service) -> Service:
        svc.bind(self)
        self.services.append(svc)
        return svc

    def start(self) -> None:
        for svc in self.services:
            svc.start()

    def accepts(self, frame: Frame, iface: Interface) -> bool:
        return frame.is_broadcast or frame.dst_mac == iface.mac

    def receive(self, frame: Frame, iface: Interface) -> None:
        if not self.accepts(frame, iface):
            return
        msg = frame.payload
        if msg.piggyback is not None:
            self._dispatch(frame, msg.piggyback)
        self._dispatch(frame, msg)

    def _dispatch(self, frame: Frame, msg: Message) -> None:
        for svc in self.services:
            if svc.handle(frame, msg):
                return
        if msg.kind == MessageKind.DATA:
            self._handle_data(frame, msg)

    def send(self, dst_mac: MacAddress, msg: Message, ip_dst: Optional[IPv4Address] = None,
             relay_ip: Optional[IPv4Address] = None) -> Frame:
        frame = Frame(self.mac, dst_mac, msg, self.sim.now, ip_dst, relay_ip)
        for svc in self.services:
            frame = svc.outbound(frame)
        self.transmit(frame)
        return frame

    def is_local(self, addr: IPv4Address) -> bool:
        net = self.iface.network
        return net is None or addr in net

    # application traffic

    def send_data(self, dst_ip, payload: bytes = b"", echo: int = 0, seq: Optional[int] = None,
                  on_done: Optional[Callable] = None):
        """Resolve ``dst_ip`` (or use the gateway) and send a Data frame to it."""
        dst_ip = ip(dst_ip)
        if seq is None:
            self.data_seq += 1
            seq = self.data_seq
        body = Data(self.ip or ip("0.0.0.0"), dst_ip, seq, echo, payload)

        def go(dst_mac, ip_dst=None):
            frame = self.send(dst_mac, Message.of(body), ip_dst=ip_dst)
            if on_done:
                on_done(frame)

        if not self.is_local(dst_ip):
            if self.gateway is None:
                raise ConfigError(f"{self.name} has no gateway for {dst_ip}")
            go(self.gateway, dst_ip)
            return None
        known = self.static_mac(dst_ip)
        if known is not None:
            go(known)
            return None
        if self.resolver is None:
            raise ConfigError(f"{self.name} has no resolver")
        pending = self.resolver.resolve(dst_ip)

        def resolved(p):
            if p.error is None and p.result is not None:
                go(p.result.mac)
            elif on_done:
                on_done(None)

        pending.add_done_callback(resolved)
        return pending

    def static_mac(self, addr: IPv4Address) -> Optional[MacAddress]:
        """MACs known by configuration (the resolution server's own address)."""
        for svc in self.services:
            known = getattr(svc, "known_mac", None)
            if known is not None:
                m = known(addr)
                if m is not None:
                    return m
        return None

    def ping(self, dst_ip, seq: Optional[int] = None):
        return self.send_data(dst_ip, b"ping", echo=1, seq=seq)

    def _handle_data(self, frame: Frame, msg: Message) -> None:
        body = msg.body
        if body is None:
            return
        if self.ip is not None and body.dst_ip != self.ip:
            return
        self.received.append(frame)
        if self.on_data:
            self.on_data(frame)
        if body.echo == 1:
            try:
                self.send_data(body.src_ip, body.payload, echo=2, seq=body.seq)
            except ConfigError:
                self.sim.note("drop", self.name, f"cannot answer echo from {body.src_ip}")


# -- futures -----------------------------------------------------------------


class Pending:
    """Completion handle for an asynchronous protocol operation."""

    def __init__(self, label: str = ""):
        self.label = label
        self.done = False
        self.result: Any = None
        self.error: Optional[Exception] = None
        self._callbacks: list[Callable[["Pending"], None]] = []

    def add_done_callback(self, fn: Callable[["Pending"], None]) -> None:
        if self.done:
            fn(self)
        else:
            self._callbacks.append(fn)

    def resolve(self, result: Any) -> None:
        self._finish(result, None)

    def fail(self, error: Exception) -> None:
        self._finish(None, error)

    def _finish(self, result, error) -> None:
        if self.done:
            return
        self.done, self.result, self.error = True, result, error
        callbacks, self._callbacks = self._callbacks, []
        for fn in callbacks:
            fn(self)

    def value(self):
        if not self.done:
            raise RuntimeError(f"{self.label or 'operation'} has not completed")
        if self.error is not None:
            raise self.error
        return self.result

    def __repr__(self) -> str:
        state = "pending" if not self.done else ("error" if self.error else "ok")
        return f"<Pending {self.label} {state}>"


def run_scenario(sim: Simulator, until: Optional[int] = None) -> TraceLog:
    """Validate the topology and drain the event queue up to ``until``."""
    sim.validate()
    return sim.run(until)


def two_lan_ring_topology(sim: Simulator, host_factory: Callable[[str], Host] = Host,
                     hosts_per_lan: int = 2) -> dict[str, Node]:
    """Two edge LANs joined by a ring modeled as a transit segment between two routers."""
    for seg in ("lan1", "ring", "lan3"):
        sim.add_segment(seg)
    nodes: dict[str, Node] = {}
    r1, r2 = Router("R1"), Router("R2")
    sim.attach(r1, "lan1", "02:00:00:00:01:fe", "10.0.1.254", "10.0.1.0/24")
    sim.attach(r1, "ring", "02:00:00:00:02:01", "10.0.2.1", "10.0.2.0/24")
    sim.attach(r2, "ring", "02:00:00:00:02:02", "10.0.2.2", "10.0.2.0/24")
    sim.attach(r2, "lan3", "02:00:00:00:03:fe", "10.0.3.254", "10.0.3.0/24")
    nodes["R1"], nodes["R2"] = r1, r2
    letters = iter("ABCDEFGHIJKLMNOPQRSTUVWXYZ")
    for lan, subnet, gw in (("lan1", 1, r1.interfaces[0]), ("lan3", 3, r2.interfaces[1])):
        for i in range(hosts_per_lan):
            name = next(letters)
            h = host_factory(name)
            sim.attach(h, lan, f"02:00:00:00:{subnet:02x}:{i + 1:02x}", f"10.0.{subnet}.{i + 1}",
                       f"10.0.{subnet}.0/24")
            h.gateway = gw.mac
            nodes[name] = h
    return nodes
