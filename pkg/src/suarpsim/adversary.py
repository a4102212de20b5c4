"""Scripted attackers: cache poisoning with interception, MAC cloning, and a key-holding insider.

An attacker holds no key-store entry for the association it attacks (the
insider holds the shared key only).  Every forged MIC is drawn from the
attacker's own RNG, seeded from the simulator so runs stay reproducible.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from ipaddress import IPv4Address
from typing import Optional

from .crypto import DIGEST_SIZE, NONCE_SIZE, KeyStore, SessionKey, SharedKey, keyed_hash_mic, xor_mask
from .errors import ConfigError, LengthMismatch
from .legacy import DhcpClient, DhcpConfig
from .model import (
    ArpReply, ArpRequest, Frame, MacAddress, Message, MessageKind, Mic, MicScheme, SuarpAck, SuarpReq,
    SuarpRes, ip, mac, serialize_body,
)
from .netsim import Host, Interface, Simulator, TapHandle, tap_install
from .sdhcp import SdhcpClient, SdhcpVariant
from .suarp import MIC_SCHEMA, SuarpClient, SuarpServer, SuarpVariant


@dataclass
class PoisonPlan:
    victim_pairs: list
    cadence: int = 1000
    forged_mac: Optional[MacAddress] = None
    start: int = 0
    rounds: Optional[int] = None
    burst: int = 1
    max_attempts: Optional[int] = None
    forge_requests: bool = True
    mitm: bool = True

    def __post_init__(self):
        self.victim_pairs = [(ip(v), ip(t)) for v, t in self.victim_pairs]
        for v, t in self.victim_pairs:
            if v == t:
                raise ConfigError(f"victim {v} cannot impersonate itself")
        if self.forged_mac is not None:
            self.forged_mac = mac(self.forged_mac)
        if self.cadence <= 0 or self.burst <= 0:
            raise ConfigError("cadence and burst must be positive")


@dataclass
class SpoofPlan:
    cloned_mac: MacAddress
    cloned_ip: Optional[IPv4Address] = None
    dos_first: bool = True
    attempts: int = 1
    start: int = 0
    attempt_timeout: int = 20

    def __post_init__(self):
        self.cloned_mac = mac(self.cloned_mac)
        if self.cloned_ip is not None:
            self.cloned_ip = ip(self.cloned_ip)
        if self.attempts <= 0:
            raise ConfigError("attempts must be positive")


@dataclass
class AttackReport:
    attack: str
    stack: str
    attacker: str
    attempts: int = 0
    successes: int = 0
    pairs: list = field(default_factory=list)
    intercepted: int = 0
    forwarded: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.successes > 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["success"] = self.success
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str) + "\n"


class Attacker(Host):
    """A host that may forge, sniff and relay.  Relayed traffic goes to the true owner."""

    def __init__(self, name: str):
        super().__init__(name)
        self.mitm = False
        self.intercepted: list[Frame] = []
        self.forwarded = 0
        self.rng = random.Random(0)
        self.tap: Optional[TapHandle] = None

    def install(self, sim: Simulator, mode: str = "mitm", promiscuous: bool = False) -> TapHandle:
        self.tap = tap_install(sim, self, mode, promiscuous=promiscuous)
        self.rng = random.Random(sim.rng.getrandbits(64))
        self.mitm = mode == "mitm"
        return self.tap

    def inject(self, frame: Frame) -> None:
        if self.tap is None:
            raise ConfigError(f"{self.name} has no tap installed")
        self.tap.inject(frame)

    def receive(self, frame: Frame, iface: Interface) -> None:
        msg = frame.payload
        body = msg.body
        if (self.mitm and msg.kind == MessageKind.DATA and body is not None and frame.dst_mac == iface.mac
                and body.dst_ip != iface.ip):
            self.intercepted.append(frame)
            owner = self.sim.node_by_ip(body.dst_ip)
            if owner is not None and owner.node is not self:
                self.forwarded += 1
                if self.tap is not None:
                    self.tap.forwarded.append(frame)
                self.sim.transmit(iface, frame.readdress(iface.mac, owner.mac, self.sim.now))
            return
        super().receive(frame, iface)


def _forged_response_message(variant: SuarpVariant, res: SuarpRes, rng: random.Random) -> Message:
    schema = MIC_SCHEMA[variant][MessageKind.SUARP_RES]
    size = 8 if schema.scheme == MicScheme.CBC_RESIDUE else DIGEST_SIZE
    mics = tuple(Mic(rng.randbytes(size), schema.scheme) for _ in range(schema.mics))
    masked = tuple(rng.randbytes(DIGEST_SIZE) for _ in range(schema.masked))
    return Message.of(res, mics=mics, masked=masked)


class PoisoningAgent:
    """Drives a :class:`PoisonPlan` from an attacker node.

    Legacy victims get forged replies (and requests) every ``cadence``.  For
    S-UARP victims the attacker answers each request it sniffs for an
    impersonated IP with ``burst`` forged responses, racing the server; with
    a non-promiscuous tap it injects blindly on the cadence instead.
    """

    def __init__(self, attacker: Attacker, plan: PoisonPlan):
        self.attacker = attacker
        self.plan = plan
        self.attempts = 0
        self.rounds_done = 0
        self.forged_mac = plan.forged_mac or attacker.mac
        self._victims: dict[IPv4Address, Interface] = {}

    @property
    def sim(self) -> Simulator:
        return self.attacker.sim

    def arm(self) -> None:
        for victim_ip, _ in self.plan.victim_pairs:
            iface = self.sim.node_by_ip(victim_ip)
            if iface is None:
                raise ConfigError(f"no victim with IP {victim_ip}")
            self._victims[victim_ip] = iface
        tap = self.attacker.tap
        if tap is not None and tap.promiscuous:
            tap.on_frame = self._sniffed
        if self.plan.victim_pairs:
            self.sim.at(max(self.plan.start, self.sim.now), self._round)

    def _budget_left(self) -> bool:
        return self.plan.max_attempts is None or self.attempts < self.plan.max_attempts

    def _round(self) -> None:
        if self.plan.rounds is not None and self.rounds_done >= self.plan.rounds:
            return
        self.rounds_done += 1
        sniffing = self.attacker.tap is not None and self.attacker.tap.promiscuous
        for victim_ip, impersonated in self.plan.victim_pairs:
            victim = self._victims[victim_ip]
            resolver = victim.node.resolver
            if isinstance(resolver, SuarpClient):
                if not sniffing:
                    self._forge_responses(victim, resolver, impersonated)
            else:
                self._forge_arp(victim, impersonated)
        if self._budget_left():
            self.sim.schedule(self.plan.cadence, self._round)

    def _forge_arp(self, victim: Interface, impersonated: IPv4Address) -> None:
        if not self._budget_left():
            return
        reply = ArpReply(impersonated, self.forged_mac, victim.ip, victim.mac)
        self.attacker.inject(Frame(self.forged_mac, victim.mac, Message.of(reply), self.sim.now))
        self.attempts += 1
        if self.plan.forge_requests and self._budget_left():
            req = ArpRequest(impersonated, self.forged_mac, victim.ip)
            self.attacker.inject(Frame(self.forged_mac, victim.mac, Message.of(req), self.sim.now))
            self.attempts += 1

    def _forge_responses(self, victim: Interface, resolver: SuarpClient, impersonated: IPv4Address) -> None:
        src = resolver.server_mac or self.forged_mac
        for _ in range(self.plan.burst):
            if not self._budget_left():
                return
            res = SuarpRes(victim.ip, victim.mac, impersonated, self.forged_mac, self.sim.now)
            msg = _forged_response_message(resolver.variant, res, self.attacker.rng)
            self.attacker.inject(Frame(src, victim.mac, msg, self.sim.now, ip_dst=victim.ip))
            self.attempts += 1

    def _sniffed(self, frame: Frame) -> None:
        msg = frame.payload
        if msg.kind != MessageKind.SUARP_REQ or msg.body is None:
            return
        req: SuarpReq = msg.body
        for victim_ip, impersonated in self.plan.victim_pairs:
            victim = self._victims[victim_ip]
            if req.ip_a == victim_ip and req.ip_b == impersonated and isinstance(victim.node.resolver, SuarpClient):
                self._forge_responses(victim, victim.node.resolver, impersonated)

    def report(self, stack: str) -> AttackReport:
        rep = AttackReport("poisoning", stack, self.attacker.name, attempts=self.attempts,
                           intercepted=len(self.attacker.intercepted), forwarded=self.attacker.forwarded)
        now = self.sim.now
        for victim_ip, impersonated in self.plan.victim_pairs:
            node = self._victims[victim_ip].node
            cache = node.resolver.cache
            history = sorted((t, m) for t, a, m in cache.history if a == impersonated)
            dwell, first = 0, None
            for i, (t, m) in enumerate(history):
                if m != self.forged_mac:
                    continue
                first = t if first is None else first
                end = history[i + 1][0] if i + 1 < len(history) else now
                dwell += max(0, min(end, t + cache.ttl, now) - t)
            poisoned = first is not None
            rep.successes += poisoned
            rep.pairs.append({"victim": str(victim_ip), "impersonated": str(impersonated),
                              "poisoned": poisoned, "first_poisoned_at": first, "dwell_ms": dwell})
        return rep


def run_poisoning(attacker: Attacker, plan: PoisonPlan, stack: str, until: int) -> AttackReport:
    """Arm the plan on an already-built simulation, run it to ``until`` and report."""
    agent = PoisoningAgent(attacker, plan)
    sim = attacker.sim
    sim.start()
    agent.arm()
    sim.run(until)
    return agent.report(stack)


class SpoofingAgent:
    """Takes over a victim's MAC (optionally after knocking it offline) and asks for a lease."""

    def __init__(self, attacker: Attacker, plan: SpoofPlan, victim: Host, stack: str,
                 server_id=None, variant=None):
        self.attacker = attacker
        self.plan = plan
        self.victim = victim
        self.stack = stack
        self.server_id = ip(server_id) if server_id is not None else None
        self.variant = SdhcpVariant.parse(variant) if variant is not None else None
        self.attempts = 0
        self.client_successes = 0
        self.leases: list[str] = []
        self.client: Optional[DhcpClient] = None
        self._victim_tap: Optional[TapHandle] = None
        self._started_at = 0

    @property
    def sim(self) -> Simulator:
        return self.attacker.sim

    def arm(self) -> None:
        self._victim_tap = tap_install(self.sim, self.victim, "observe")
        self.sim.at(max(self.plan.start, self.sim.now), self._begin)

    def _begin(self) -> None:
        sim = self.sim
        self._started_at = sim.now
        if self.plan.dos_first:
            self.victim.iface.up = False
            sim.note("dos", self.victim.name, "victim offline")
        self.attacker.iface.mac = self.plan.cloned_mac
        self.attacker.gateway = self.victim.gateway
        if self.plan.cloned_ip is not None:
            self.attacker.iface.ip = self.plan.cloned_ip
        sim.note("spoof", self.attacker.name, f"now using {self.plan.cloned_mac}")
        config = DhcpConfig(response_timeout=self.plan.attempt_timeout, retries=0)
        if self.variant is None:
            self.client = DhcpClient(config)
        else:
            store = KeyStore()
            # a key the server has never seen: the attacker cannot know the real one
            bogus = SharedKey(self.plan.cloned_mac, str(self.server_id), self.attacker.rng.randbytes(24))
            store.provision(bogus, self.attacker.rng.randbytes(NONCE_SIZE))
            self.client = SdhcpClient(self.variant, store, self.server_id, config, verify_offers=False)
        self.attacker.add_service(self.client)
        self._attempt()

    def _attempt(self) -> None:
        self.attempts += 1
        self.client.acquire().add_done_callback(self._done)

    def _done(self, p) -> None:
        if p.error is None:
            self.client_successes += 1
            self.leases.append(str(p.result.ip))
        if self.attempts < self.plan.attempts:
            self.sim.schedule(1, self._attempt)

    def server_grants(self) -> int:
        suffix = f"={self.plan.cloned_mac}"
        return sum(1 for e in self.sim.trace.events
                   if e["kind"] == "lease" and e["t"] >= self._started_at
                   and e["outcome"].startswith("bound ") and e["outcome"].endswith(suffix))

    def report(self) -> AttackReport:
        grants = self.server_grants()
        rep = AttackReport("spoofing", self.stack, self.attacker.name, attempts=self.attempts,
                           successes=max(grants, self.client_successes))
        victim_rx = len(self._victim_tap.observed) if self._victim_tap else 0
        rep.extra = {
            "cloned_mac": str(self.plan.cloned_mac),
            "leases": sorted(set(self.leases)),
            "server_grants": grants,
            "victim_online": self.victim.iface.up,
            "victim_frames_received": victim_rx,
            "attacker_frames_sent": len(self.client.messages) if self.client else 0,
        }
        return rep


def run_spoofing(attacker: Attacker, plan: SpoofPlan, stack: str, victim: Host, until: int,
                 server_id=None, variant=None) -> AttackReport:
    agent = SpoofingAgent(attacker, plan, victim, stack, server_id, variant)
    sim = attacker.sim
    sim.start()
    agent.arm()
    sim.run(until)
    return agent.report()


class InsiderAgent:
    """Holds the victim's shared key (not its RN) and sniffs the victim's exchanges.

    For each response it sees it recovers the session key, then (a) races
    ``burst`` forged acknowledgments to the server and (b) races ``burst``
    forged responses to the victim carrying a correctly masked key of its own.
    Neither can include the right NRN.
    """

    def __init__(self, attacker: Attacker, victim: Host, key: SharedKey, impersonated, burst: int = 1,
                 max_attempts: Optional[int] = None):
        self.attacker = attacker
        self.victim = victim
        self.key = key
        self.impersonated = ip(impersonated)
        self.burst = burst
        self.max_attempts = max_attempts
        self.ack_attempts = 0
        self.response_attempts = 0
        self.session_keys_recovered = 0
        self._requests: dict = {}
        self._forged: dict[int, Message] = {}  # held so ids stay unique

    @property
    def sim(self) -> Simulator:
        return self.attacker.sim

    def arm(self, suppress_victim_acks: bool = True) -> None:
        tap = self.attacker.tap
        if tap is None or not tap.promiscuous:
            raise ConfigError("the insider needs a promiscuous tap")
        tap.on_frame = self._sniffed
        if suppress_victim_acks:
            self.sim.loss.rule = self._drop_genuine_ack

    def _drop_genuine_ack(self, frame: Frame, segment: str) -> bool:
        # the worst case for the server: only forged acknowledgments ever reach it
        msg = frame.payload
        carried = msg.piggyback if msg.piggyback is not None else msg
        return (carried.kind == MessageKind.SUARP_ACK and frame.src_mac == self.victim.mac
                and id(msg) not in self._forged)

    def _budget(self) -> bool:
        return self.max_attempts is None or self.ack_attempts < self.max_attempts

    def _sniffed(self, frame: Frame) -> None:
        msg = frame.payload
        body = msg.body
        if msg.kind == MessageKind.SUARP_REQ and body is not None and body.mac_a == self.victim.mac:
            self._requests[body.ip_b] = body
            if body.ip_b == self.impersonated:
                self._race_response(body)
        elif msg.kind == MessageKind.SUARP_RES and body is not None and body.mac_a == self.victim.mac \
                and len(msg.masked) == 1 and self._budget():
            req = self._requests.get(body.ip_b)
            if req is None:
                return
            mic2 = keyed_hash_mic(self.key, None, [serialize_body(req), serialize_body(body)])
            try:
                session_key = SessionKey(xor_mask(msg.masked[0], mic2))
            except LengthMismatch:
                return
            self.session_keys_recovered += 1
            server = frame.src_mac
            for _ in range(self.burst):
                if not self._budget():
                    break
                ack = SuarpAck(body.ip_b, body.t_s, self.sim.now)
                guess = self.attacker.rng.randbytes(NONCE_SIZE)
                forged = Message.of(ack, mics=(keyed_hash_mic(session_key, None, [serialize_body(ack), guess]),))
                self._forged[id(forged)] = forged
                self.attacker.inject(Frame(self.victim.mac, server, forged, self.sim.now))
                self.ack_attempts += 1

    def _race_response(self, req: SuarpReq) -> None:
        resolver = self.victim.resolver
        for _ in range(self.burst):
            res = SuarpRes(req.ip_a, req.mac_a, req.ip_b, self.attacker.mac, self.sim.now)
            own_key = SessionKey.generate(self.attacker.rng)
            mic2 = keyed_hash_mic(self.key, None, [serialize_body(req), serialize_body(res)])
            mic3 = keyed_hash_mic(own_key, None, [self.attacker.rng.randbytes(NONCE_SIZE)])
            msg = Message.of(res, mics=(mic3,), masked=(xor_mask(own_key, mic2),))
            self.attacker.inject(Frame(resolver.server_mac, req.mac_a, msg, self.sim.now, ip_dst=req.ip_a))
            self.response_attempts += 1

    def report(self, server: SuarpServer) -> AttackReport:
        cache = self.victim.resolver.cache
        poisoned = any(a == self.impersonated and m == self.attacker.mac for _, a, m in cache.history)
        rep = AttackReport("insider", "suarp:AltV2", self.attacker.name, attempts=self.ack_attempts,
                           successes=server.stats["acks"])
        rep.extra = {
            "session_keys_recovered": self.session_keys_recovered,
            "forged_acks_rejected": server.stats["acks_rejected"],
            "racing_responses": self.response_attempts,
            "racing_poisoned": poisoned,
        }
        return rep
