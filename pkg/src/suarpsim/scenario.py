"""Scenario files: TOML in, a wired-up simulation and its output documents out.

A scenario names segments, routers, hosts and servers, picks a resolution
stack and an addressing method per host, provisions keys, and scripts
traffic and attackers.  Everything is validated before the simulation
starts; problems raise :class:`ConfigError`.  See docs/scenario_format.md.
"""

from __future__ import annotations

import csv
import fnmatch
import io
import json
import random
import sys
from dataclasses import dataclass, field
from ipaddress import IPv4Address, IPv4Network
from pathlib import Path
from typing import Any, Iterable, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .adversary import (
    Attacker, InsiderAgent, PoisoningAgent, PoisonPlan, SpoofingAgent, SpoofPlan,
)
from .analysis import project_sarp, project_suarp, summarize_trace
from .crypto import KEY_SIZE, KeyStore, SharedKey, new_nonce
from .errors import ConfigError
from .legacy import DhcpClient, DhcpConfig, DhcpServer, LegacyArp, check_lease_uniqueness
from .model import TimerConfig, ip, mac
from .netsim import Host, LossModel, Router, Simulator
from .sdhcp import SdhcpClient, SdhcpServer, SdhcpVariant
from .suarp import RegistrationServer, StaticRegistrar, SuarpClient, SuarpServer, SuarpVariant

ROLES = ("host", "dhcp_server", "dhcp_plus", "dhcp_minus")
KEY_MODES = ("provisioned", "none", "bogus")
ACTIONS = ("resolve", "ping", "data", "acquire", "renew", "register")
ATTACKS = ("poisoning", "spoofing", "insider")

REPORT_COLUMNS = ("session", "hosts", "total_pkts", "arp_pkts", "arp_reply_pkts", "avg_arp_size", "pct_arp",
                  "suarp_pkts_no_ack", "pct_suarp_no_ack", "suarp_pkts_with_ack", "pct_suarp_with_ack",
                  "sarp_pkts", "pct_sarp")


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def parse_stack(text: str) -> tuple[str, Optional[str]]:
    """'legacy' | 'suarp:<variant>' | 'static:<variant>' -> (kind, variant)."""
    kind, _, variant = str(text).partition(":")
    if kind == "legacy" and not variant:
        return kind, None
    if kind in ("suarp", "static"):
        try:
            return kind, SuarpVariant.parse(variant or "AltV1").value
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown stack {text!r}")


def parse_dhcp(text: str) -> tuple[str, Optional[str]]:
    """'none' | 'dhcp' | 'sdhcp:<variant>' -> (kind, variant)."""
    kind, _, variant = str(text).partition(":")
    if kind in ("none", "dhcp") and not variant:
        return kind, None
    if kind == "sdhcp":
        try:
            return kind, SdhcpVariant.parse(variant or "AltV1").value
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown addressing method {text!r}")


def _pool(spec) -> list[IPv4Address]:
    if isinstance(spec, str):
        lo, _, hi = spec.partition("-")
        lo, hi = ip(lo.strip()), ip(hi.strip() or lo.strip())
        if hi < lo:
            raise ConfigError(f"empty address range {spec!r}")
        return [IPv4Address(n) for n in range(int(lo), int(hi) + 1)]
    return [ip(a) for a in spec]


@dataclass
class HostSpec:
    name: str
    segment: str
    mac: Any
    ip: Optional[IPv4Address]
    role: str = "host"
    stack: str = "legacy"
    dhcp: str = "none"
    key: str = "provisioned"
    server: Optional[str] = None
    gateway: Optional[str] = None
    raw: dict = field(default_factory=dict)


@dataclass
class Scenario:
    """A built, not yet run, simulation plus everything needed to report on it."""

    name: str
    sim: Simulator
    duration: int
    hosts: dict[str, Host]
    specs: dict[str, HostSpec]
    servers: dict[str, dict]
    traffic: list[dict]
    adversaries: list[dict]
    agents: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    _ran: bool = False

    def run(self) -> "Scenario":
        if self._ran:
            raise ConfigError("a scenario runs once; rebuild it to run again")
        self._ran = True
        sim = self.sim
        sim.validate()
        sim.start()
        for adv in self.adversaries:
            self.agents.append(self._arm(adv))
        rng = random.Random(sim.seed ^ 0x7AFF1C)
        for item in self.traffic:
            self._schedule_traffic(item, rng)
        sim.run(self.duration)
        self.reports = [self._report(agent) for agent in self.agents]
        return self

    # traffic

    def _match(self, pattern: str) -> list[Host]:
        names = [n for n in self.hosts if fnmatch.fnmatchcase(n, pattern)]
        if not names:
            raise ConfigError(f"traffic references unknown host {pattern!r}")
        return [self.hosts[n] for n in sorted(names)]

    def _target_ip(self, who: str) -> IPv4Address:
        if who in self.hosts:
            addr = self.hosts[who].ip
            if addr is None:
                raise ConfigError(f"{who} has no address yet")
            return addr
        return ip(who)

    def _schedule_traffic(self, item: dict, rng: random.Random) -> None:
        action = item["action"]
        sources = self._match(item["from"])
        targets = item.get("to")
        count, every = item.get("count", 1), item.get("every", 0)

        def fire(n):
            src = rng.choice(sources) if len(sources) > 1 else sources[0]
            tgt = None
            if targets is not None:
                pool = [h for h in self._match(targets) if h is not src] if targets in self.hosts or \
                    any(ch in targets for ch in "*?[") else None
                if pool is not None:
                    if not pool:
                        raise ConfigError(f"traffic {action} from {src.name} has no distinct target")
                    tgt = (rng.choice(pool) if len(pool) > 1 else pool[0]).name
                else:
                    tgt = targets
            self._do(action, src, tgt, item)
            if n + 1 < count:
                self.sim.schedule(every, fire, n + 1)

        self.sim.at(item.get("at", 0), fire, 0)

    def _do(self, action: str, src: Host, tgt: Optional[str], item: dict) -> None:
        if action in ("resolve", "ping", "data") and src.ip is None:
            self.sim.note("fail", src.name, f"{action} skipped: no address")
            return
        if action == "resolve":
            pending = src.resolver.resolve(self._target_ip(tgt))
            if item.get("then_data_to"):
                then = self._target_ip(item["then_data_to"])
                delay = item.get("then_delay", 0)
                pending.add_done_callback(
                    lambda p: p.error is None and self.sim.schedule(delay, src.send_data, then, b"data"))
        elif action == "ping":
            src.ping(self._target_ip(tgt))
        elif action == "data":
            src.send_data(self._target_ip(tgt), item.get("payload", "data").encode())
        elif action in ("acquire", "renew"):
            client = _service(src, DhcpClient)
            if client is None:
                raise ConfigError(f"{src.name} has no DHCP client")
            if action == "renew" and client.lease is not None:
                client.renew()
            else:
                client.acquire()
        elif action == "register":
            registrar = _service(src, StaticRegistrar)
            if registrar is None:
                raise ConfigError(f"{src.name} does not use static registration")
            registrar.register()

    # adversaries

    def _arm(self, adv: dict):
        attacker: Attacker = self.hosts[adv["name"]]
        kind = adv["attack"]
        if kind == "poisoning":
            pairs = [(self._target_ip(v), self._target_ip(t)) for v, t in adv.get("victims", [])]
            plan = PoisonPlan(pairs, cadence=adv.get("cadence", 1000), start=adv.get("start", 0),
                              rounds=adv.get("rounds"), burst=adv.get("burst", 1),
                              max_attempts=adv.get("max_attempts"), forge_requests=adv.get("forge_requests", True),
                              mitm=adv.get("mitm", True))
            agent = PoisoningAgent(attacker, plan)
            agent.arm()
            agent.stack = self._victim_stack(pairs[0][0]) if pairs else "legacy"
            return agent
        if kind == "spoofing":
            victim = self.hosts[adv["victim"]]
            spec = self.specs[victim.name]
            dhcp, variant = parse_dhcp(spec.dhcp)
            plan = SpoofPlan(victim.mac, adv.get("cloned_ip"), adv.get("dos_first", True),
                             adv.get("attempts", 1), adv.get("start", 0), adv.get("attempt_timeout", 20))
            server = self._server_host(spec)
            agent = SpoofingAgent(attacker, plan, victim, f"{dhcp}:{variant}" if variant else dhcp,
                                  server.ip if server is not None else None, variant)
            agent.arm()
            return agent
        victim = self.hosts[adv["victim"]]
        spec = self.specs[victim.name]
        sv = self.servers[self._server_host(spec).name]
        key = sv["suarp_store"].entry((victim.mac, str(self._server_host(spec).ip))).shared_key
        agent = InsiderAgent(attacker, victim, key, self._target_ip(adv["impersonated"]),
                             burst=adv.get("burst", 1), max_attempts=adv.get("max_attempts"))
        agent.arm(adv.get("suppress_victim_acks", True))
        agent.server = sv["suarp"]
        return agent

    def _report(self, agent):
        if isinstance(agent, PoisoningAgent):
            return agent.report(agent.stack)
        if isinstance(agent, SpoofingAgent):
            return agent.report()
        return agent.report(agent.server)

    def _victim_stack(self, victim_ip) -> str:
        iface = self.sim.node_by_ip(victim_ip)
        spec = self.specs.get(iface.node.name)
        return spec.stack if spec else "legacy"

    def _server_host(self, spec: HostSpec) -> Optional[Host]:
        return self.hosts.get(spec.server) if spec.server else None

    # outputs

    def metrics(self) -> dict:
        sim = self.sim
        summary = summarize_trace(sim.trace, hosts=sum(1 for s in self.specs.values() if s.role == "host"))
        by_kind: dict[str, int] = {}
        for e in sim.trace.emissions():
            by_kind[e["msg_kind"]] = by_kind.get(e["msg_kind"], 0) + 1
        hosts = {}
        for name, host in sorted(self.hosts.items()):
            entry = {"ip": str(host.ip) if host.ip else None, "mac": str(host.mac)}
            stats = getattr(host.resolver, "stats", None)
            if stats:
                entry["resolver"] = dict(sorted(stats.items()))
            for svc in host.services:
                if isinstance(svc, SuarpServer):
                    entry["suarp_server"] = dict(sorted(svc.stats.items()))
                if isinstance(svc, DhcpServer):
                    entry["dhcp_server"] = {"mode": svc.mode.value, "acks_sent": svc.acks_sent,
                                            "rejects": len(svc.rejects),
                                            "bound": sorted(str(l.ip) for l in svc.bound_leases())}
                if isinstance(svc, RegistrationServer):
                    entry["registrations"] = {str(k): str(v) for k, v in sorted(svc.table.items())}
            hosts[name] = entry
        return {"scenario": self.name, "seed": sim.seed, "duration": self.duration, "end_time": sim.now,
                "ledger": dict(sorted(sim.ledger.items())), "frames_by_kind": dict(sorted(by_kind.items())),
                "summary": {"total_pkts": summary.total_pkts, "arp_pkts": summary.arp_pkts,
                            "arp_reply_pkts": summary.arp_reply_pkts, "avg_arp_size": summary.avg_arp_size,
                            "avg_arp_size_defined": summary.size_defined, "pct_arp": str(summary.pct_arp)},
                "hosts": hosts}

    def report_csv(self) -> str:
        s = summarize_trace(self.sim.trace, hosts=sum(1 for sp in self.specs.values() if sp.role == "host"))
        no_ack, pct_no = project_suarp(s, with_ack=False)
        with_ack, pct_with = project_suarp(s, with_ack=True)
        sarp, pct_sarp = project_sarp(s)
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        w.writerow([s.session, s.hosts, s.total_pkts, s.arp_pkts, s.arp_reply_pkts, f"{s.avg_arp_size:.2f}",
                    s.pct_arp, no_ack, pct_no, with_ack, pct_with, sarp, pct_sarp])
        return out.getvalue()

    def write_outputs(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "trace.jsonl", out / "metrics.json", out / "report.csv"]
        self.sim.trace.write(written[0])
        written[1].write_text(json.dumps(self.metrics(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written[2].write_text(self.report_csv(), encoding="utf-8")
        if self.reports:
            doc = [r.to_dict() for r in self.reports]
            path = out / "attack_report.json"
            path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
            written.append(path)
        return written


def _service(host: Host, cls):
    for svc in host.services:
        if isinstance(svc, cls):
            return svc
    return None


# -- building ----------------------------------------------------------------------


class _MacAllocator:
    def __init__(self):
        self.n = 0

    def next(self):
        self.n += 1
        return mac(f"02:00:{(self.n >> 16) & 0xFF:02x}:{(self.n >> 8) & 0xFF:02x}:{self.n & 0xFF:02x}:01")


def _expand_hosts(entries: list[dict], networks: dict[str, IPv4Network],
                  reserved: Iterable[IPv4Address] = ()) -> list[HostSpec]:
    specs, macs, used = [], _MacAllocator(), set(reserved)
    next_ip: dict[str, int] = {}
    for e in entries:
        for field_name in ("name", "segment"):
            if field_name not in e:
                raise ConfigError(f"host entry is missing {field_name!r}: {e}")
        count = e.get("count")
        names = [e["name"]] if count is None else [f"{e['name']}{i}" for i in range(1, int(count) + 1)]
        for name in names:
            seg = e["segment"]
            if seg not in networks:
                raise ConfigError(f"host {name} attaches to unknown segment {seg!r}")
            addr = e.get("ip")
            if addr == "auto" or (count is not None and addr is None and e.get("dhcp", "none") == "none"):
                net = networks[seg]
                n = next_ip.get(seg, 1)
                while net.network_address + n in used:
                    n += 1
                addr = net.network_address + n
                next_ip[seg] = n + 1
            elif count is not None and addr is not None:
                raise ConfigError(f"host group {e['name']} cannot share one fixed IP")
            addr = ip(addr) if addr is not None else None
            if addr is not None:
                if addr in used:
                    raise ConfigError(f"IP {addr} assigned twice")
                used.add(addr)
            m = e.get("mac") if count is None else None
            role = e.get("role", "host")
            if role not in ROLES:
                raise ConfigError(f"host {name}: unknown role {role!r}")
            key = e.get("key", "provisioned")
            if key not in KEY_MODES:
                raise ConfigError(f"host {name}: unknown key mode {key!r}")
            specs.append(HostSpec(name, seg, mac(m) if m else macs.next(), addr, role, e.get("stack", "legacy"),
                                  e.get("dhcp", "none"), key, e.get("server"), e.get("gateway"), e))
    return specs


def build_scenario(config: dict, seed: Optional[int] = None) -> Scenario:
    """Validate ``config`` and wire up the simulation it describes."""
    meta = config.get("scenario", {})
    seed = meta.get("seed", 0) if seed is None else seed
    timers_cfg = config.get("timers", {})
    try:
        timers = TimerConfig(**timers_cfg)
    except TypeError as exc:
        raise ConfigError(f"timers: {exc}") from None
    loss_cfg = dict(config.get("loss", {}))
    loss = LossModel(loss_cfg.get("default_drop", 0.0), dict(loss_cfg.get("per_segment", {})), rng_seed=seed)
    sim = Simulator(seed, timers, loss, meta.get("hop_delay", 1))
    sim.invariants.append(check_lease_uniqueness)

    networks: dict[str, IPv4Network] = {}
    for seg in config.get("segments", []):
        sim.add_segment(seg["name"])
        try:
            networks[seg["name"]] = IPv4Network(seg["network"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"segment {seg.get('name')}: bad network ({exc})") from None
    if not networks:
        raise ConfigError("a scenario needs at least one segment")

    routers: dict[str, Router] = {}
    router_ips = []
    for r in config.get("routers", []):
        router = routers[r["name"]] = Router(r["name"])
        for att in r.get("attach", []):
            seg = att["segment"]
            if seg not in networks:
                raise ConfigError(f"router {r['name']} attaches to unknown segment {seg!r}")
            sim.attach(router, seg, att["mac"], att["ip"], str(networks[seg]))
            router_ips.append(ip(att["ip"]))

    adv_entries = config.get("adversaries", [])
    for adv in adv_entries:
        if adv.get("attack") not in ATTACKS:
            raise ConfigError(f"adversary {adv.get('name')}: unknown attack {adv.get('attack')!r}")
    specs = _expand_hosts(config.get("hosts", []) + [dict(a, role="host") for a in adv_entries], networks,
                          router_ips)
    spec_by_name = {s.name: s for s in specs}
    if len(spec_by_name) != len(specs):
        raise ConfigError("duplicate host name")
    adversary_names = {a["name"] for a in adv_entries}

    hosts: dict[str, Host] = {}
    for s in specs:
        node = Attacker(s.name) if s.name in adversary_names else Host(s.name)
        sim.attach(node, s.segment, s.mac, s.ip, str(networks[s.segment]))
        hosts[s.name] = node
    for s in specs:
        if s.gateway is not None:
            router = routers.get(s.gateway)
            if router is None:
                raise ConfigError(f"host {s.name}: unknown gateway {s.gateway!r}")
            iface = next((i for i in router.interfaces if i.segment.name == s.segment), None)
            if iface is None:
                raise ConfigError(f"gateway {s.gateway} is not on {s.name}'s segment")
            hosts[s.name].gateway = iface.mac

    servers = _build_servers(sim, specs, hosts, seed)
    _default_servers(specs, servers)
    _build_clients(sim, specs, hosts, servers, seed)

    for r in config.get("routers", []):
        for relay in r.get("relay", []):
            routers[r["name"]].enable_relay(relay["segment"], _address_of(relay["server"], hosts))

    traffic = [dict(t) for t in config.get("traffic", [])]
    for t in traffic:
        if t.get("action") not in ACTIONS:
            raise ConfigError(f"unknown traffic action {t.get('action')!r}")
        if "from" not in t:
            raise ConfigError(f"traffic {t['action']} needs a 'from' host")
    for adv in adv_entries:
        for ref in [adv.get("victim"), *(x for pair in adv.get("victims", []) for x in pair)]:
            if ref is not None and ref not in hosts:
                try:
                    ip(ref)
                except Exception:
                    raise ConfigError(f"adversary {adv['name']} references unknown host {ref!r}") from None
        hosts[adv["name"]].install(sim, adv.get("tap", "mitm"), adv.get("promiscuous", adv["attack"] == "insider"))
    return Scenario(meta.get("name", "scenario"), sim, int(meta.get("duration", 60_000)), hosts,
                    spec_by_name, servers, traffic, adv_entries)


def _dhcp_config(spec: HostSpec) -> DhcpConfig:
    try:
        return DhcpConfig(**spec.raw.get("dhcp_config", {}))
    except TypeError as exc:
        raise ConfigError(f"host {spec.name}: dhcp_config: {exc}") from None


def _address_of(ref: str, hosts: dict[str, Host]) -> IPv4Address:
    if ref in hosts:
        return hosts[ref].ip
    return ip(ref)


def _build_servers(sim: Simulator, specs: list[HostSpec], hosts: dict[str, Host], seed: int) -> dict[str, dict]:
    servers: dict[str, dict] = {}
    for s in specs:
        if s.role == "host":
            continue
        host = hosts[s.name]
        if s.ip is None:
            raise ConfigError(f"server {s.name} needs a fixed IP")
        cfg = s.raw
        dhcp_cfg = _dhcp_config(s)
        entry: dict = {"role": s.role, "suarp_store": KeyStore(), "sdhcp_store": KeyStore(), "static": {}}
        # hosts with fixed addresses served by this DHCP+ are preloaded as static leases
        for other in specs:
            if other.server == s.name and other.ip is not None and other.role == "host":
                entry["static"][other.ip] = other.mac
        if s.role == "dhcp_server":
            entry["dhcp"] = host.add_service(DhcpServer(_pool(cfg.get("pool", [])), dhcp_cfg,
                                                        patched=cfg.get("patched", True)))
        elif s.role == "dhcp_plus":
            sdhcp = cfg.get("sdhcp")
            if sdhcp:
                entry["dhcp"] = host.add_service(SdhcpServer(
                    _pool(cfg.get("pool", [])), entry["sdhcp_store"], sdhcp, dhcp_cfg,
                    encrypt_ack=cfg.get("encrypt_ack", True), static_leases=entry["static"]))
            elif cfg.get("pool"):
                entry["dhcp"] = host.add_service(DhcpServer(_pool(cfg["pool"]), dhcp_cfg,
                                                            static_leases=entry["static"]))
            dhcp = entry.get("dhcp")
            static = dict(entry["static"])
            mapping = (lambda d=dhcp, st=static: {**st, **d.mapping_table()}) if dhcp else static
            entry["suarp"] = host.add_service(SuarpServer(cfg.get("suarp", "AltV1"), entry["suarp_store"], mapping))
        else:
            reg = host.add_service(RegistrationServer(entry["suarp_store"], cfg.get("advert_interval", 60_000)))
            entry["registration"] = reg
            entry["suarp"] = host.add_service(SuarpServer(cfg.get("suarp", "AltV1"), entry["suarp_store"],
                                                          reg.mapping_table))
        servers[s.name] = entry
    return servers


def _default_servers(specs: list[HostSpec], servers: dict[str, dict]) -> None:
    for s in specs:
        if s.role != "host" or s.server is not None:
            continue
        stack, _ = parse_stack(s.stack)
        dhcp, _ = parse_dhcp(s.dhcp)
        want = set()
        if stack == "suarp" or dhcp == "sdhcp":
            want = {"dhcp_plus"}
        elif stack == "static":
            want = {"dhcp_minus"}
        elif dhcp == "dhcp":
            want = {"dhcp_server", "dhcp_plus"}
        if not want:
            continue
        candidates = [n for n, e in servers.items() if e["role"] in want]
        if len(candidates) != 1:
            raise ConfigError(f"host {s.name}: name its server (found {len(candidates)} candidates)")
        s.server = candidates[0]


def _build_clients(sim: Simulator, specs: list[HostSpec], hosts: dict[str, Host], servers: dict[str, dict],
                   seed: int) -> None:
    rng = random.Random(seed ^ 0x5EC2E7)
    for s in specs:
        stack, suarp_variant = parse_stack(s.stack)
        dhcp, sdhcp_variant = parse_dhcp(s.dhcp)
        if s.role != "host":
            hosts[s.name].add_service(LegacyArp())
            continue
        host = hosts[s.name]
        server_host = hosts.get(s.server) if s.server else None
        if s.server and server_host is None:
            raise ConfigError(f"host {s.name}: unknown server {s.server!r}")
        sv = servers.get(s.server) if s.server else None
        if s.server and sv is None:
            raise ConfigError(f"host {s.name}: {s.server} is not a server")
        secure = stack in ("suarp", "static") or dhcp == "sdhcp"
        if secure and s.key == "none":
            raise ConfigError(f"host {s.name}: unprovisioned key for a {s.stack}/{s.dhcp} host")
        if stack == "static" and s.ip is None:
            raise ConfigError(f"host {s.name}: static mode needs a fixed IP")
        if stack == "static" and sv["role"] != "dhcp_minus":
            raise ConfigError(f"host {s.name}: static mode registers with a registration server")
        if stack == "suarp" and sv["role"] != "dhcp_plus":
            raise ConfigError(f"host {s.name}: S-UARP resolves against a DHCP+ server")
        if dhcp == "sdhcp" and not isinstance(sv.get("dhcp"), SdhcpServer):
            raise ConfigError(f"host {s.name}: S-DHCP needs a keyed DHCP+ server")
        if dhcp == "dhcp" and not isinstance(sv.get("dhcp"), DhcpServer):
            raise ConfigError(f"host {s.name}: {s.server} does not hand out leases")
        secret = rng.randbytes(KEY_SIZE)
        host_secret = rng.randbytes(KEY_SIZE) if s.key == "bogus" else secret
        server_id = str(server_host.ip) if server_host is not None else ""
        suarp_store, sdhcp_store = KeyStore(), KeyStore()
        if secure and s.key != "none":
            # one secret per host, but each protocol rolls its own RN
            for proto_store, server_store in ((suarp_store, sv["suarp_store"]), (sdhcp_store, sv["sdhcp_store"])):
                rn = new_nonce(rng)
                server_store.provision(SharedKey(s.mac, server_id, secret), rn)
                proto_store.provision(SharedKey(s.mac, server_id, host_secret), rn)
        if stack == "legacy":
            host.add_service(LegacyArp())
        else:
            client = host.add_service(SuarpClient(suarp_variant, server_host.ip, server_host.mac, suarp_store))
            if stack == "static":
                host.add_service(StaticRegistrar(client))
        dhcp_cfg = _dhcp_config(s)
        if dhcp == "dhcp":
            host.add_service(DhcpClient(dhcp_cfg))
        elif dhcp == "sdhcp":
            host.add_service(SdhcpClient(sdhcp_variant, sdhcp_store, server_host.ip, dhcp_cfg))


def load_scenario(path, seed: Optional[int] = None) -> Scenario:
    return build_scenario(load_toml(path), seed)
