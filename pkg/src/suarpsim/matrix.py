"""The attack suite: every attack against every stack, repeated over seeds.

Each cell is a fresh scenario.  A cell's verdict for one seed is SUCCESS if
the attacker got at least one forged mapping cached (poisoning) or one lease
granted under the cloned MAC (spoofing), otherwise BLOCKED.  ``attempts``
is the total across seeds, split evenly.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .scenario import build_scenario

POISON_STACKS = ("legacy", "suarp:Base", "suarp:AltV1", "suarp:AltV2")
SPOOF_STACKS = ("dhcp", "sdhcp:Base", "sdhcp:AltV1", "sdhcp:AltV2")
SUCCESS, BLOCKED = "SUCCESS", "BLOCKED"

_LAN = [{"name": "lan1", "network": "10.0.1.0/24"}]
_SERVER = {"name": "S", "segment": "lan1", "mac": "02:00:00:00:01:fe", "ip": "10.0.1.254"}
_ATTACKER = {"name": "M", "segment": "lan1", "mac": "02:00:00:00:01:66"}


def poisoning_config(stack: str, seed: int, attempts: int) -> dict:
    """Victim H1 keeps resolving H2; M forges.  Legacy victims are poisoned on a fixed cadence."""
    burst = 10
    hosts = [dict(_SERVER, role="dhcp_plus", suarp=stack.partition(":")[2] or "AltV1")] if stack != "legacy" else []
    for i in (1, 2):
        h = {"name": f"H{i}", "segment": "lan1", "mac": f"02:00:00:00:01:{i:02x}", "ip": f"10.0.1.{i}",
             "stack": stack}
        if stack != "legacy":
            h["server"] = "S"
        hosts.append(h)
    requests = -(-attempts // burst)
    adv = dict(_ATTACKER, ip="10.0.1.66", attack="poisoning", victims=[["H1", "H2"]], cadence=100,
               burst=burst, max_attempts=attempts, promiscuous=stack != "legacy")
    return {
        "scenario": {"name": f"poisoning-{stack}", "seed": seed, "duration": requests * 100 + 1000},
        "timers": {"t4": 50},
        "segments": _LAN,
        "hosts": hosts,
        "traffic": [{"action": "resolve", "from": "H1", "to": "H2", "at": 10, "every": 100, "count": requests},
                    {"action": "ping", "from": "H1", "to": "H2", "at": 60, "every": 100, "count": requests}],
        "adversaries": [adv],
    }


def spoofing_config(stack: str, seed: int, attempts: int) -> dict:
    """Victim V takes a lease, is knocked offline, and M retries network entry under V's MAC."""
    kind, _, variant = stack.partition(":")
    server = dict(_SERVER, pool="10.0.1.100-10.0.1.150")
    if kind == "dhcp":
        server["role"] = "dhcp_server"
    else:
        server.update(role="dhcp_plus", sdhcp=variant, suarp="AltV1")
    victim = {"name": "V", "segment": "lan1", "mac": "02:00:00:00:01:01", "dhcp": stack, "server": "S"}
    timeout = 20
    return {
        "scenario": {"name": f"spoofing-{stack}", "seed": seed, "duration": 2000 + attempts * (timeout + 2) + 1000},
        "segments": _LAN,
        "hosts": [server, victim],
        "traffic": [{"action": "acquire", "from": "V", "at": 10}],
        "adversaries": [dict(_ATTACKER, attack="spoofing", victim="V", start=1000, attempts=attempts,
                             attempt_timeout=timeout, tap="inject")],
    }


def insider_config(seed: int, attempts: int) -> dict:
    """M holds H1's shared key, sees H1's exchanges, and forges the ACKs the server never gets from H1."""
    hosts = [dict(_SERVER, role="dhcp_plus", suarp="AltV2")]
    for i in (1, 2):
        hosts.append({"name": f"H{i}", "segment": "lan1", "mac": f"02:00:00:00:01:{i:02x}", "ip": f"10.0.1.{i}",
                      "stack": "suarp:AltV2", "server": "S"})
    # one exchange is seen four times: the response plus three retransmissions
    burst = -(-attempts // 4)
    return {
        "scenario": {"name": "insider-AltV2", "seed": seed, "duration": 6000},
        "segments": _LAN,
        "hosts": hosts,
        "traffic": [{"action": "resolve", "from": "H1", "to": "H2", "at": 10}],
        "adversaries": [dict(_ATTACKER, ip="10.0.1.66", attack="insider", victim="H1", impersonated="H2",
                             burst=burst, max_attempts=attempts, promiscuous=True)],
    }


@dataclass
class Cell:
    attack: str
    stack: str
    attempts: int = 0
    successes: int = 0
    verdicts: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return SUCCESS if self.successes else BLOCKED

    @property
    def successful_runs(self) -> int:
        return self.verdicts.count(SUCCESS)


@dataclass
class MatrixResult:
    seeds: list
    cells: list
    elapsed: float = 0.0

    def cell(self, attack: str, stack: str) -> Cell:
        for c in self.cells:
            if (c.attack, c.stack) == (attack, stack):
                return c
        raise KeyError((attack, stack))

    def per_seed(self) -> list[dict]:
        return [{f"{c.attack}/{c.stack}": c.verdicts[i] for c in self.cells} for i in range(len(self.seeds))]

    @property
    def seed_invariant(self) -> bool:
        rows = self.per_seed()
        return all(r == rows[0] for r in rows)

    def to_dict(self) -> dict:
        return {"seeds": self.seeds, "seed_invariant": self.seed_invariant,
                "cells": [{"attack": c.attack, "stack": c.stack, "verdict": c.verdict, "attempts": c.attempts,
                           "successes": c.successes, "successful_runs": c.successful_runs,
                           "runs": len(c.verdicts), "extra": c.extra} for c in self.cells]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def render(self) -> str:
        lines = [f"{'attack':<10} {'stack':<12} {'verdict':<8} {'runs':>9} {'successes':>9} {'attempts':>8}"]
        for c in self.cells:
            lines.append(f"{c.attack:<10} {c.stack:<12} {c.verdict:<8} "
                         f"{c.successful_runs:>4}/{len(c.verdicts):<4} {c.successes:>9} {c.attempts:>8}")
        lines.append(f"seeds: {len(self.seeds)}; identical matrix across seeds: {self.seed_invariant}")
        return "\n".join(lines) + "\n"


def _split(total: int, parts: int) -> list[int]:
    base, rest = divmod(total, parts)
    return [base + (i < rest) for i in range(parts)]


def _run(config: dict) -> list:
    return build_scenario(config).run().reports


def run_attack_matrix(seeds: Optional[Iterable[int]] = None, attempts: int = 10_000,
                      legacy_attempts: int = 10) -> MatrixResult:
    """Run every cell for every seed.  Secure cells share ``attempts`` across seeds."""
    seeds = list(range(1, 11) if seeds is None else seeds)
    started = time.perf_counter()
    cells = []
    plans = [("poisoning", s, poisoning_config) for s in POISON_STACKS]
    plans += [("spoofing", s, spoofing_config) for s in SPOOF_STACKS]
    for attack, stack, make in plans:
        cell = Cell(attack, stack)
        legacy = stack in ("legacy", "dhcp")
        budgets = [legacy_attempts] * len(seeds) if legacy else _split(attempts, len(seeds))
        for seed, budget in zip(seeds, budgets):
            (report,) = _run(make(stack, seed, budget))
            cell.attempts += report.attempts
            cell.successes += report.successes
            cell.verdicts.append(SUCCESS if report.successes else BLOCKED)
            if attack == "poisoning":
                cell.extra["intercepted"] = cell.extra.get("intercepted", 0) + report.intercepted
        cells.append(cell)

    insider = Cell("insider", "suarp:AltV2")
    for seed, budget in zip(seeds, _split(attempts, len(seeds))):
        (report,) = _run(insider_config(seed, budget))
        insider.attempts += report.attempts
        insider.successes += report.successes
        insider.verdicts.append(SUCCESS if report.successes else BLOCKED)
        for k in ("session_keys_recovered", "racing_responses"):
            insider.extra[k] = insider.extra.get(k, 0) + report.extra[k]
        insider.extra["racing_poisoned_runs"] = insider.extra.get("racing_poisoned_runs", 0) + \
            int(report.extra["racing_poisoned"])
    cells.append(insider)
    return MatrixResult(seeds, cells, time.perf_counter() - started)
