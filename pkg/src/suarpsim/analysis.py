"""Capture statistics, packet-count projections, reduction factors and a weighted time-cost model.

Inputs are either simulator traces or per-session summaries read from CSV
(columns: session,hosts,total_pkts,arp_pkts,arp_reply_pkts,avg_arp_size).
Percentages are rendered at two decimals, rounding half up.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from statistics import mean
from typing import Iterable, Optional, Sequence

from .errors import MalformedTrace, UnknownScheme
from .netsim import TraceLog

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("session", "hosts", "total_pkts", "arp_pkts", "arp_reply_pkts", "avg_arp_size")
TABLE_COLUMNS = ("session", "total_pkts", "arp_pkts", "suarp_pkts", "pct_arp", "pct_suarp", "pct_sarp")
ARP_KINDS = ("ArpRequest", "ArpReply")

SUARP_FRAMES_NO_ACK = 2
SUARP_FRAMES_WITH_ACK = 3
# Frames per resolution charged to the PKI scheme on top of the ARP traffic.
# Found by fit_sarp_coefficients against the published percentages.
SARP_ARP_COEFF = 1
SARP_REPLY_COEFF = 6


def round2(value) -> Decimal:
    return Decimal(value).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def percent(part: int, whole: int) -> Decimal:
    if whole <= 0:
        return Decimal("0.00")
    return round2(Decimal(part) * 100 / Decimal(whole))


@dataclass(frozen=True)
class SessionSummary:
    session: int
    hosts: int
    total_pkts: int
    arp_pkts: int
    arp_reply_pkts: int
    avg_arp_size: float = 0.0
    size_defined: bool = True

    def __post_init__(self):
        if not 0 <= self.arp_reply_pkts <= self.arp_pkts <= self.total_pkts:
            raise ValueError(f"session {self.session}: need replies <= ARP packets <= total packets")

    @property
    def pct_arp(self) -> Decimal:
        return percent(self.arp_pkts, self.total_pkts)


@dataclass(frozen=True)
class ComparisonRow:
    session: int
    total_pkts: int
    arp_pkts: int
    suarp_pkts: int
    pct_arp: Decimal
    pct_suarp: Decimal
    sarp_pkts: int
    pct_sarp: Decimal

    def cells(self) -> dict:
        return {"session": self.session, "total_pkts": self.total_pkts, "arp_pkts": self.arp_pkts,
                "suarp_pkts": self.suarp_pkts, "pct_arp": f"{self.pct_arp:.2f}",
                "pct_suarp": f"{self.pct_suarp:.2f}", "pct_sarp": f"{self.pct_sarp:.2f}"}


# -- CSV io --------------------------------------------------------------------


def read_summaries(source) -> list[SessionSummary]:
    """Parse SessionSummary rows from a path or an open text stream."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_summaries(fh)
    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        return []
    missing = set(SUMMARY_COLUMNS) - set(reader.fieldnames)
    if missing:
        raise ValueError(f"summary CSV is missing columns: {', '.join(sorted(missing))}")
    rows = []
    for rec in reader:
        rows.append(SessionSummary(int(rec["session"]), int(rec["hosts"]), int(rec["total_pkts"]),
                                   int(rec["arp_pkts"]), int(rec["arp_reply_pkts"]), float(rec["avg_arp_size"])))
    return rows


def write_summaries(rows: Iterable[SessionSummary]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow([r.session, r.hosts, r.total_pkts, r.arp_pkts, r.arp_reply_pkts, f"{r.avg_arp_size:.2f}"])
    return out.getvalue()


def write_table(rows: Iterable[ComparisonRow]) -> str:
    out = io.StringIO()
    w = csv.DictWriter(out, TABLE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.cells())
    return out.getvalue()


def read_table(source) -> list[dict]:
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_table(fh)
    return list(csv.DictReader(source))


# -- trace statistics ----------------------------------------------------------


def summarize_trace(trace: TraceLog, session: int = 1, hosts: int = 0) -> SessionSummary:
    """Count emitted frames the way a capture on the wire would see them."""
    total = arp = replies = size = 0
    for e in trace:
        if not isinstance(e, dict) or "kind" not in e:
            raise MalformedTrace(f"not a trace event: {e!r}")
        if e["kind"] != "emit":
            continue
        if not isinstance(e.get("size"), int):
            raise MalformedTrace(f"emit event without integer size at t={e.get('t')}")
        total += 1
        if e.get("msg_kind") in ARP_KINDS:
            arp += 1
            size += e["size"]
            replies += e["msg_kind"] == "ArpReply"
    avg = size / arp if arp else 0.0
    return SessionSummary(session, hosts, total, arp, replies, round(avg, 2), size_defined=arp > 0)


# -- projections -----------------------------------------------------------------


def project_suarp(summary: SessionSummary, with_ack: bool) -> tuple[int, Decimal]:
    per_cycle = SUARP_FRAMES_WITH_ACK if with_ack else SUARP_FRAMES_NO_ACK
    pkts = per_cycle * summary.arp_reply_pkts
    return pkts, percent(pkts, summary.total_pkts)


def project_sarp(summary: SessionSummary, arp_coeff: int = SARP_ARP_COEFF,
                 reply_coeff: int = SARP_REPLY_COEFF) -> tuple[int, Decimal]:
    pkts = arp_coeff * summary.arp_pkts + reply_coeff * summary.arp_reply_pkts
    return pkts, percent(pkts, summary.total_pkts)


def fit_sarp_coefficients(summaries: Sequence[SessionSummary], published: Sequence, tolerance="0.01",
                          max_coeff: int = 10) -> list[tuple[int, int]]:
    """Every small integer pair (a, b) with a*arp + b*replies matching all published percentages."""
    tol = Decimal(tolerance)
    target = [Decimal(str(p)) for p in published]
    fits = []
    for a, b in itertools.product(range(max_coeff + 1), repeat=2):
        if all(abs(project_sarp(s, a, b)[1] - t) <= tol for s, t in zip(summaries, target)):
            fits.append((a, b))
    return fits


def comparison_rows(summaries: Iterable[SessionSummary], with_ack: bool) -> list[ComparisonRow]:
    rows = []
    for s in summaries:
        if s.arp_reply_pkts == 0:
            log.warning("session %s has no ARP replies; projected columns are degenerate", s.session)
        suarp, pct_suarp = project_suarp(s, with_ack)
        sarp, pct_sarp = project_sarp(s)
        rows.append(ComparisonRow(s.session, s.total_pkts, s.arp_pkts, suarp, s.pct_arp, pct_suarp, sarp, pct_sarp))
    return rows


def reduction_factor(pairs: Iterable[tuple[int, int]]) -> float:
    """Mean over sessions of arp_pkts / suarp_pkts; sessions with no S-UARP traffic are skipped."""
    ratios = []
    for arp, suarp in pairs:
        if suarp <= 0:
            log.warning("skipping session with zero S-UARP packets")
            continue
        ratios.append(arp / suarp)
    return mean(ratios) if ratios else 0.0


def blended_factor(no_ack: float, with_ack: float, piggyback_share: float = 0.5) -> float:
    return piggyback_share * no_ack + (1 - piggyback_share) * with_ack


@dataclass
class TableReport:
    table2: list[ComparisonRow]
    table3: list[ComparisonRow]
    factor_no_ack: float
    factor_with_ack: float
    factor_blend: float

    def metrics(self) -> dict:
        return {"reduction_no_ack": round(self.factor_no_ack, 2),
                "reduction_with_ack": round(self.factor_with_ack, 2),
                "reduction_blend": round(self.factor_blend, 2),
                "sessions": len(self.table2)}

    def render(self, summaries: Sequence[SessionSummary]) -> str:
        lines = ["Session  Hosts  Total   ARP   AvgSize  %ARP"]
        for s in summaries:
            lines.append(f"{s.session:>7}  {s.hosts:>5}  {s.total_pkts:>5}  {s.arp_pkts:>4}  "
                         f"{s.avg_arp_size:>7.2f}  {s.pct_arp:>4}")
        for title, rows, factor in (("S-UARP without ACK", self.table2, self.factor_no_ack),
                                    ("S-UARP with ACK", self.table3, self.factor_with_ack)):
            lines += ["", title, "Session  Total   ARP  S-UARP  %ARP  %S-UARP  %SARP"]
            for r in rows:
                lines.append(f"{r.session:>7}  {r.total_pkts:>5}  {r.arp_pkts:>4}  {r.suarp_pkts:>6}  "
                             f"{r.pct_arp:>4}  {r.pct_suarp:>7}  {r.pct_sarp:>5}")
            lines.append(f"Average broadcast packet reduction: {factor:.2f} times")
        lines += ["", f"Blended reduction (half the ACKs piggybacked): {self.factor_blend:.2f} times"]
        return "\n".join(lines) + "\n"


def build_tables(summaries: Sequence[SessionSummary]) -> TableReport:
    t2 = comparison_rows(summaries, with_ack=False)
    t3 = comparison_rows(summaries, with_ack=True)
    f2 = reduction_factor((r.arp_pkts, r.suarp_pkts) for r in t2)
    f3 = reduction_factor((r.arp_pkts, r.suarp_pkts) for r in t3)
    return TableReport(t2, t3, f2, f3, blended_factor(f2, f3))


# -- time-cost model -------------------------------------------------------------

PLAIN, ENCRYPTED = 1, 2

DEFAULT_SCHEDULES: dict[str, tuple[int, ...]] = {
    "S-UARP_1": (1, 2, 2),
    "S-UARP_2": (2, 2, 2),
    "S-UARP_3": (2, 2, 2),
    "DHCP": (1, 1, 1, 1),
    "S-DHCP_1": (1, 2, 2, 2),
    "S-DHCP_2": (2, 2, 2, 2),
    "S-DHCP_3": (2, 2, 2, 2),
}


@dataclass
class CostModel:
    """Steps weigh 1, or 2 when they encrypt or compute a MIC.  The last step of a keyed scheme is its ACK."""

    schedules: dict = field(default_factory=lambda: dict(DEFAULT_SCHEDULES))
    ack_encryption_counted: bool = True

    def __post_init__(self):
        for scheme, steps in self.schedules.items():
            if not steps or any(w not in (PLAIN, ENCRYPTED) for w in steps):
                raise ValueError(f"schedule {scheme} must be a non-empty list of weights 1 or 2")
            self.schedules[scheme] = tuple(steps)

    def schedule(self, scheme: str) -> tuple[int, ...]:
        if scheme not in self.schedules:
            raise UnknownScheme(f"no step schedule for {scheme!r}")
        steps = self.schedules[scheme]
        if not self.ack_encryption_counted and scheme != "DHCP":
            steps = steps[:-1] + (PLAIN,)
        return steps

    @classmethod
    def from_toml(cls, path, ack_encryption_counted: bool = True) -> "CostModel":
        from .scenario import load_toml

        data = load_toml(path)
        return cls({k: tuple(v) for k, v in data["schedules"].items()}, ack_encryption_counted)


def cycle_cost(model: CostModel, scheme: str) -> int:
    return sum(model.schedule(scheme))


def session_cost(summary: SessionSummary, model: CostModel, scheme: str) -> int:
    if scheme == "ARP":
        return summary.arp_pkts * PLAIN
    return summary.arp_reply_pkts * cycle_cost(model, scheme)


def cost_series(summaries: Iterable[SessionSummary], model: CostModel, scheme: str) -> list[int]:
    return [session_cost(s, model, scheme) for s in summaries]


def cost_table(summaries: Sequence[SessionSummary], model: CostModel,
               schemes: Optional[Sequence[str]] = None) -> str:
    """CSV of per-session costs, one column per scheme, for external plotting."""
    schemes = list(schemes or ["ARP", *model.schedules])
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["session", *schemes])
    series = {sc: cost_series(summaries, model, sc) for sc in schemes}
    for i, s in enumerate(summaries):
        w.writerow([s.session, *(series[sc][i] for sc in schemes)])
    return out.getvalue()
