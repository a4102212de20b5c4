"""Golden-file check: regenerate the comparison tables from table1.csv and diff against the shipped copies."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Optional

from .analysis import TABLE_COLUMNS, build_tables, read_summaries, read_table
from .errors import MissingFixture

DATA_DIR = Path(__file__).parent / "data"
SCENARIO_DIR = Path(__file__).parent / "scenarios"
PCT_TOLERANCE = Decimal("0.01")
INTEGER_COLUMNS = ("session", "total_pkts", "arp_pkts", "suarp_pkts")


@dataclass
class FixtureReport:
    checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def render(self) -> str:
        if self.ok:
            return f"fixtures OK ({self.checked} cells)\n"
        return "".join(f"MISMATCH {m}\n" for m in self.mismatches) + \
            f"{len(self.mismatches)} of {self.checked} cells differ\n"


def _fixture(data_dir: Path, name: str) -> Path:
    path = data_dir / name
    if not path.is_file():
        raise MissingFixture(f"fixture {path} not found")
    return path


def _compare(report: FixtureReport, table: str, computed: list[dict], expected: list[dict]) -> None:
    if len(computed) != len(expected):
        report.mismatches.append(f"{table}: {len(computed)} computed rows vs {len(expected)} expected")
    for got, want in zip(computed, expected):
        for col in TABLE_COLUMNS:
            report.checked += 1
            where = f"{table} session {want.get('session')} column {col}"
            if col not in want:
                report.mismatches.append(f"{where}: missing from expected file")
                continue
            try:
                g, w = Decimal(str(got[col])), Decimal(want[col])
            except ArithmeticError:
                report.mismatches.append(f"{where}: unreadable value {want[col]!r}")
                continue
            if col in INTEGER_COLUMNS:
                if g != w:
                    report.mismatches.append(f"{where}: computed {g}, expected {w}")
            elif abs(g - w) > PCT_TOLERANCE:
                report.mismatches.append(f"{where}: computed {g}, expected {w}")


def verify_fixtures(data_dir: Optional[Path] = None) -> FixtureReport:
    data_dir = Path(data_dir) if data_dir is not None else DATA_DIR
    summaries = read_summaries(_fixture(data_dir, "table1.csv"))
    if not summaries:
        raise MissingFixture(f"{data_dir / 'table1.csv'} has no session rows")
    tables = build_tables(summaries)
    report = FixtureReport()
    for name, rows in (("expected_table2.csv", tables.table2), ("expected_table3.csv", tables.table3)):
        expected = read_table(_fixture(data_dir, name))
        _compare(report, name, [r.cells() for r in rows], expected)
    return report
