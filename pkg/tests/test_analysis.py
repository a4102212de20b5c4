import io
import math
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from suarpsim.analysis import (
    CostModel, SessionSummary, blended_factor, build_tables, comparison_rows, cost_series, cost_table,
    cycle_cost, fit_sarp_coefficients, percent, project_sarp, project_suarp, read_summaries, read_table,
    reduction_factor, session_cost, summarize_trace, write_summaries, write_table,
)
from suarpsim.errors import MalformedTrace, UnknownScheme
from suarpsim.fixtures import DATA_DIR
from suarpsim.netsim import TraceLog

import reference_values as ref


def half_up_pct(part, whole):
    """Two-decimal percentage with exact rational arithmetic."""
    cents = math.floor(Fraction(part * 10_000, whole) + Fraction(1, 2))
    return f"{cents // 100}.{cents % 100:02d}"


@pytest.fixture(scope="module")
def summaries():
    return read_summaries(DATA_DIR / "table1.csv")


def test_fixture_matches_published_capture_table(summaries):
    got = [(s.session, s.hosts, s.total_pkts, s.arp_pkts, s.avg_arp_size, f"{s.pct_arp}") for s in summaries]
    assert got == ref.CAPTURES


@given(st.integers(0, 10**6), st.integers(1, 10**6))
def test_percent_rounds_half_up(part, whole):
    assert f"{percent(part, whole)}" == half_up_pct(part, whole)


def test_percent_of_empty_total_is_zero():
    assert percent(5, 0) == Decimal("0.00")


class TestProjections:
    @pytest.mark.parametrize("with_ack, published", [(False, ref.NO_ACK), (True, ref.WITH_ACK)])
    def test_rows_match_published(self, summaries, with_ack, published):
        rows = comparison_rows(summaries, with_ack)
        got = [(r.session, r.total_pkts, r.arp_pkts, r.suarp_pkts, f"{r.pct_arp}", f"{r.pct_suarp}",
                f"{r.pct_sarp}") for r in rows]
        assert got == published

    def test_sarp_fit_is_unique(self, summaries):
        assert fit_sarp_coefficients(summaries, ref.SARP_PCT) == [(1, 6)]

    def test_sarp_projection_matches_published(self, summaries):
        for s, want in zip(summaries, ref.SARP_PCT):
            assert abs(project_sarp(s)[1] - Decimal(want)) <= Decimal("0.01")

    @given(st.integers(1, 10**5), st.integers(0, 10**4), st.integers(0, 10**4), st.integers(1, 50))
    def test_scale_invariance(self, total, arp, replies, k):
        arp, replies = max(arp, replies), min(arp, replies)
        total = max(total, arp)
        s = SessionSummary(1, 10, total, arp, replies)
        big = SessionSummary(1, 10, total * k, arp * k, replies * k)
        for with_ack in (False, True):
            assert project_suarp(big, with_ack)[0] == k * project_suarp(s, with_ack)[0]
            assert abs(project_suarp(big, with_ack)[1] - project_suarp(s, with_ack)[1]) <= Decimal("0.01")

    @given(st.integers(1, 10**4), st.integers(1, 10**4))
    def test_ack_costs_half_again(self, replies, extra):
        s = SessionSummary(1, 1, replies + extra, replies + extra, replies)
        assert 2 * project_suarp(s, True)[0] == 3 * project_suarp(s, False)[0]

    def test_replies_cannot_exceed_arp(self):
        with pytest.raises(ValueError):
            SessionSummary(1, 1, 10, 2, 3)


class TestFactors:
    def test_reduction_factors(self, summaries):
        report = build_tables(summaries)
        assert abs(report.factor_no_ack - ref.FACTOR_NO_ACK) <= ref.FACTOR_TOL
        assert abs(report.factor_with_ack - ref.FACTOR_WITH_ACK) <= ref.FACTOR_TOL
        assert abs(report.factor_blend - ref.FACTOR_BLEND) <= ref.FACTOR_TOL

    def test_factor_is_mean_of_ratios(self):
        assert reduction_factor([(10, 2), (9, 3)]) == pytest.approx(4.0)

    def test_zero_rows_skipped(self, caplog):
        assert reduction_factor([(10, 0), (8, 2)]) == pytest.approx(4.0)
        assert "zero" in caplog.text
        assert reduction_factor([]) == 0.0

    def test_blend_is_midpoint(self):
        assert blended_factor(9.0, 7.0) == 8.0

    def test_render_mentions_each_footer(self, summaries):
        text = build_tables(summaries).render(summaries)
        assert "9.75 times" in text and "6.50 times" in text and "8.13 times" in text


class TestCsv:
    def test_summary_round_trip(self, summaries):
        assert read_summaries(io.StringIO(write_summaries(summaries))) == summaries

    def test_table_round_trip(self, summaries):
        rows = comparison_rows(summaries, False)
        back = read_table(io.StringIO(write_table(rows)))
        assert back == [{k: str(v) for k, v in r.cells().items()} for r in rows]

    def test_missing_column(self):
        with pytest.raises(ValueError):
            read_summaries(io.StringIO("session,hosts\n1,2\n"))

    def test_empty_file(self):
        assert read_summaries(io.StringIO("")) == []


class TestTraceSummary:
    def test_counts_emissions(self):
        t = TraceLog()
        t.record(0, "emit", msg_kind="ArpRequest", size=60)
        t.record(1, "rx", msg_kind="ArpRequest", size=60)
        t.record(1, "emit", msg_kind="ArpReply", size=42)
        t.record(2, "emit", msg_kind="Data", size=100)
        s = summarize_trace(t, 3, 5)
        assert (s.total_pkts, s.arp_pkts, s.arp_reply_pkts, s.avg_arp_size) == (3, 2, 1, 51.0)

    def test_no_arp_means_undefined_size(self):
        t = TraceLog()
        t.record(0, "emit", msg_kind="Data", size=10)
        s = summarize_trace(t)
        assert not s.size_defined and s.avg_arp_size == 0.0

    def test_malformed(self):
        t = TraceLog()
        t.events.append({"t": 0, "kind": "emit", "size": "big"})
        with pytest.raises(MalformedTrace):
            summarize_trace(t)


SCHEMES = ["ARP", "S-UARP_1", "S-UARP_2", "S-UARP_3"]


class TestCostModel:
    @pytest.mark.parametrize("counted", [True, False])
    def test_light_scheme_beats_plain_arp_and_ordering(self, summaries, counted):
        model = CostModel.from_toml(DATA_DIR / "cost_schedules.toml", counted)
        for s in summaries:
            arp, s1, s2, s3 = (session_cost(s, model, sc) for sc in SCHEMES)
            assert s1 < arp
            assert s1 <= s2 <= s3

    def test_ack_exclusion_lowers_keyed_schemes(self):
        with_ack, without = CostModel(), CostModel(ack_encryption_counted=False)
        assert cycle_cost(with_ack, "S-UARP_1") == 5 and cycle_cost(without, "S-UARP_1") == 4
        assert cycle_cost(with_ack, "DHCP") == cycle_cost(without, "DHCP") == 4

    def test_shipped_schedule_equals_builtin_default(self):
        assert CostModel.from_toml(DATA_DIR / "cost_schedules.toml").schedules == CostModel().schedules

    def test_unknown_scheme(self):
        with pytest.raises(UnknownScheme):
            CostModel().schedule("S-UARP_9")

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            CostModel({"X": (1, 3)})

    def test_cost_table(self, summaries):
        text = cost_table(summaries, CostModel())
        lines = text.splitlines()
        assert lines[0].startswith("session,ARP,S-UARP_1")
        assert len(lines) == 11
        assert cost_series(summaries, CostModel(), "ARP")[0] == 1326
