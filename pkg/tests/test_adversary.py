import pytest

from suarpsim.adversary import AttackReport, Attacker, PoisonPlan, PoisoningAgent, SpoofPlan
from suarpsim.errors import ConfigError
from suarpsim.matrix import insider_config, poisoning_config, spoofing_config
from suarpsim.model import mac
from suarpsim.fixtures import SCENARIO_DIR
from suarpsim.scenario import build_scenario, load_scenario

from conftest import NET, legacy_lan


def run(config):
    sc = build_scenario(config)
    sc.run()
    (report,) = sc.reports
    return sc, report


class TestPlans:
    def test_victim_cannot_impersonate_itself(self):
        with pytest.raises(ConfigError):
            PoisonPlan([("10.0.0.1", "10.0.0.1")])

    @pytest.mark.parametrize("kw", [{"cadence": 0}, {"burst": 0}])
    def test_positive_rates(self, kw):
        with pytest.raises(ConfigError):
            PoisonPlan([("10.0.0.1", "10.0.0.2")], **kw)

    def test_spoof_attempts_positive(self):
        with pytest.raises(ConfigError):
            SpoofPlan("02:00:00:00:00:01", attempts=0)

    def test_report_json(self):
        r = AttackReport("poisoning", "legacy", "M", attempts=3, successes=1)
        assert r.success and '"success": true' in r.to_json()
        assert not AttackReport("poisoning", "legacy", "M").success


class TestPoisoning:
    def test_legacy_poisoned(self):
        sc, r = run(poisoning_config("legacy", 1, 10))
        assert r.success
        (pair,) = r.pairs
        assert pair["poisoned"] and pair["dwell_ms"] > 0

    def test_legacy_traffic_intercepted_and_relayed(self):
        sc = load_scenario(SCENARIO_DIR / "poisoning_mitm.toml")
        sc.run()
        (r,) = sc.reports
        assert r.success
        assert r.intercepted > 0 and r.intercepted == r.forwarded
        owner = sc.sim.node_by_ip(r.pairs[0]["impersonated"]).node
        # relayed traffic still reaches the real owner
        assert owner.received

    @pytest.mark.parametrize("stack", ["suarp:Base", "suarp:AltV1", "suarp:AltV2"])
    def test_secure_stacks_block_forged_responses(self, stack):
        sc, r = run(poisoning_config(stack, 2, 500))
        assert r.attempts == 500
        assert r.successes == 0
        victim = sc.hosts["H1"].resolver
        assert all(m == sc.hosts["H2"].mac for _, _, m in victim.cache.history)
        assert victim.stats["ICF:mic"] + victim.stats["ICF:unsolicited"] >= 500 - 10

    def test_empty_victim_list_gives_empty_report(self):
        lan = legacy_lan(2)
        m = Attacker("M")
        lan.sim.attach(m, "lan", "02:00:00:00:00:66", "10.0.0.66", NET)
        m.install(lan.sim, "inject")
        agent = PoisoningAgent(m, PoisonPlan([], rounds=3))
        agent.arm()
        lan.sim.run(until=5000)
        r = agent.report("legacy")
        assert (r.attempts, r.successes, r.pairs) == (0, 0, [])


class TestSpoofing:
    def test_legacy_dhcp_grants_cloned_mac(self):
        sc, r = run(spoofing_config("dhcp", 1, 5))
        assert r.success
        assert r.extra["server_grants"] >= 1
        assert not r.extra["victim_online"]

    @pytest.mark.parametrize("stack", ["sdhcp:Base", "sdhcp:AltV1", "sdhcp:AltV2"])
    def test_keyed_dhcp_refuses_cloned_mac(self, stack):
        sc, r = run(spoofing_config(stack, 1, 200))
        assert r.attempts == 200
        assert r.successes == 0 and r.extra["server_grants"] == 0

    def test_without_dos_both_stations_share_the_mac(self):
        config = spoofing_config("dhcp", 1, 3)
        config["adversaries"][0]["dos_first"] = False
        sc, r = run(config)
        assert r.extra["victim_online"]
        victim, attacker = sc.hosts["V"], sc.hosts["M"]
        assert victim.mac == attacker.mac == mac("02:00:00:00:01:01")
        assert r.extra["victim_frames_received"] > 0


class TestInsider:
    def test_insider_forgeries_rejected(self):
        sc, r = run(insider_config(1, 400))
        assert r.successes == 0
        assert r.extra["session_keys_recovered"] >= 1
        assert r.extra["forged_acks_rejected"] > 0
        assert r.extra["racing_poisoned"] == 0

    def test_genuine_acks_were_suppressed(self):
        sc, r = run(insider_config(2, 40))
        server = sc.servers["S"]["suarp"]
        assert server.stats["acks"] == 0
        assert server.stats["unacknowledged"] == 1
