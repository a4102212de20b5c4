import copy
import json

import pytest

from suarpsim.errors import ConfigError
from suarpsim.fixtures import SCENARIO_DIR
from suarpsim.scenario import REPORT_COLUMNS, build_scenario, load_scenario, load_toml

SHIPPED = sorted(SCENARIO_DIR.glob("*.toml"))

BASE = {
    "scenario": {"name": "t", "seed": 4, "duration": 3000},
    "segments": [{"name": "lan1", "network": "10.0.1.0/24"}],
    "hosts": [{"name": "H", "count": 3, "segment": "lan1"}],
    "traffic": [{"action": "ping", "from": "H1", "to": "H2", "at": 10}],
}


def config(**changes):
    c = copy.deepcopy(BASE)
    for k, v in changes.items():
        c[k] = v
    return c


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_shipped_scenario_runs(path):
    sc = load_scenario(path).run()
    m = sc.metrics()
    led = m["ledger"]
    assert led["emitted"] > 0
    assert led["emitted"] == led["delivered"] + led.get("dropped_loss", 0) + led.get("dropped_boundary", 0)
    assert m["scenario"] == path.stem


def test_shipped_outcomes():
    sc = load_scenario(SCENARIO_DIR / "static_registration.toml").run()
    regs = [h["registrations"] for h in sc.metrics()["hosts"].values() if "registrations" in h]
    assert regs and regs[0]
    sc = load_scenario(SCENARIO_DIR / "suarp_resolution.toml").run()
    assert not sc.reports[0].success
    assert "ArpRequest" not in sc.metrics()["frames_by_kind"]


def test_count_expands_names_and_addresses():
    sc = build_scenario(config())
    assert sorted(sc.hosts) == ["H1", "H2", "H3"]
    assert [str(sc.hosts[f"H{i}"].ip) for i in (1, 2, 3)] == ["10.0.1.1", "10.0.1.2", "10.0.1.3"]
    assert len({h.mac for h in sc.hosts.values()}) == 3


def test_glob_sources_and_targets_stay_distinct():
    c = config(traffic=[{"action": "data", "from": "H*", "to": "H[12]", "at": 10, "every": 5, "count": 40}])
    sc = build_scenario(c).run()
    data = [e for e in sc.sim.trace.emissions() if e["msg_kind"] == "Data"]
    assert len(data) == 40
    assert all(e["src"] != e["dst"] for e in data)


def test_seed_override_changes_run():
    c = config(traffic=[{"action": "data", "from": "H*", "to": "H*", "at": 10, "every": 5, "count": 30}])
    a = build_scenario(c).run().sim.trace.to_jsonl()
    b = build_scenario(c).run().sim.trace.to_jsonl()
    other = build_scenario(c, seed=99).run().sim.trace.to_jsonl()
    assert a == b and a != other


def test_runs_once():
    sc = build_scenario(config()).run()
    with pytest.raises(ConfigError):
        sc.run()


def test_write_outputs(tmp_path):
    sc = load_scenario(SCENARIO_DIR / "poisoning_mitm.toml").run()
    written = {p.name for p in sc.write_outputs(tmp_path)}
    assert written == {"trace.jsonl", "metrics.json", "report.csv", "attack_report.json"}
    header = (tmp_path / "report.csv").read_text().splitlines()[0].split(",")
    assert tuple(header) == REPORT_COLUMNS
    assert json.loads((tmp_path / "attack_report.json").read_text())[0]["attack"] == "poisoning"


BAD = [
    {"segments": []},
    {"segments": [{"name": "lan1", "network": "not-a-net"}]},
    {"hosts": [{"name": "H", "segment": "nowhere"}]},
    {"hosts": [{"segment": "lan1"}]},
    {"hosts": [{"name": "H", "count": 2, "segment": "lan1", "ip": "10.0.1.9"}]},
    {"hosts": [{"name": "A", "segment": "lan1", "ip": "10.0.1.9"}, {"name": "B", "segment": "lan1", "ip": "10.0.1.9"}]},
    {"hosts": [{"name": "H", "segment": "lan1", "role": "oracle"}]},
    {"hosts": [{"name": "H", "segment": "lan1", "ip": "10.0.1.5", "stack": "suarp:AltV9"}]},
    {"hosts": [{"name": "H", "segment": "lan1", "ip": "10.0.1.5", "stack": "suarp:AltV1", "key": "none"}]},
    {"traffic": [{"action": "teleport", "from": "H1"}]},
    {"traffic": [{"action": "ping", "to": "H1"}]},
    {"timers": {"t2": 1000, "t3": 500}},
    {"timers": {"t7": 1}},
    {"adversaries": [{"name": "M", "segment": "lan1", "attack": "telepathy"}]},
    {"adversaries": [{"name": "M", "segment": "lan1", "attack": "poisoning", "victims": [["Z9", "H1"]]}]},
]


@pytest.mark.parametrize("change", BAD)
def test_invalid_config_rejected(change):
    with pytest.raises(ConfigError):
        build_scenario(config(**change)).run()


def test_unknown_traffic_host():
    with pytest.raises(ConfigError):
        build_scenario(config(traffic=[{"action": "ping", "from": "Q*", "to": "H1"}])).run()


def test_bad_toml(tmp_path):
    p = tmp_path / "x.toml"
    p.write_text("[scenario\n")
    with pytest.raises(ConfigError):
        load_toml(p)


def test_auto_addresses_skip_router_interfaces():
    c = config(routers=[{"name": "R1", "attach": [{"segment": "lan1", "mac": "02:00:00:00:0a:01",
                                                    "ip": "10.0.1.1"}]}])
    sc = build_scenario(c)
    assert [str(sc.hosts[f"H{i}"].ip) for i in (1, 2, 3)] == ["10.0.1.2", "10.0.1.3", "10.0.1.4"]
    with pytest.raises(ConfigError):
        build_scenario(config(routers=c["routers"],
                              hosts=[{"name": "A", "segment": "lan1", "ip": "10.0.1.1"}]))
