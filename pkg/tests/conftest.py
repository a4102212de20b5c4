import pytest

from suarpsim.crypto import KeyStore, provision_pair
from suarpsim.legacy import LegacyArp
from suarpsim.model import TimerConfig
from suarpsim.netsim import Host, LossModel, Simulator
from suarpsim.suarp import SuarpClient, SuarpServer

SERVER_MAC = "02:00:00:00:00:fe"
SERVER_IP = "10.0.0.254"
NET = "10.0.0.0/24"


def host_mac(i):
    return f"02:00:00:00:{i >> 8:02x}:{i & 0xFF:02x}"


def host_ip(i):
    return f"10.0.0.{i}"


class Lan:
    """One segment; hosts are numbered from 1.  Built but not started."""

    def __init__(self, sim, hosts, server=None, server_store=None):
        self.sim = sim
        self.hosts = hosts
        self.server = server
        self.server_store = server_store

    def __getitem__(self, i):
        return self.hosts[i - 1]

    def client(self, i):
        return self[i].resolver


def legacy_lan(n, seed=1, timers=None, loss=None):
    sim = Simulator(seed=seed, timers=timers, loss=loss)
    sim.add_segment("lan")
    hosts = []
    for i in range(1, n + 1):
        h = Host(f"H{i}")
        sim.attach(h, "lan", host_mac(i), host_ip(i), NET)
        h.add_service(LegacyArp())
        hosts.append(h)
    return Lan(sim, hosts)


def suarp_lan(n, variant="AltV1", seed=1, timers=None, loss=None, **client_kw):
    sim = Simulator(seed=seed, timers=timers, loss=loss)
    sim.add_segment("lan")
    srv = Host("S")
    sim.attach(srv, "lan", SERVER_MAC, SERVER_IP, NET)
    store = KeyStore()
    hosts = []
    for i in range(1, n + 1):
        h = Host(f"H{i}")
        sim.attach(h, "lan", host_mac(i), host_ip(i), NET)
        hs = KeyStore()
        provision_pair(hs, store, h.mac, SERVER_IP, sim.rng)
        h.add_service(SuarpClient(variant, SERVER_IP, SERVER_MAC, hs, **client_kw))
        hosts.append(h)
    server = srv.add_service(SuarpServer(variant, store, {str(h.ip): h.mac for h in hosts}))
    return Lan(sim, hosts, server, store)


@pytest.fixture
def lossless_timers():
    return TimerConfig()


def drop_rule(pred):
    return LossModel(rule=pred)
