from ipaddress import IPv4Address

import pytest
from hypothesis import given, settings, strategies as st

from suarpsim.errors import LeaseExpired, NakReceived, NoOffer, Timeout
from suarpsim.legacy import (
    DhcpClient, DhcpConfig, DhcpServer, LeaseState, ResolutionCache, ServerMode, check_lease_uniqueness,
    lease_renew,
)
from suarpsim.model import ArpReply, BROADCAST_MAC, Message, RegistrationAdvert, TimerConfig, mac
from suarpsim.netsim import Host, Simulator

from conftest import NET, SERVER_IP, SERVER_MAC, host_ip, host_mac, legacy_lan


class TestCache:
    def test_ttl_is_exclusive(self):
        c = ResolutionCache(ttl=100)
        c.insert(IPv4Address("10.0.0.1"), mac("02:00:00:00:00:01"), 0)
        assert c.lookup(IPv4Address("10.0.0.1"), 99) is not None
        assert c.lookup(IPv4Address("10.0.0.1"), 100) is None

    @given(st.integers(1, 10_000), st.integers(0, 10_000), st.integers(0, 20_000))
    def test_served_iff_younger_than_ttl(self, ttl, inserted, age):
        c = ResolutionCache(ttl)
        addr = IPv4Address("10.0.0.7")
        c.insert(addr, mac("02:00:00:00:00:07"), inserted)
        assert (c.lookup(addr, inserted + age) is not None) == (age < ttl)

    def test_history_keeps_overwrites(self):
        c = ResolutionCache(10)
        a = IPv4Address("10.0.0.1")
        c.insert(a, mac("02:00:00:00:00:01"), 0)
        c.insert(a, mac("02:00:00:00:00:02"), 1)
        assert len(c) == 1 and len(c.history) == 2


class TestArp:
    def test_request_reply_is_two_frames(self):
        lan = legacy_lan(3)
        lan.sim.start()
        p = lan.client(1).resolve(lan[2].ip)
        lan.sim.run()
        assert p.value().mac == lan[2].mac
        kinds = [e["msg_kind"] for e in lan.sim.trace.emissions()]
        assert kinds == ["ArpRequest", "ArpReply"]

    def test_second_lookup_served_from_cache(self):
        lan = legacy_lan(2)
        lan.sim.start()
        lan.client(1).resolve(lan[2].ip)
        lan.sim.run()
        p = lan.client(1).resolve(lan[2].ip)
        assert p.value().from_cache
        assert len(lan.sim.trace.emissions()) == 2

    def test_reresolves_after_ttl(self):
        lan = legacy_lan(2, timers=TimerConfig(t4=1000))
        lan.sim.start()
        lan.client(1).resolve(lan[2].ip)
        lan.sim.run()
        lan.sim.run(until=lan.sim.now + 1000)
        assert not lan.client(1).resolve(lan[2].ip).done

    def test_retries_then_timeout(self):
        lan = legacy_lan(1)
        lan.sim.start()
        p = lan.client(1).resolve("10.0.0.99")
        lan.sim.run()
        with pytest.raises(Timeout):
            p.value()
        emits = lan.sim.trace.emissions()
        assert len(emits) == 4
        assert [e["t"] for e in emits] == [0, 500, 1000, 1500]

    def test_concurrent_lookups_share_one_request(self):
        lan = legacy_lan(2)
        lan.sim.start()
        a = lan.client(1).resolve(lan[2].ip)
        b = lan.client(1).resolve(lan[2].ip)
        lan.sim.run()
        assert a.value().mac == b.value().mac
        assert len(lan.sim.trace.emissions(["ArpRequest"])) == 1

    def test_unsolicited_reply_is_believed(self):
        # the weakness poisoning exploits
        lan = legacy_lan(3)
        lan.sim.start()
        forged = ArpReply(lan[2].ip, lan[3].mac, lan[1].ip, lan[1].mac)
        lan[3].send(lan[1].mac, Message.of(forged))
        lan.sim.run()
        assert lan.client(1).cache.lookup(lan[2].ip, lan.sim.now) == lan[3].mac

    def test_gratuitous_learning_from_requests(self):
        lan = legacy_lan(3)
        lan.sim.start()
        lan.client(1).resolve(lan[2].ip)
        lan.sim.run()
        assert lan[1].ip in lan.client(3).cache


def dhcp_lan(n_clients, pool_size=5, config=None, clients_config=None):
    sim = Simulator(seed=2)
    sim.add_segment("lan")
    srv = Host("S")
    sim.attach(srv, "lan", SERVER_MAC, SERVER_IP, NET)
    server = srv.add_service(DhcpServer([f"10.0.0.{100 + i}" for i in range(pool_size)], config))
    clients = []
    for i in range(1, n_clients + 1):
        h = Host(f"C{i}")
        sim.attach(h, "lan", host_mac(i))
        clients.append(h.add_service(DhcpClient(clients_config or config)))
    sim.start()
    return sim, server, clients


class TestDhcp:
    def test_dora(self):
        sim, server, (c,) = dhcp_lan(1)
        p = c.acquire()
        sim.run(until=100)
        lease = p.value()
        assert lease.ip == IPv4Address("10.0.0.100")
        assert [k for _, k in c.messages] == ["DhcpDiscover", "DhcpOffer", "DhcpRequest", "DhcpAck"]
        assert c.host.ip == lease.ip
        assert server.mapping_table() == {lease.ip: c.host.mac}

    def test_distinct_addresses(self):
        sim, server, clients = dhcp_lan(4)
        ps = [c.acquire() for c in clients]
        sim.run()
        ips = [p.value().ip for p in ps]
        assert len(set(ips)) == 4

    def test_nak_on_exhaustion(self):
        sim, server, clients = dhcp_lan(3, pool_size=2)
        ps = [c.acquire() for c in clients]
        sim.run()
        outcomes = []
        for p in ps:
            try:
                p.value()
                outcomes.append("ok")
            except NakReceived:
                outcomes.append("nak")
        assert sorted(outcomes) == ["nak", "ok", "ok"]

    def test_no_server_times_out(self):
        sim = Simulator()
        sim.add_segment("lan")
        h = Host("C")
        sim.attach(h, "lan", host_mac(1))
        c = h.add_service(DhcpClient(DhcpConfig(retries=1)))
        p = c.acquire()
        sim.run()
        with pytest.raises(NoOffer):
            p.value()
        assert len(sim.trace.emissions(["DhcpDiscover"])) == 2

    def test_lease_states_over_time(self):
        cfg = DhcpConfig(lease_duration=5000)
        sim, server, (c,) = dhcp_lan(1, config=cfg)
        p = c.acquire()
        sim.run()
        lease = p.value()
        assert c.lease_state() == LeaseState.BOUND
        assert lease.state_at(lease.expires_at - 1) == LeaseState.BOUND
        assert lease.state_at(lease.expires_at) == LeaseState.EXPIRED
        sim.run(until=lease.expires_at)
        assert server.mapping_table() == {}

    def test_renew_extends(self):
        cfg = DhcpConfig(lease_duration=5000)
        sim, server, (c,) = dhcp_lan(1, config=cfg)
        c.acquire()
        sim.run(until=4000)
        p = c.renew()
        sim.run(until=4100)
        assert p.value().expires_at > 5000
        assert server.bound_leases()[0].ip == p.value().ip

    def test_renew_after_expiry_refused(self):
        cfg = DhcpConfig(lease_duration=1000)
        sim, server, (c,) = dhcp_lan(1, config=cfg)
        c.acquire()
        sim.run(until=2000)
        with pytest.raises(LeaseExpired):
            c.renew()
        with pytest.raises(LeaseExpired):
            lease_renew(c, c.lease, now=2000)

    def test_offer_reclaimed_after_hold(self):
        cfg = DhcpConfig(offer_hold=100)
        sim, server, (c,) = dhcp_lan(1, config=cfg)
        server._reserve(mac("02:aa:00:00:00:01"), 1, 0)
        assert IPv4Address("10.0.0.100") in server.leases
        sim.run(until=100)
        assert server.leases[IPv4Address("10.0.0.100")].state == LeaseState.EXPIRED

    def test_passive_after_secure_announcement(self):
        sim, server, (c,) = dhcp_lan(1, clients_config=DhcpConfig(retries=0))
        advert = RegistrationAdvert(IPv4Address("10.0.0.253"), mac("02:00:00:00:00:fd"), 0, from_server=True)
        c.host.send(BROADCAST_MAC, Message.of(advert))
        sim.run()
        assert server.mode == ServerMode.PASSIVE
        p = c.acquire()
        sim.run()
        with pytest.raises(NoOffer):
            p.value()

    def test_unpatched_server_stays_active(self):
        sim, server, (c,) = dhcp_lan(1)
        server.patched = False
        advert = RegistrationAdvert(IPv4Address("10.0.0.253"), mac("02:00:00:00:00:fd"), 0, from_server=True)
        c.host.send(BROADCAST_MAC, Message.of(advert))
        sim.run()
        assert server.mode == ServerMode.ACTIVE

    def test_decline_quarantines(self):
        sim, server, (c,) = dhcp_lan(1)
        c.reject_ips = {IPv4Address("10.0.0.100")}
        p = c.acquire()
        sim.run()
        assert p.value().ip == IPv4Address("10.0.0.101")
        assert IPv4Address("10.0.0.100") in server.quarantined

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 1000))
    def test_no_address_bound_twice(self, n_clients, pool, seed):
        sim, server, clients = dhcp_lan(n_clients, pool_size=pool,
                                        config=DhcpConfig(lease_duration=3000, retries=0))
        sim.invariants.append(check_lease_uniqueness)
        for i, c in enumerate(clients):
            sim.schedule((seed * (i + 1)) % 50, c.acquire)
        sim.run(until=10_000)
        bound = server.bound_leases(2000)
        assert len({l.ip for l in bound}) == len(bound) <= pool
