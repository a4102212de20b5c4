from ipaddress import IPv4Address

import pytest
from hypothesis import given, strategies as st

from suarpsim.errors import ConfigError, MalformedMessage
from suarpsim.model import (
    BROADCAST_MAC, LINK_HEADER_BYTES, ZERO_MAC, ArpReply, ArpRequest, Data, DhcpAck, DhcpDiscover, DhcpOffer,
    DhcpRequest, Frame, MacAddress, Message, MessageKind, Mic, MicScheme, RegistrationAdvert, SuarpAck, SuarpReq,
    SuarpRes, TimerConfig, mac, parse_body, parse_message, serialize_body, serialize_message,
)

ips = st.integers(0, 2**32 - 1).map(IPv4Address)
macs = st.binary(min_size=6, max_size=6).map(MacAddress)
times = st.integers(0, 2**40)
nonces = st.none() | st.binary(min_size=16, max_size=16)

bodies = st.one_of(
    st.builds(ArpRequest, ips, macs, ips),
    st.builds(ArpReply, ips, macs, ips, macs),
    st.builds(SuarpReq, ips, macs, ips),
    st.builds(SuarpRes, ips, macs, ips, macs, times),
    st.builds(SuarpAck, ips, times, times, nonces),
    st.builds(DhcpDiscover, st.integers(0, 2**32 - 1), macs, times),
    st.builds(DhcpOffer, st.integers(0, 2**32 - 1), macs, ips, times, ips, times),
    st.builds(DhcpRequest, st.integers(0, 2**32 - 1), macs, ips, ips, times, st.booleans()),
    st.builds(DhcpAck, st.integers(0, 2**32 - 1), macs, ips, times, ips, times, nonces),
    st.builds(RegistrationAdvert, ips, macs, times, st.booleans()),
    st.builds(Data, ips, ips, st.integers(0, 2**32), st.sampled_from([0, 1, 2]), st.binary(max_size=64)),
)
mics = st.builds(Mic, st.binary(min_size=1, max_size=32), st.sampled_from(list(MicScheme)))


@st.composite
def messages(draw, depth=1):
    body = draw(bodies)
    kw = {"mics": draw(st.lists(mics, max_size=3)), "masked": draw(st.lists(st.binary(max_size=40), max_size=2))}
    if draw(st.booleans()):
        msg = Message(body.KIND, sealed=draw(st.binary(min_size=1, max_size=48)), **kw)
    else:
        msg = Message.of(body, **kw)
    if depth and draw(st.booleans()):
        msg = msg.with_piggyback(draw(messages(depth=0)))
    return msg


@given(bodies)
def test_body_round_trip(body):
    assert parse_body(serialize_body(body)) == body


@given(messages())
def test_message_round_trip(msg):
    assert parse_message(serialize_message(msg)) == msg


@given(messages(), st.data())
def test_truncated_messages_are_rejected(msg, data):
    raw = serialize_message(msg)
    cut = data.draw(st.integers(0, len(raw) - 1))
    with pytest.raises(MalformedMessage):
        parse_message(raw[:cut])


@given(messages())
def test_trailing_bytes_are_rejected(msg):
    with pytest.raises(MalformedMessage):
        parse_message(serialize_message(msg) + b"\x00")


def test_unknown_kind_tag():
    with pytest.raises(MalformedMessage):
        parse_body(b"\x7f")


def test_frame_size_counts_header():
    msg = Message.of(ArpRequest(IPv4Address("10.0.0.1"), mac("02:00:00:00:00:01"), IPv4Address("10.0.0.2")))
    frame = Frame(mac("02:00:00:00:00:01"), BROADCAST_MAC, msg)
    assert frame.wire_size == len(serialize_message(msg)) + LINK_HEADER_BYTES
    assert frame.is_broadcast


def test_mac_parsing():
    assert str(mac("02:00:00:AA:bb:01")) == "02:00:00:aa:bb:01"
    assert mac(mac("02:00:00:00:00:01")) == mac("02:00:00:00:00:01")
    assert mac("ff:ff:ff:ff:ff:ff").is_broadcast
    assert not ZERO_MAC.is_broadcast
    with pytest.raises(ValueError):
        mac("02:00:00")


def test_message_needs_body_or_sealed():
    with pytest.raises(ValueError):
        Message(MessageKind.ARP_REQUEST)
    with pytest.raises(ValueError):
        Message.of(SuarpReq(IPv4Address("10.0.0.1"), ZERO_MAC, IPv4Address("10.0.0.2"))).__class__(
            MessageKind.SUARP_RES, SuarpReq(IPv4Address("10.0.0.1"), ZERO_MAC, IPv4Address("10.0.0.2")))


def test_negative_response_flag():
    res = SuarpRes(IPv4Address("10.0.0.1"), mac("02:00:00:00:00:01"), IPv4Address("10.0.0.9"), ZERO_MAC, 5)
    assert res.is_negative


class TestTimers:
    def test_defaults(self):
        t = TimerConfig()
        assert (t.t1, t.t2, t.t3, t.t4, t.delta_t) == (500, 200, 1000, 300_000, 300)

    def test_t3_must_exceed_t2(self):
        with pytest.raises(ConfigError):
            TimerConfig(t2=500, t3=500)
        with pytest.raises(ConfigError):
            TimerConfig(t2=600, t3=500)
        TimerConfig(t2=499, t3=500)

    @pytest.mark.parametrize("name", ["t1", "t2", "t3", "t4", "delta_t"])
    def test_positive(self, name):
        with pytest.raises(ConfigError):
            TimerConfig(**{name: 0})
