import random

import pytest
from hypothesis import given, settings, strategies as st

from suarpsim.crypto import (
    BLOCK_SIZE, DIGEST_SIZE, KeyStore, SessionKey, SharedKey, cbc_encrypt_blocks, cbc_residue_mic,
    decrypt_payload, derive_nrn, encrypt_payload, keyed_hash_mic, mics_equal, new_nonce, pad, provision_pair,
    unpad, xor_mask,
)
from suarpsim.errors import DecryptFailure, LengthMismatch, UnknownAssociation
from suarpsim.model import MicScheme, mac

HOST = mac("02:00:00:00:00:01")
KEY = SharedKey(HOST, "10.0.0.254", bytes(range(24)))
OTHER = SharedKey(HOST, "10.0.0.254", bytes(range(1, 25)))

messages = st.binary(min_size=1, max_size=200)


def flip(data: bytes, bit: int) -> bytes:
    b = bytearray(data)
    b[bit // 8] ^= 1 << (bit % 8)
    return bytes(b)


class TestCbcResidue:
    def test_matches_full_cbc_pass(self):
        # independent oracle: last block of the library's own CBC mode, zero IV
        from cryptography.hazmat.decrepit.ciphers.algorithms import TripleDES
        from cryptography.hazmat.primitives.ciphers import Cipher, modes

        msg = b"resolution response body, not block aligned"
        padded = msg + b"\x00" * (-len(msg) % 8)
        enc = Cipher(TripleDES(KEY.secret), modes.CBC(b"\x00" * 8)).encryptor()
        expected = (enc.update(padded) + enc.finalize())[-8:]
        assert cbc_residue_mic(KEY, msg).digest == expected

    @given(messages)
    def test_deterministic(self, msg):
        assert cbc_residue_mic(KEY, msg) == cbc_residue_mic(KEY, msg)
        assert cbc_residue_mic(KEY, msg).scheme == MicScheme.CBC_RESIDUE
        assert len(cbc_residue_mic(KEY, msg).digest) == BLOCK_SIZE

    def test_one_bit_avalanche(self):
        rng = random.Random(6)
        rejected = 0
        for _ in range(1000):
            msg = rng.randbytes(rng.randint(1, 64))
            mutated = flip(msg, rng.randrange(len(msg) * 8))
            rejected += not mics_equal(cbc_residue_mic(KEY, msg), cbc_residue_mic(KEY, mutated))
        assert rejected == 1000

    def test_key_matters(self):
        assert cbc_residue_mic(KEY, b"x") != cbc_residue_mic(OTHER, b"x")

    def test_empty_message_refused(self):
        with pytest.raises(ValueError):
            cbc_residue_mic(KEY, b"")

    def test_cbc_rejects_misaligned(self):
        with pytest.raises(ValueError):
            cbc_encrypt_blocks(KEY.cipher, b"abc", b"\x00" * 8)


class TestKeyedHash:
    def test_matches_sha1_oracle(self):
        import hashlib
        import struct

        lp = lambda b: struct.pack(">I", len(b)) + b  # noqa: E731
        nonce = bytes(16)
        expected = hashlib.sha1(lp(KEY.secret) + b"\x01" + lp(nonce) + struct.pack(">I", 2)
                                + lp(b"a") + lp(b"bc")).digest()
        assert keyed_hash_mic(KEY, nonce, [b"a", b"bc"]).digest == expected

    @given(messages, st.none() | st.binary(min_size=16, max_size=16))
    def test_deterministic(self, msg, nonce):
        a = keyed_hash_mic(KEY, nonce, [msg])
        assert a == keyed_hash_mic(KEY, nonce, [msg])
        assert len(a.digest) == DIGEST_SIZE

    def test_one_bit_avalanche(self):
        rng = random.Random(7)
        rejected = 0
        for _ in range(1000):
            msg = rng.randbytes(rng.randint(1, 64))
            nonce = rng.randbytes(16)
            mutated = flip(msg, rng.randrange(len(msg) * 8))
            rejected += not mics_equal(keyed_hash_mic(KEY, nonce, [msg]), keyed_hash_mic(KEY, nonce, [mutated]))
        assert rejected == 1000

    def test_part_boundaries_matter(self):
        assert keyed_hash_mic(KEY, None, [b"ab", b"c"]) != keyed_hash_mic(KEY, None, [b"a", b"bc"])

    def test_nonce_presence_matters(self):
        assert keyed_hash_mic(KEY, None, [b"m"]) != keyed_hash_mic(KEY, b"", [b"m"])


class TestXorMask:
    @given(st.binary(min_size=20, max_size=20), st.binary(min_size=20, max_size=20))
    def test_involution(self, sk, mic):
        assert xor_mask(xor_mask(sk, mic), mic) == sk

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            xor_mask(bytes(20), bytes(8))

    def test_session_key_length(self):
        with pytest.raises(LengthMismatch):
            SessionKey(bytes(8))
        assert len(SessionKey.generate(random.Random(1)).secret) == DIGEST_SIZE


class TestSealing:
    def test_thousand_round_trips(self):
        rng = random.Random(8)
        for _ in range(1000):
            payload = rng.randbytes(rng.randint(0, 100))
            assert decrypt_payload(KEY, encrypt_payload(KEY, payload, rng)) == payload

    @given(st.binary(max_size=64))
    def test_pad_round_trip(self, data):
        padded = pad(data)
        assert len(padded) % BLOCK_SIZE == 0
        assert unpad(padded) == data

    def test_wrong_key_fails_or_garbles(self):
        rng = random.Random(9)
        failures = 0
        for _ in range(200):
            payload = rng.randbytes(24)
            try:
                failures += decrypt_payload(OTHER, encrypt_payload(KEY, payload, rng)) != payload
            except DecryptFailure:
                failures += 1
        assert failures == 200

    def test_short_ciphertext(self):
        with pytest.raises(DecryptFailure):
            decrypt_payload(KEY, bytes(8))

    def test_fresh_iv_each_time(self):
        rng = random.Random(3)
        assert encrypt_payload(KEY, b"same", rng) != encrypt_payload(KEY, b"same", rng)


class TestKeyStore:
    def test_provision_pair_matches(self):
        rng = random.Random(1)
        hs, ss = KeyStore(), KeyStore()
        key = provision_pair(hs, ss, HOST, "srv", rng)
        assoc = (HOST, "srv")
        assert hs.entry(assoc).snapshot() == ss.entry(assoc).snapshot()
        assert hs.entry(assoc).shared_key == key

    def test_unknown_association(self):
        with pytest.raises(UnknownAssociation):
            KeyStore().entry((HOST, "srv"))

    def test_commit_keeps_previous(self):
        store = KeyStore()
        store.provision(KEY, bytes(16))
        assoc = (KEY.host, KEY.server)
        nrn = new_nonce(random.Random(2))
        store.commit_rn(assoc, nrn)
        entry = store.entry(assoc)
        assert (entry.current_rn, entry.previous_rn) == (nrn, bytes(16))
        store.commit_rn(assoc, nrn)
        assert entry.previous_rn == bytes(16)

    def test_nonce_length(self):
        with pytest.raises(LengthMismatch):
            KeyStore().provision(KEY, b"short")

    def test_derive_nrn_agrees_on_both_ends(self):
        rng = random.Random(4)
        hs, ss = KeyStore(), KeyStore()
        provision_pair(hs, ss, HOST, "srv", rng)
        assoc = (HOST, "srv")
        a = derive_nrn(hs, assoc, b"transcript", commit=True)
        b = derive_nrn(ss, assoc, b"transcript", commit=True)
        assert a == b and len(a) == 16
        assert hs.entry(assoc).current_rn == a

    @settings(max_examples=50)
    @given(st.binary(min_size=24, max_size=24))
    def test_shared_key_length(self, secret):
        assert SharedKey(HOST, "s", secret).secret == secret
        with pytest.raises(ValueError):
            SharedKey(HOST, "s", secret[:-1])
