"""MIC constructions, payload sealing and the per-agent key/nonce store.

Three integrity constructions are provided:

* :func:`cbc_residue_mic` - last ciphertext block of a zero-IV CBC pass of a
  64-bit block cipher over the message;
* :func:`keyed_hash_mic` - SHA-1 over the length-prefixed concatenation of
  key, optional nonce and message parts;
* :func:`xor_mask` - byte-wise XOR used to transport a session key hidden
  under a MIC value.

The block cipher sits behind :class:`BlockCipher`; the default is
Triple-DES from ``cryptography``, a 64-bit block cipher of the DES family.
"""

from __future__ import annotations

import functools
import hashlib
import hmac
import os
import random
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Union

from cryptography.hazmat.decrepit.ciphers.algorithms import TripleDES
from cryptography.hazmat.primitives.ciphers import Cipher, modes

from .errors import DecryptFailure, LengthMismatch, UnknownAssociation
from .model import MacAddress, Mic, MicScheme

BLOCK_SIZE = 8
DIGEST_SIZE = 20
NONCE_SIZE = 16
KEY_SIZE = 24

Nonce = bytes
Association = tuple  # (host MacAddress, server id string)


class BlockCipher(Protocol):
    block_size: int

    def encrypt_block(self, block: bytes) -> bytes: ...

    def decrypt_block(self, block: bytes) -> bytes: ...


class TripleDesCipher:
    block_size = BLOCK_SIZE

    def __init__(self, key: bytes):
        if len(key) != KEY_SIZE:
            raise ValueError(f"Triple-DES key must be {KEY_SIZE} bytes")
        cipher = Cipher(TripleDES(key), modes.ECB())
        self._enc = cipher.encryptor()
        self._dec = cipher.decryptor()

    def encrypt_block(self, block: bytes) -> bytes:
        return self._enc.update(block)

    def decrypt_block(self, block: bytes) -> bytes:
        return self._dec.update(block)


@functools.lru_cache(maxsize=4096)
def default_cipher(key: bytes) -> BlockCipher:
    return TripleDesCipher(key)


def _rand_bytes(n: int, rng: Optional[random.Random]) -> bytes:
    return os.urandom(n) if rng is None else rng.randbytes(n)


@dataclass(frozen=True)
class SharedKey:
    """K_SA: the secret shared by one host and one server."""

    host: MacAddress
    server: str
    secret: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.secret) != KEY_SIZE:
            raise ValueError(f"shared key material must be {KEY_SIZE} bytes")

    @property
    def cipher(self) -> BlockCipher:
        return default_cipher(self.secret)

    @classmethod
    def generate(cls, host: MacAddress, server: str, rng: Optional[random.Random] = None) -> "SharedKey":
        return cls(host, server, _rand_bytes(KEY_SIZE, rng))


@dataclass(frozen=True)
class SessionKey:
    secret: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.secret) != DIGEST_SIZE:
            raise LengthMismatch(f"session key must be {DIGEST_SIZE} bytes (the MIC length)")

    @classmethod
    def generate(cls, rng: Optional[random.Random] = None) -> "SessionKey":
        return cls(_rand_bytes(DIGEST_SIZE, rng))


def new_nonce(rng: Optional[random.Random] = None) -> Nonce:
    return _rand_bytes(NONCE_SIZE, rng)


KeyMaterial = Union[SharedKey, SessionKey, bytes]


def _material(key: KeyMaterial) -> bytes:
    if isinstance(key, (SharedKey, SessionKey)):
        return key.secret
    return bytes(key)


def _as_digest(mic: Union[Mic, bytes]) -> bytes:
    return mic.digest if isinstance(mic, Mic) else bytes(mic)


def mics_equal(a: Union[Mic, bytes], b: Union[Mic, bytes]) -> bool:
    return hmac.compare_digest(_as_digest(a), _as_digest(b))


# -- CBC residue -------------------------------------------------------------


def zero_pad(message: bytes) -> bytes:
    """Zero-fill up to the next block boundary (no change when already aligned)."""
    return message + b"\x00" * (-len(message) % BLOCK_SIZE)


def cbc_encrypt_blocks(cipher: BlockCipher, data: bytes, iv: bytes) -> bytes:
    if len(data) % BLOCK_SIZE or len(iv) != BLOCK_SIZE:
        raise ValueError("CBC input must be block aligned")
    prev = iv
    out = bytearray()
    for i in range(0, len(data), BLOCK_SIZE):
        block = bytes(x ^ y for x, y in zip(data[i:i + BLOCK_SIZE], prev))
        prev = cipher.encrypt_block(block)
        out += prev
    return bytes(out)


def cbc_decrypt_blocks(cipher: BlockCipher, data: bytes, iv: bytes) -> bytes:
    prev = iv
    out = bytearray()
    for i in range(0, len(data), BLOCK_SIZE):
        block = data[i:i + BLOCK_SIZE]
        out += bytes(x ^ y for x, y in zip(cipher.decrypt_block(block), prev))
        prev = block
    return bytes(out)


def cbc_residue_mic(key: Union[SharedKey, bytes], message: bytes) -> Mic:
    if not message:
        raise ValueError("cannot compute a MIC over an empty message")
    cipher = key.cipher if isinstance(key, SharedKey) else default_cipher(bytes(key))
    residue = cbc_encrypt_blocks(cipher, zero_pad(message), b"\x00" * BLOCK_SIZE)[-BLOCK_SIZE:]
    return Mic(residue, MicScheme.CBC_RESIDUE)


# -- keyed hash --------------------------------------------------------------


def _lp(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def keyed_hash_mic(key: KeyMaterial, nonce: Optional[Nonce], parts: Iterable[bytes]) -> Mic:
    """H(key, nonce, part1, part2, ...) with every input length-prefixed."""
    parts = list(parts)
    if not parts:
        raise ValueError("keyed hash needs at least one message part")
    h = hashlib.sha1()
    h.update(_lp(_material(key)))
    h.update(b"\x00" if nonce is None else b"\x01" + _lp(nonce))
    h.update(struct.pack(">I", len(parts)))
    for p in parts:
        h.update(_lp(p))
    return Mic(h.digest(), MicScheme.KEYED_HASH)


def xor_mask(session_key: Union[SessionKey, bytes], mic: Union[Mic, bytes]) -> bytes:
    """Byte-wise XOR of equal-length strings; applying it twice is the identity."""
    a, b = _material(session_key), _as_digest(mic)
    if len(a) != len(b):
        raise LengthMismatch(f"cannot XOR {len(a)} bytes with {len(b)} bytes")
    return bytes(x ^ y for x, y in zip(a, b))


# -- payload sealing ---------------------------------------------------------


def pad(message: bytes) -> bytes:
    """Zero padding followed by one marker byte holding len(message) % 8."""
    zeros = -(len(message) + 1) % BLOCK_SIZE
    return message + b"\x00" * zeros + bytes([len(message) % BLOCK_SIZE])


def unpad(padded: bytes) -> bytes:
    if not padded or len(padded) % BLOCK_SIZE:
        raise DecryptFailure("padded data is not block aligned")
    marker = padded[-1]
    if marker >= BLOCK_SIZE:
        raise DecryptFailure("bad padding marker")
    zeros = (len(padded) - 1 - marker) % BLOCK_SIZE
    length = len(padded) - 1 - zeros
    if any(padded[length:-1]):
        raise DecryptFailure("non-zero padding bytes")
    return padded[:length]


def encrypt_payload(key: SharedKey, message: bytes, rng: Optional[random.Random] = None) -> bytes:
    iv = _rand_bytes(BLOCK_SIZE, rng)
    return iv + cbc_encrypt_blocks(key.cipher, pad(message), iv)


def decrypt_payload(key: SharedKey, ciphertext: bytes) -> bytes:
    if len(ciphertext) < 2 * BLOCK_SIZE or len(ciphertext) % BLOCK_SIZE:
        raise DecryptFailure(f"ciphertext length {len(ciphertext)} is not IV + whole blocks")
    iv, body = ciphertext[:BLOCK_SIZE], ciphertext[BLOCK_SIZE:]
    return unpad(cbc_decrypt_blocks(key.cipher, body, iv))


# -- key store ---------------------------------------------------------------


@dataclass
class KeyEntry:
    shared_key: SharedKey
    current_rn: Nonce
    previous_rn: Optional[Nonce] = None
    current_session_key: Optional[SessionKey] = None

    def snapshot(self) -> tuple:
        sk = self.current_session_key.secret if self.current_session_key else None
        return (self.shared_key.secret, self.current_rn, sk)


class KeyStore:
    """One agent's view of its associations: (host MAC, server id) -> KeyEntry.

    Hosts hold the single entry for their server; servers hold one per host.
    Mutations are made only by the owning agent.
    """

    def __init__(self):
        self._entries: dict[Association, KeyEntry] = {}

    def provision(self, key: SharedKey, rn: Nonce) -> KeyEntry:
        if len(rn) != NONCE_SIZE:
            raise LengthMismatch(f"nonce must be {NONCE_SIZE} bytes")
        entry = KeyEntry(key, rn)
        self._entries[(key.host, key.server)] = entry
        return entry

    def entry(self, association: Association) -> KeyEntry:
        try:
            return self._entries[association]
        except KeyError:
            raise UnknownAssociation(f"no key provisioned for {association[0]} <-> {association[1]}") from None

    def get(self, association: Association) -> Optional[KeyEntry]:
        return self._entries.get(association)

    def __contains__(self, association) -> bool:
        return association in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def commit_rn(self, association: Association, nrn: Nonce) -> None:
        entry = self.entry(association)
        if nrn != entry.current_rn:
            entry.previous_rn = entry.current_rn
            entry.current_rn = nrn


def provision_pair(host_store: Optional[KeyStore], server_store: KeyStore, host: MacAddress,
                   server: str, rng: Optional[random.Random] = None,
                   secret: Optional[bytes] = None) -> SharedKey:
    """Give both ends identical entries; the server generates the initial RN."""
    key = SharedKey(host, server, secret if secret is not None else _rand_bytes(KEY_SIZE, rng))
    rn = new_nonce(rng)
    server_store.provision(key, rn)
    if host_store is not None:
        host_store.provision(key, rn)
    return key


def derive_nrn(store: KeyStore, association: Association, exchange_transcript: bytes,
               commit: bool = False) -> Nonce:
    """NRN = H(K_SA, RN, transcript) truncated to the nonce length.

    Used where no encrypted field carries a fresh nonce; both ends compute the
    same value from the same transcript.
    """
    entry = store.entry(association)
    nrn = keyed_hash_mic(entry.shared_key, entry.current_rn, [exchange_transcript]).digest[:NONCE_SIZE]
    if commit:
        store.commit_rn(association, nrn)
    return nrn
