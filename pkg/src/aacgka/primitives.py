"""Symmetric and public-key building blocks.

Hashing is SHA-256, key derivation is extract-and-expand HMAC (RFC 5869
construction), signatures are Ed25519, and sealing is ephemeral X25519 with
a ChaCha20-Poly1305 payload. All randomness is drawn through Rng so that a
seeded run is reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    NoEncryption,
    PrivateFormat,
    PublicFormat,
)

from .wire import pack

HASH_LEN = 32
KEY_LEN = 32
SIG_LEN = 64
SEAL_OVERHEAD = 32 + 16  # ephemeral public key plus AEAD tag


class CryptoError(Exception):
    """Base class for primitive-layer failures."""


class SealError(CryptoError):
    """Sealed box failed to open: wrong key or tampered ciphertext."""


def hash_bytes(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


# ---- key derivation ----

def hkdf_extract(salt: bytes, ikm: bytes) -> bytes:
    if not salt:
        salt = b"\x00" * HASH_LEN
    return hmac.new(salt, ikm, hashlib.sha256).digest()


def hkdf_expand(prk: bytes, info: bytes, length: int) -> bytes:
    if length > 255 * HASH_LEN:
        raise CryptoError("expand length out of range")
    out = b""
    block = b""
    counter = 1
    while len(out) < length:
        block = hmac.new(prk, block + info + bytes([counter]), hashlib.sha256).digest()
        out += block
        counter += 1
    return out[:length]


def kdf(secret: bytes, label: str, context: bytes, length: int = KEY_LEN) -> bytes:
    """Derive a labelled, context-bound key from a secret."""
    prk = hkdf_extract(b"", secret)
    return hkdf_expand(prk, pack(label, context), length)


# ---- randomness ----

class Rng:
    """Byte source: seeded and reproducible, or OS-backed when unseeded."""

    def __init__(self, seed: int | None = None):
        self.seed = seed
        self._r: random.Random = random.Random(seed) if seed is not None else random.SystemRandom()

    def bytes(self, n: int) -> bytes:
        return self._r.getrandbits(8 * n).to_bytes(n, "big") if n else b""

    def coin(self) -> int:
        return self._r.getrandbits(1)

    def randint(self, lo: int, hi: int) -> int:
        return self._r.randint(lo, hi)

    def choice(self, seq):
        return seq[self._r.randrange(len(seq))]

    def scalar(self, modulus: int, nonzero: bool = False) -> int:
        """Uniform scalar below modulus, by wide reduction."""
        while True:
            value = int.from_bytes(self.bytes(((modulus.bit_length() + 7) // 8) + 16), "big") % modulus
            if value or not nonzero:
                return value

    def spawn(self, index: int) -> "Rng":
        """Independent child stream; deterministic iff this stream is seeded."""
        if self.seed is None:
            return Rng()
        material = hash_bytes(pack("rng-spawn", self.seed, index))
        return Rng(int.from_bytes(material, "big"))


# ---- signatures ----

@dataclass(frozen=True)
class SigKeyPair:
    spk: bytes
    ssk: bytes


def gen_sig_keypair(rng: Rng) -> SigKeyPair:
    ssk = rng.bytes(32)
    spk = (
        Ed25519PrivateKey.from_private_bytes(ssk)
        .public_key()
        .public_bytes(Encoding.Raw, PublicFormat.Raw)
    )
    return SigKeyPair(spk=spk, ssk=ssk)


def sign(ssk: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(ssk).sign(message)


def verify(spk: bytes, message: bytes, sig: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(spk).verify(sig, message)
        return True
    except (InvalidSignature, ValueError):
        return False


# ---- sealing ----

@dataclass(frozen=True)
class KemKeyPair:
    epk: bytes
    esk: bytes


def gen_kem_keypair(rng: Rng) -> KemKeyPair:
    esk = rng.bytes(32)
    epk = (
        X25519PrivateKey.from_private_bytes(esk)
        .public_key()
        .public_bytes(Encoding.Raw, PublicFormat.Raw)
    )
    return KemKeyPair(epk=epk, esk=esk)


def _seal_key(shared: bytes, eph_pub: bytes, recipient_pub: bytes) -> bytes:
    return kdf(shared, "seal", pack(eph_pub, recipient_pub))


def seal(epk: bytes, plaintext: bytes, rng: Rng) -> bytes:
    """Encrypt to the holder of epk's secret; output is ephemeral key || box."""
    eph = X25519PrivateKey.from_private_bytes(rng.bytes(32))
    eph_pub = eph.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    shared = eph.exchange(X25519PublicKey.from_public_bytes(epk))
    key = _seal_key(shared, eph_pub, epk)
    box = ChaCha20Poly1305(key).encrypt(b"\x00" * 12, plaintext, b"")
    return eph_pub + box


def open_sealed(esk: bytes, sealed: bytes) -> bytes:
    if len(sealed) < SEAL_OVERHEAD:
        raise SealError("sealed box too short")
    eph_pub, box = sealed[:32], sealed[32:]
    secret = X25519PrivateKey.from_private_bytes(esk)
    recipient_pub = secret.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    try:
        shared = secret.exchange(X25519PublicKey.from_public_bytes(eph_pub))
        key = _seal_key(shared, eph_pub, recipient_pub)
        return ChaCha20Poly1305(key).decrypt(b"\x00" * 12, box, b"")
    except (InvalidTag, ValueError) as exc:
        raise SealError("sealed box failed to open") from exc
