"""Per-slot authenticated encryption: ChaCha20 then HMAC-SHA256.

Serialized slot layout::

    [0, 12)                     nonce
    [12, 12 + page_size)        ciphertext
    [12 + page_size, ... + 32)  HMAC-SHA256(mac_key, nonce || slot_index_le64 || ciphertext)

The slot index is bound into the tag so a sealed page copied to another slot
fails verification.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import struct
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from .errors import IntegrityError, NonceExhausted, SealError, SizeMismatch
from .geometry import MAC_SIZE, NONCE_SIZE, OramState

KEY_SIZE = 32
NONCE_LIMIT = 1 << 64

_COUNTER0 = b"\x00\x00\x00\x00"
_INDEX = struct.Struct("<Q")


@dataclass(frozen=True, repr=False)
class SealKeys:
    enc_key: bytes
    mac_key: bytes

    def __post_init__(self):
        if len(self.enc_key) != KEY_SIZE or len(self.mac_key) != KEY_SIZE:
            raise SealError("both keys must be 32 bytes")
        if hmac.compare_digest(self.enc_key, self.mac_key):
            raise SealError("encryption and MAC keys must differ")

    def __repr__(self):
        return "SealKeys(<redacted>)"

    @classmethod
    def generate(cls) -> "SealKeys":
        return cls(os.urandom(KEY_SIZE), os.urandom(KEY_SIZE))

    @classmethod
    def derive(cls, seed: int | bytes) -> "SealKeys":
        """Deterministic keys for reproducible test and benchmark runs."""
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "little", signed=True)
        return cls(
            hashlib.sha256(b"detworam-enc" + seed).digest(),
            hashlib.sha256(b"detworam-mac" + seed).digest(),
        )


@dataclass(frozen=True)
class SealedSlot:
    nonce: bytes
    ciphertext: bytes
    mac: bytes

    def to_bytes(self) -> bytes:
        return self.nonce + self.ciphertext + self.mac

    @classmethod
    def from_bytes(cls, raw: bytes, page_size: int) -> "SealedSlot":
        if len(raw) != NONCE_SIZE + page_size + MAC_SIZE:
            raise SizeMismatch(
                f"slot of {len(raw)} bytes, expected {NONCE_SIZE + page_size + MAC_SIZE}"
            )
        end = NONCE_SIZE + page_size
        return cls(bytes(raw[:NONCE_SIZE]), bytes(raw[NONCE_SIZE:end]), bytes(raw[end:]))


def _chacha20(data: bytes, key: bytes, nonce: bytes) -> bytes:
    # cryptography takes a 16-byte nonce: 32-bit block counter || 96-bit nonce
    enc = Cipher(algorithms.ChaCha20(key, _COUNTER0 + nonce), mode=None).encryptor()
    return enc.update(data) + enc.finalize()


def _tag(mac_key: bytes, nonce: bytes, slot_index: int, ciphertext: bytes) -> bytes:
    h = hmac.new(mac_key, nonce, hashlib.sha256)
    h.update(_INDEX.pack(slot_index))
    h.update(ciphertext)
    return h.digest()


def seal(plain: bytes, slot_index: int, keys: SealKeys, nonce: bytes,
         page_size: int | None = None) -> SealedSlot:
    if page_size is not None and len(plain) != page_size:
        raise SealError(f"plaintext is {len(plain)} bytes, page size is {page_size}")
    if len(nonce) != NONCE_SIZE:
        raise SealError(f"nonce must be {NONCE_SIZE} bytes")
    if slot_index < 0:
        raise SealError(f"negative slot index {slot_index}")
    ct = _chacha20(bytes(plain), keys.enc_key, nonce)
    return SealedSlot(nonce, ct, _tag(keys.mac_key, nonce, slot_index, ct))


def unseal(slot: SealedSlot, slot_index: int, keys: SealKeys) -> bytes:
    expected = _tag(keys.mac_key, slot.nonce, slot_index, slot.ciphertext)
    if not hmac.compare_digest(expected, slot.mac):
        raise IntegrityError(f"MAC mismatch at slot {slot_index}")
    return _chacha20(slot.ciphertext, keys.enc_key, slot.nonce)


def encode_nonce(counter: int) -> bytes:
    return counter.to_bytes(NONCE_SIZE, "little")


def next_nonce(state: OramState) -> bytes:
    """Take the next counter nonce. Callers serialize access to ``state``."""
    c = state.nonce_counter
    if c >= NONCE_LIMIT:
        raise NonceExhausted("nonce counter reached 2**64")
    state.nonce_counter = c + 1
    return encode_nonce(c)


def take_nonces(state: OramState, n: int) -> list[bytes]:
    return [next_nonce(state) for _ in range(n)]
