"""Correlated randomness: alpha_1 ^ alpha_2 ^ alpha_3 = 0 from pairwise PRF keys.

At session start every party draws a 128-bit key, sends it to its ring successor and
receives its predecessor's key. Party i then holds (k_i, k_{i-1}) and produces
alpha_i = PRF(k_i, id) ^ PRF(k_{i-1}, id) with a counter shared by all parties. Each key
lives at exactly two adjacent parties, so the three streams cancel bit for bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

import numpy as np
from Crypto.Cipher import AES

from .const import (
    COUNTER_LIMIT,
    INPUT_PAD_DOMAIN,
    MSG_KEY_EXCHANGE,
    PRF_BLOCK_BITS,
    PRF_BLOCK_BYTES,
    PRF_KEY_BYTES,
)
from .exceptions import CounterOverflowError, KeyExchangeError, ProtocolDesyncError
from .sharing import BitVector

if TYPE_CHECKING:
    from .randomness import RandomnessSource
    from .transport import RingEndpoint

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrfKey:
    """A 16-byte PRF key."""

    key_bytes: bytes

    def __post_init__(self) -> None:
        if len(self.key_bytes) != PRF_KEY_BYTES:
            raise ValueError(f"PRF keys are exactly {PRF_KEY_BYTES} bytes")

    def __repr__(self) -> str:
        return "PrfKey(<redacted>)"


class Prf(Protocol):
    """Keyed permutation of 128-bit counter blocks."""

    secure: bool

    def encrypt_blocks(self, key: PrfKey, blocks: bytes) -> bytes:
        """Map each 16-byte block of `blocks` through the keyed permutation."""


class AesPrf:
    """Reference PRF: AES-128 on the counter block."""

    secure = True

    def __init__(self) -> None:
        self._ciphers: dict[bytes, object] = {}

    def encrypt_blocks(self, key: PrfKey, blocks: bytes) -> bytes:
        cipher = self._ciphers.get(key.key_bytes)
        if cipher is None:
            cipher = AES.new(key.key_bytes, AES.MODE_ECB)
            self._ciphers[key.key_bytes] = cipher
        return cipher.encrypt(blocks)  # type: ignore[attr-defined]


class InsecureTestPrf:
    """NOT SECURE. XORs the key into the block; only for deterministic unit tests."""

    secure = False

    def encrypt_blocks(self, key: PrfKey, blocks: bytes) -> bytes:
        data = np.frombuffer(blocks, dtype=np.uint8).reshape(-1, PRF_BLOCK_BYTES)
        pad = np.frombuffer(key.key_bytes, dtype=np.uint8)
        return (data ^ pad).tobytes()


DEFAULT_PRF = AesPrf()


def counter_blocks(first: int, count: int) -> bytes:
    """Encode counters first..first+count-1 as 16-byte big-endian blocks."""
    if first < 0 or first + count > COUNTER_LIMIT:
        raise CounterOverflowError(
            f"counter range {first}+{count} leaves the 128-bit space"
        )
    if first + count <= 1 << 64:
        blocks = np.zeros((count, 2), dtype=">u8")
        blocks[:, 1] = np.arange(count, dtype=np.uint64) + np.uint64(first)
        return blocks.tobytes()
    return b"".join(
        (first + i).to_bytes(PRF_BLOCK_BYTES, "big") for i in range(count)
    )


def prf_block(key: PrfKey, counter_value: int, prf: Prf = DEFAULT_PRF) -> bytes:
    """One PRF output block for one counter value."""
    return prf.encrypt_blocks(key, counter_blocks(counter_value, 1))


def _bits_of(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")


class AlphaStream:
    """Per-party generator of correlated random bits.

    All three parties must call next_alphas with the same sizes in the same order so
    their counters stay in lock-step.
    """

    def __init__(
        self, key_self: PrfKey, key_peer: PrfKey, prf: Prf = DEFAULT_PRF
    ) -> None:
        self.key_self = key_self
        self.key_peer = key_peer
        self.prf = prf
        self.counter = 0
        self._buffer = np.zeros(0, dtype=bool)

    def next_alphas(self, n: int) -> BitVector:
        """Return the next `n` correlated bits."""
        if n < 0:
            raise ValueError("n must be non-negative")
        shortfall = n - self._buffer.size
        if shortfall > 0:
            blocks = -(-shortfall // PRF_BLOCK_BITS)
            encoded = counter_blocks(self.counter, blocks)
            mine = self.prf.encrypt_blocks(self.key_self, encoded)
            theirs = self.prf.encrypt_blocks(self.key_peer, encoded)
            fresh = _bits_of(mine) ^ _bits_of(theirs)
            self.counter += blocks
            self._buffer = np.concatenate([self._buffer, fresh.astype(bool)])
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return BitVector.from_array(out)


def input_pad(
    key: PrfKey, group_index: int, n: int, prf: Prf = DEFAULT_PRF
) -> BitVector:
    """Pad bits for masking forwarded input shares, known to both holders of `key`.

    Uses counter blocks tagged with the top bit and the group index, disjoint from the
    alpha counters.
    """
    blocks = -(-n // PRF_BLOCK_BITS)
    first = INPUT_PAD_DOMAIN | (group_index << 64)
    encoded = counter_blocks(first, blocks)
    return BitVector.from_array(_bits_of(prf.encrypt_blocks(key, encoded))[:n])


async def exchange_keys(
    transport: "RingEndpoint", randomness_source: "RandomnessSource"
) -> tuple[PrfKey, PrfKey]:
    """Send a fresh key to the successor, receive the predecessor's key."""
    if transport.keys_exchanged:
        raise KeyExchangeError(
            f"party {transport.party_id} already exchanged keys in this session"
        )
    key_self = PrfKey(randomness_source.random_bytes(PRF_KEY_BYTES))
    await transport.send_to_next(MSG_KEY_EXCHANGE, key_self.key_bytes)
    message = await transport.recv_from_prev()
    if message.msg_type != MSG_KEY_EXCHANGE:
        raise ProtocolDesyncError(
            f"expected KEY_EXCHANGE, got {message.type_name} from predecessor"
        )
    if len(message.payload) != PRF_KEY_BYTES:
        raise KeyExchangeError(
            f"predecessor key has {len(message.payload)} bytes, "
            f"expected {PRF_KEY_BYTES}"
        )
    transport.keys_exchanged = True
    _LOGGER.info("🔑 Party %s: PRF key exchange complete", transport.party_id)
    return key_self, PrfKey(message.payload)
