"""Seedable randomness for dealers and key generation.

Bits come from an AES-128 keystream in counter mode. Without a seed the key is
drawn from the operating system; with a seed the key is derived from it so test
runs are repeatable.
"""

from __future__ import annotations

import hashlib
import logging
from typing import Protocol

import numpy as np
from Crypto.Cipher import AES
from Crypto.Random import get_random_bytes

from .sharing import BitVector

_LOGGER = logging.getLogger(__name__)


class RandomnessSource(Protocol):
    """Anything that can hand out independent uniform bits."""

    def random_bits(self, count: int) -> BitVector:
        """Return `count` fresh uniform bits."""

    def random_bytes(self, count: int) -> bytes:
        """Return `count` fresh uniform bytes."""


class RandomSource:
    """AES-CTR keystream generator."""

    def __init__(self, seed: int | bytes | str | None = None, *labels: object) -> None:
        if seed is None:
            key = get_random_bytes(16)
        else:
            material = repr((seed, *labels)).encode()
            key = hashlib.sha256(b"ring-mpc/random/" + material).digest()[:16]
            _LOGGER.debug("Seeded random source for labels %s", labels)
        self._cipher = AES.new(key, AES.MODE_CTR, nonce=b"")

    def random_bytes(self, count: int) -> bytes:
        """Return `count` keystream bytes."""
        if count < 0:
            raise ValueError("count must be non-negative")
        return self._cipher.encrypt(bytes(count))

    def random_bits(self, count: int) -> BitVector:
        """Return `count` keystream bits, LSB-first within each byte."""
        raw = np.frombuffer(self.random_bytes((count + 7) // 8), dtype=np.uint8)
        return BitVector.from_array(np.unpackbits(raw, count=count, bitorder="little"))

    def spawn(self, *labels: object) -> "RandomSource":
        """Derive an independent child source, deterministic for seeded parents."""
        return RandomSource(self.random_bytes(32), *labels)
