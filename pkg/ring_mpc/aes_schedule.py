"""AES-128 key schedule, for presenting inputs to key-expanded AES circuits."""

from __future__ import annotations

from functools import lru_cache

ROUND_KEYS = 11


def _gf_mul(a: int, b: int) -> int:
    product = 0
    while b:
        if b & 1:
            product ^= a
        a = ((a << 1) ^ 0x11B) if a & 0x80 else a << 1
        b >>= 1
    return product


def _rotl8(value: int, shift: int) -> int:
    return ((value << shift) | (value >> (8 - shift))) & 0xFF


@lru_cache(maxsize=1)
def sbox() -> tuple[int, ...]:
    """The AES S-box: affine map of the GF(2^8) inverse."""
    table = []
    for x in range(256):
        inv = 0
        if x:
            inv = 1
            for _ in range(254):
                inv = _gf_mul(inv, x)
        table.append(
            inv
            ^ _rotl8(inv, 1)
            ^ _rotl8(inv, 2)
            ^ _rotl8(inv, 3)
            ^ _rotl8(inv, 4)
            ^ 0x63
        )
    return tuple(table)


def expand_aes128_key(key: bytes) -> bytes:
    """Return the 176-byte schedule (11 round keys, round 0 first)."""
    if len(key) != 16:
        raise ValueError("AES-128 keys are 16 bytes")
    box = sbox()
    words = [list(key[i : i + 4]) for i in range(0, 16, 4)]
    rcon = 1
    for i in range(4, 4 * ROUND_KEYS):
        temp = list(words[i - 1])
        if i % 4 == 0:
            temp = temp[1:] + temp[:1]
            temp = [box[b] for b in temp]
            temp[0] ^= rcon
            rcon = _gf_mul(rcon, 2)
        words.append([w ^ t for w, t in zip(words[i - 4], temp)])
    return bytes(b for word in words for b in word)
