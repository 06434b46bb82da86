"""Tests for the AES-128 key schedule."""

import pytest

from ring_mpc.aes_schedule import ROUND_KEYS, expand_aes128_key, sbox


def test_sbox_known_entries():
    box = sbox()
    assert len(set(box)) == 256
    assert box[0x00] == 0x63
    assert box[0x01] == 0x7C
    assert box[0x53] == 0xED


def test_fips197_key_expansion():
    schedule = expand_aes128_key(bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c"))
    assert len(schedule) == 16 * ROUND_KEYS
    assert schedule[:16].hex() == "2b7e151628aed2a6abf7158809cf4f3c"
    assert schedule[16:32].hex() == "a0fafe1788542cb123a339392a6c7605"
    assert schedule[-16:].hex() == "d014f9a8c9ee2589e13f0cc8b6630ca6"


def test_sequential_key_last_round():
    schedule = expand_aes128_key(bytes(range(16)))
    assert schedule[-16:].hex() == "13111d7fe3944a17f307a78b4d2b30c5"


def test_zero_key_schedule():
    schedule = expand_aes128_key(bytes(16))
    assert schedule[:16] == bytes(16)
    assert schedule[16:32].hex() == "62636363626363636263636362636363"
    assert schedule[-16:].hex() == "b4ef5bcb3e92e21123e951cf6f8f188e"


def test_rejects_wrong_key_length():
    with pytest.raises(ValueError):
        expand_aes128_key(bytes(15))
