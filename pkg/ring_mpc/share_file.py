"""Versioned binary files holding one party's replicated share.

Layout (little-endian): magic "RMPC", version (u8), bit length (u64), party id
(u8), then the packed x-part followed by the packed a-part, each ceil(bits / 8)
bytes.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .const import PARTY_IDS, SHARE_FILE_MAGIC, SHARE_FILE_VERSION
from .exceptions import InsufficientSharesError, LengthMismatchError, ShareFileError
from .sharing import (
    BitVector,
    ReplicatedShare,
    ShareBundle,
    reconstruct,
    reconstruct_pairwise,
    ring_index,
)

_LOGGER = logging.getLogger(__name__)

HEADER = struct.Struct("<4sBQB")


@dataclass(frozen=True)
class PartyShare:
    party_id: int
    share: ReplicatedShare


def encode_share(party_id: int, share: ReplicatedShare) -> bytes:
    if party_id not in PARTY_IDS:
        raise ShareFileError(f"party id {party_id} is not one of {PARTY_IDS}")
    header = HEADER.pack(SHARE_FILE_MAGIC, SHARE_FILE_VERSION, len(share), party_id)
    return header + share.x.to_bytes() + share.a.to_bytes()


def decode_share(data: bytes) -> PartyShare:
    if len(data) < HEADER.size:
        raise ShareFileError("share file is shorter than its header")
    magic, version, bits, party_id = HEADER.unpack(data[: HEADER.size])
    if magic != SHARE_FILE_MAGIC:
        raise ShareFileError(f"bad magic {magic!r}")
    if version != SHARE_FILE_VERSION:
        raise ShareFileError(
            f"unsupported share file version {version} "
            f"(this build reads {SHARE_FILE_VERSION})"
        )
    if party_id not in PARTY_IDS:
        raise ShareFileError(f"party id {party_id} is not one of {PARTY_IDS}")
    part = (bits + 7) // 8
    body = data[HEADER.size :]
    if len(body) != 2 * part:
        raise ShareFileError(
            f"expected {2 * part} body bytes for {bits} bits, got {len(body)}"
        )
    x = BitVector.from_bytes(body[:part], bits)
    a = BitVector.from_bytes(body[part:], bits)
    return PartyShare(party_id, ReplicatedShare(x, a))


def write_share_file(path: str | Path, party_id: int, share: ReplicatedShare) -> Path:
    path = Path(path)
    path.write_bytes(encode_share(party_id, share))
    _LOGGER.debug("Wrote %d-bit share for party %s to %s", len(share), party_id, path)
    return path


def read_share_file(path: str | Path) -> PartyShare:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as err:
        raise ShareFileError(f"cannot read share file {path}: {err}") from err
    try:
        return decode_share(data)
    except ShareFileError as err:
        raise ShareFileError(f"{path}: {err}") from err


def write_bundle(bundle: ShareBundle, prefix: str | Path) -> list[Path]:
    """Write `<prefix>.party<N>.share` for all three parties."""
    return [
        write_share_file(f"{prefix}.party{party}.share", party, bundle.share(party))
        for party in PARTY_IDS
    ]


def reconstruct_files(
    shares: Sequence[PartyShare], pairwise: bool = False
) -> BitVector:
    """Recover the secret from share files.

    The default mode needs all three a-parts. Pairwise mode takes exactly two
    shares from adjacent parties and uses a_i XOR x_{i-1}.
    """
    by_party = {s.party_id: s.share for s in shares}
    if len(by_party) != len(shares):
        raise ShareFileError("two share files claim the same party id")
    if len({len(s) for s in by_party.values()}) > 1:
        raise LengthMismatchError("share files have different bit lengths")
    if pairwise:
        if len(by_party) != 2:
            raise InsufficientSharesError(
                "pairwise reconstruction takes exactly two shares"
            )
        for party, share in by_party.items():
            prev = ring_index(party - 1)
            if prev in by_party:
                return reconstruct_pairwise(share, by_party[prev].x)
        raise InsufficientSharesError("pairwise shares must come from adjacent parties")
    if len(by_party) < len(PARTY_IDS):
        raise InsufficientSharesError(
            f"insufficient shares: have parties {sorted(by_party)}, "
            f"need all of {PARTY_IDS}"
        )
    return reconstruct([by_party[p].a for p in PARTY_IDS])
