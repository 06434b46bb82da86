"""Replicated boolean secret sharing for three parties.

Party i holds the pair (x_i, a_i) where x_1 ^ x_2 ^ x_3 = 0 and a_i = x_{i-1} ^ v. Every
bit is vectorized over lanes, so one ReplicatedShare carries many independent secrets.
All functions here are local: none of them talks to another party.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .const import CORRUPTION_THRESHOLD, DEFAULT_LANE_COUNT, PARTY_COUNT, PARTY_IDS
from .exceptions import ConfigError, LengthMismatchError

if TYPE_CHECKING:
    from .randomness import RandomnessSource

_LOGGER = logging.getLogger(__name__)


def ring_index(party: int) -> int:
    """Map any integer onto a party id in 1..3 (0 -> 3, 4 -> 1)."""
    return (party - 1) % PARTY_COUNT + 1


class BitVector:
    """Immutable, ordered sequence of bits backed by a numpy bool array.

    Serialization packs bit j into bit (j mod 8) of byte j // 8, least significant
    bit first.
    """

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray = ()) -> None:
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
        if arr.ndim != 1 and arr.size:
            raise ValueError("BitVector needs a one-dimensional sequence")
        arr = arr.reshape(-1)
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("BitVector elements must be 0 or 1")
        self._bits = _freeze(arr.astype(bool))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BitVector":
        """Wrap a 0/1 array without validating it."""
        vec = cls.__new__(cls)
        vec._bits = _freeze(np.asarray(arr, dtype=bool).reshape(-1))
        return vec

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls.from_array(np.zeros(length, dtype=bool))

    @classmethod
    def ones(cls, length: int) -> "BitVector":
        return cls.from_array(np.ones(length, dtype=bool))

    @classmethod
    def from_bytes(cls, data: bytes, length: int | None = None) -> "BitVector":
        """Unpack `length` bits (default: all of them) from LSB-first bytes."""
        raw = np.frombuffer(bytes(data), dtype=np.uint8)
        if length is None:
            length = raw.size * 8
        if length > raw.size * 8:
            raise LengthMismatchError(
                f"{len(data)} bytes cannot hold {length} bits"
            )
        return cls.from_array(np.unpackbits(raw, count=length, bitorder="little"))

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitVector":
        """Bit j of the vector is bit j of `value`."""
        return cls.from_bytes(value.to_bytes((length + 7) // 8 or 1, "little"), length)

    @classmethod
    def concat(cls, parts: Sequence["BitVector"]) -> "BitVector":
        if not parts:
            return cls.zeros(0)
        return cls.from_array(np.concatenate([p.bits for p in parts]))

    @property
    def bits(self) -> np.ndarray:
        """Read-only view of the underlying bool array."""
        return self._bits

    def to_bytes(self) -> bytes:
        return np.packbits(self._bits, bitorder="little").tobytes()

    def to_int(self) -> int:
        return int.from_bytes(self.to_bytes(), "little") if len(self) else 0

    def to_list(self) -> list[int]:
        return [int(b) for b in self._bits]

    def count_ones(self) -> int:
        return int(np.count_nonzero(self._bits))

    def split(self, chunk: int) -> list["BitVector"]:
        """Cut into consecutive pieces of `chunk` bits."""
        if chunk <= 0 or len(self) % chunk:
            raise LengthMismatchError(
                f"cannot split {len(self)} bits into chunks of {chunk}"
            )
        return [
            BitVector.from_array(row) for row in self._bits.reshape(-1, chunk)
        ]

    def __len__(self) -> int:
        return int(self._bits.size)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return BitVector.from_array(self._bits[index])
        return int(self._bits[index])

    def __iter__(self):
        return (int(b) for b in self._bits)

    def __xor__(self, other: "BitVector") -> "BitVector":
        require_same_length(self, other)
        return BitVector.from_array(self._bits ^ other._bits)

    def __and__(self, other: "BitVector") -> "BitVector":
        require_same_length(self, other)
        return BitVector.from_array(self._bits & other._bits)

    def __invert__(self) -> "BitVector":
        return BitVector.from_array(~self._bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return len(self) == len(other) and bool(np.array_equal(self._bits, other._bits))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        shown = "".join(str(b) for b in self.to_list()[:64])
        suffix = "..." if len(self) > 64 else ""
        return f"BitVector({len(self)}: {shown}{suffix})"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def require_same_length(*vectors: BitVector) -> int:
    """Return the common length or raise LengthMismatchError."""
    lengths = {len(v) for v in vectors}
    if len(lengths) > 1:
        raise LengthMismatchError(f"bit vector lengths differ: {sorted(lengths)}")
    return lengths.pop() if lengths else 0


@dataclass(frozen=True)
class ReplicatedShare:
    """One party's (x, a) pair for one wire."""

    x: BitVector
    a: BitVector

    def __post_init__(self) -> None:
        require_same_length(self.x, self.a)

    def __len__(self) -> int:
        return len(self.x)

    def slice(self, start: int, stop: int) -> "ReplicatedShare":
        return ReplicatedShare(self.x[start:stop], self.a[start:stop])


@dataclass(frozen=True)
class ShareBundle:
    """All three parties' shares of one secret vector (dealer or test view)."""

    shares: tuple[ReplicatedShare, ReplicatedShare, ReplicatedShare]

    def __post_init__(self) -> None:
        if len(self.shares) != PARTY_COUNT:
            raise ValueError(f"a bundle holds exactly {PARTY_COUNT} shares")
        require_same_length(*(s.x for s in self.shares))

    def share(self, party: int) -> ReplicatedShare:
        """Share of `party`, indexed 1..3 with wraparound."""
        return self.shares[ring_index(party) - 1]

    def x(self, party: int) -> BitVector:
        return self.share(party).x

    def a(self, party: int) -> BitVector:
        return self.share(party).a

    def __len__(self) -> int:
        return len(self.shares[0])


@dataclass(frozen=True)
class ProtocolConfig:
    """Fixed protocol parameters plus the lane width."""

    lane_count: int = DEFAULT_LANE_COUNT
    party_count: int = PARTY_COUNT
    corruption_threshold: int = CORRUPTION_THRESHOLD

    def __post_init__(self) -> None:
        if self.party_count != PARTY_COUNT:
            raise ConfigError(f"party_count is fixed at {PARTY_COUNT}", "party_count")
        if self.corruption_threshold != CORRUPTION_THRESHOLD:
            raise ConfigError(
                f"corruption_threshold is fixed at {CORRUPTION_THRESHOLD}",
                "corruption_threshold",
            )
        if self.lane_count < 1:
            raise ConfigError("lane_count must be positive", "lane_count")


@dataclass
class BundleReport:
    """Which ShareBundle invariants hold."""

    lengths_equal: bool
    x_sum_zero: bool
    pairwise_consistent: bool
    matches_secret: bool | None = None
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def bundle_from_parts(
    x_parts: Sequence[BitVector], a_parts: Sequence[BitVector]
) -> ShareBundle:
    """Assemble a bundle from per-party x and a lists (party 1 first)."""
    shares = tuple(ReplicatedShare(x, a) for x, a in zip(x_parts, a_parts))
    return ShareBundle(shares)  # type: ignore[arg-type]


def split_secret(v: BitVector, randomness_source: "RandomnessSource") -> ShareBundle:
    """Dealer-side sharing: x_1, x_2 uniform, x_3 = x_1 ^ x_2, a_i = x_{i-1} ^ v."""
    x1 = randomness_source.random_bits(len(v))
    x2 = randomness_source.random_bits(len(v))
    x_parts = (x1, x2, x1 ^ x2)
    a_parts = tuple(x_parts[ring_index(i - 1) - 1] ^ v for i in PARTY_IDS)
    return bundle_from_parts(x_parts, a_parts)


def share_constant(v: BitVector) -> ShareBundle:
    """Deterministic sharing of a public constant: x_i = 0, a_i = v."""
    zero = BitVector.zeros(len(v))
    return bundle_from_parts((zero, zero, zero), (v, v, v))


def reconstruct(a_parts: Sequence[BitVector]) -> BitVector:
    """XOR of the three a-parts."""
    if len(a_parts) != PARTY_COUNT:
        raise ValueError(f"reconstruct needs exactly {PARTY_COUNT} a-parts")
    first, second, third = a_parts
    return first ^ second ^ third


def reconstruct_pairwise(share_i: ReplicatedShare, x_prev: BitVector) -> BitVector:
    """Recover v from one share and the predecessor's x-part: a_i ^ x_{i-1}."""
    return share_i.a ^ x_prev


def xor_local(s: ReplicatedShare, t: ReplicatedShare) -> ReplicatedShare:
    """XOR gate on shares: (x ^ y, a ^ b)."""
    return ReplicatedShare(s.x ^ t.x, s.a ^ t.a)


def not_local(s: ReplicatedShare) -> ReplicatedShare:
    """NOT gate on shares: flip a, keep x (XOR with the shared constant 1)."""
    return ReplicatedShare(s.x, ~s.a)


def validate_bundle(b: ShareBundle, secret: BitVector | None = None) -> BundleReport:
    """Check the ShareBundle invariants; returns a report instead of raising."""
    lengths = {len(s.x) for s in b.shares} | {len(s.a) for s in b.shares}
    lengths_equal = len(lengths) == 1
    if secret is not None:
        lengths_equal = lengths_equal and len(secret) in lengths
    report = BundleReport(
        lengths_equal=lengths_equal, x_sum_zero=False, pairwise_consistent=False
    )
    if not lengths_equal:
        report.failures.append("lengths")
        return report

    report.x_sum_zero = reconstruct([b.x(i) for i in PARTY_IDS]).count_ones() == 0
    if not report.x_sum_zero:
        report.failures.append("x_sum")

    report.pairwise_consistent = all(
        (b.a(i) ^ b.a(j)) == (b.x(i - 1) ^ b.x(j - 1))
        for i, j in ((1, 2), (2, 3), (1, 3))
    )
    if not report.pairwise_consistent:
        report.failures.append("pairwise")

    if secret is not None:
        report.matches_secret = all(b.a(i) == (b.x(i - 1) ^ secret) for i in PARTY_IDS)
        if not report.matches_secret:
            report.failures.append("secret")
    return report
