"""Per-party protocol engine.

A session runs setup (PRF key exchange), input (shares land in the wire store),
compute (layer by layer: local gates for free, one ring exchange per AND layer)
and reveal (the output party collects all three a-parts over ring links only).
"""

from __future__ import annotations

import asyncio
import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuit import (
    Circuit,
    GateKind,
    Layer,
    LayerKind,
    Layering,
    as_lane_matrix,
    group_offsets,
    layerize,
)
from .config import SessionConfig
from .const import (
    DEFAULT_OUTPUT_PARTY,
    DEFAULT_SESSION_ID,
    DEFAULT_TIMEOUT_SECONDS,
    INPUT_SOURCE_DEALER_FILE,
    MSG_AND_ROUND,
    MSG_INPUT_SHARES,
    MSG_OUTPUT_REVEAL,
    PARTY_IDS,
)
from .correlated import DEFAULT_PRF, AlphaStream, Prf, PrfKey, exchange_keys, input_pad
from .exceptions import (
    ConfigError,
    InputLengthError,
    PhaseError,
    ProtocolDesyncError,
    RingMpcError,
)
from .randomness import RandomnessSource, RandomSource
from .sharing import (
    BitVector,
    ReplicatedShare,
    not_local,
    reconstruct,
    require_same_length,
    ring_index,
    split_secret,
    xor_local,
)
from .transport import (
    RingEndpoint,
    TrafficCounters,
    connect_ring,
    in_memory_ring,
    open_local_tcp_ring,
)

_LOGGER = logging.getLogger(__name__)

TRANSPORT_MEMORY = "memory"
TRANSPORT_TCP = "tcp"

# reported for failures before the ring is up, ahead of Phase.SETUP
PHASE_CONNECT = "connect"


class Phase(enum.IntEnum):
    SETUP = 0
    INPUT = 1
    COMPUTE = 2
    REVEAL = 3
    DONE = 4


@dataclass(frozen=True)
class RoundValues:
    """The r-values one party sent and received in one AND layer."""

    depth: int
    gates: tuple[int, ...]
    r_self: BitVector
    r_prev: BitVector


@dataclass
class PartyState:
    """Everything one party knows during a session."""

    party_id: int
    endpoint: RingEndpoint
    lane_count: int
    prf: Prf = DEFAULT_PRF
    phase: Phase = Phase.SETUP
    alpha: AlphaStream | None = None
    keys: tuple[PrfKey, PrfKey] | None = None
    wire_store: dict[int, ReplicatedShare] = field(default_factory=dict)
    round_log: list[RoundValues] | None = None

    @property
    def traffic(self) -> TrafficCounters:
        return self.endpoint.counters()

    def advance(self, phase: Phase) -> None:
        """Move to the next phase; anything else is a PhaseError."""
        if phase != self.phase + 1:
            raise PhaseError(
                f"party {self.party_id} cannot move from {self.phase.name} "
                f"to {phase.name}"
            )
        _LOGGER.debug(
            "Party %s: %s -> %s", self.party_id, self.phase.name, phase.name
        )
        self.phase = phase

    def require(self, phase: Phase) -> None:
        if self.phase != phase:
            raise PhaseError(
                f"party {self.party_id} is in {self.phase.name}, expected {phase.name}"
            )

    async def setup(self, randomness_source: RandomnessSource) -> None:
        """Exchange PRF keys and start the correlated-randomness stream."""
        self.require(Phase.SETUP)
        self.keys = await exchange_keys(self.endpoint, randomness_source)
        self.alpha = AlphaStream(*self.keys, prf=self.prf)
        self.advance(Phase.INPUT)

    def load_inputs(self, input_shares: Sequence[ReplicatedShare]) -> None:
        """Store one share per input wire (wires 0..n-1, in order)."""
        self.require(Phase.INPUT)
        for wire, share in enumerate(input_shares):
            if len(share) != self.lane_count:
                raise InputLengthError(
                    f"input wire {wire} share has {len(share)} lanes, "
                    f"expected {self.lane_count}"
                )
            self.wire_store[wire] = share


def and_round_local(
    x: BitVector, a: BitVector, y: BitVector, b: BitVector, alpha: BitVector
) -> BitVector:
    """r = (x AND y) XOR (a AND b) XOR alpha."""
    require_same_length(x, a, y, b, alpha)
    return (x & y) ^ (a & b) ^ alpha


def and_round_finalize(r_self: BitVector, r_prev: BitVector) -> ReplicatedShare:
    """The AND result share: (r_self XOR r_prev, r_self)."""
    require_same_length(r_self, r_prev)
    return ReplicatedShare(r_self ^ r_prev, r_self)


def _eval_local_gate(store: dict[int, ReplicatedShare], c: Circuit, index: int) -> None:
    gate = c.gates[index]
    first = store[gate.inputs[0]]
    if gate.kind is GateKind.XOR:
        store[gate.output] = xor_local(first, store[gate.inputs[1]])
    elif gate.kind is GateKind.INV:
        store[gate.output] = not_local(first)
    else:
        store[gate.output] = first


async def _and_layer(state: PartyState, c: Circuit, layer: Layer) -> None:
    store, lanes = state.wire_store, state.lane_count
    gates = [c.gates[index] for index in layer.gates]
    x = BitVector.concat([store[g.inputs[0]].x for g in gates])
    a = BitVector.concat([store[g.inputs[0]].a for g in gates])
    y = BitVector.concat([store[g.inputs[1]].x for g in gates])
    b = BitVector.concat([store[g.inputs[1]].a for g in gates])
    n_bits = len(gates) * lanes
    assert state.alpha is not None
    r_self = and_round_local(x, a, y, b, state.alpha.next_alphas(n_bits))

    await state.endpoint.send_to_next(MSG_AND_ROUND, r_self.to_bytes())
    message = await state.endpoint.expect(MSG_AND_ROUND)
    if message.length != (n_bits + 7) // 8:
        raise ProtocolDesyncError(
            f"party {state.party_id}: AND layer at depth {layer.depth} expects "
            f"{(n_bits + 7) // 8} payload bytes, received {message.length}"
        )
    r_prev = BitVector.from_bytes(message.payload, n_bits)

    result = and_round_finalize(r_self, r_prev)
    for k, gate in enumerate(gates):
        store[gate.output] = result.slice(k * lanes, (k + 1) * lanes)
    if state.round_log is not None:
        state.round_log.append(RoundValues(layer.depth, layer.gates, r_self, r_prev))


async def run_circuit(
    state: PartyState,
    c: Circuit,
    layering: Layering | None = None,
    input_shares: Sequence[ReplicatedShare] | None = None,
) -> list[ReplicatedShare]:
    """Evaluate `c` on the shares in the wire store; returns the output wire shares.

    Sends exactly one AND_ROUND message per AND layer.
    """
    if input_shares is not None:
        state.load_inputs(input_shares)
    missing = [w for w in range(c.input_wire_count) if w not in state.wire_store]
    if missing:
        raise InputLengthError(
            f"party {state.party_id} lacks shares for input wires {missing[:8]}"
        )
    layering = layering or layerize(c)
    state.advance(Phase.COMPUTE)

    for layer in layering.layers:
        if layer.kind is LayerKind.AND:
            await _and_layer(state, c, layer)
        else:
            for index in layer.gates:
                _eval_local_gate(state.wire_store, c, index)
    _LOGGER.debug(
        "Party %s evaluated %d layers (%d AND rounds)",
        state.party_id,
        len(layering.layers),
        layering.and_depth,
    )
    return [state.wire_store[w] for w in c.output_wires]


def distribute_inputs(
    c: Circuit, inputs: np.ndarray | BitVector, randomness_source: RandomnessSource
) -> tuple[list[ReplicatedShare], list[ReplicatedShare], list[ReplicatedShare]]:
    """Dealer view: share every input wire, hand each party its list of shares."""
    matrix = as_lane_matrix(c, inputs)
    lanes = matrix.shape[1]
    bundle = split_secret(BitVector.from_array(matrix.reshape(-1)), randomness_source)
    per_party = tuple(
        [
            bundle.share(party).slice(w * lanes, (w + 1) * lanes)
            for w in range(c.input_wire_count)
        ]
        for party in PARTY_IDS
    )
    return per_party  # type: ignore[return-value]


def _split_pairs(bits: BitVector, n: int) -> tuple[ReplicatedShare, BitVector]:
    return ReplicatedShare(bits[:n], bits[n : 2 * n]), bits[2 * n :]


async def share_party_inputs(
    state: PartyState,
    c: Circuit,
    assignment: Mapping[int, int],
    own_values: Mapping[int, np.ndarray],
    randomness_source: RandomnessSource,
) -> None:
    """Share party-held input groups over the ring.

    `assignment` maps 1-based group numbers to the providing party; `own_values`
    holds this party's plaintext for the groups it provides, as (group width, lanes)
    matrices. The provider p sends p+1 its share plus p-1's share masked with a pad
    derived from the key p and p-1 hold; p+1 forwards the masked part once.
    """
    state.require(Phase.INPUT)
    assert state.keys is not None
    key_self, key_peer = state.keys
    lanes = state.lane_count
    offsets = group_offsets(c.input_groups)
    me = state.party_id

    for group in range(1, len(c.input_groups) + 1):
        provider = assignment.get(group)
        if provider is None:
            raise ConfigError(
                f"input group {group} has no providing party", "input_assignment"
            )
        width = c.input_groups[group - 1]
        n = width * lanes
        first_wire = offsets[group - 1]

        if me == provider:
            value = np.asarray(own_values.get(group, ()), dtype=bool)
            if value.shape != (width, lanes):
                raise InputLengthError(
                    f"party {me} must provide a {width}x{lanes} value for group {group}"
                )
            secret = BitVector.from_array(value.reshape(-1))
            bundle = split_secret(secret, randomness_source)
            nxt, prv = bundle.share(me + 1), bundle.share(me - 1)
            pad = input_pad(key_peer, group, 2 * n, state.prf)
            masked = BitVector.concat([prv.x, prv.a]) ^ pad
            await state.endpoint.send_to_next(
                MSG_INPUT_SHARES, BitVector.concat([nxt.x, nxt.a, masked]).to_bytes()
            )
            mine = bundle.share(me)
        elif me == ring_index(provider + 1):
            message = await state.endpoint.expect(MSG_INPUT_SHARES)
            bits = _payload_bits(message.payload, 4 * n, state.party_id, group)
            mine, forwarded = _split_pairs(bits, n)
            await state.endpoint.send_to_next(MSG_INPUT_SHARES, forwarded.to_bytes())
        else:
            message = await state.endpoint.expect(MSG_INPUT_SHARES)
            masked = _payload_bits(message.payload, 2 * n, state.party_id, group)
            plain = masked ^ input_pad(key_self, group, 2 * n, state.prf)
            mine, _ = _split_pairs(plain, n)

        for k in range(width):
            state.wire_store[first_wire + k] = mine.slice(k * lanes, (k + 1) * lanes)
    _LOGGER.debug("Party %s holds shares for %d input wires", me, c.input_wire_count)


def _payload_bits(payload: bytes, n_bits: int, party_id: int, group: int) -> BitVector:
    if len(payload) != (n_bits + 7) // 8:
        raise ProtocolDesyncError(
            f"party {party_id}: INPUT_SHARES for group {group} has "
            f"{len(payload)} bytes, expected {(n_bits + 7) // 8}"
        )
    return BitVector.from_bytes(payload, n_bits)


async def reveal_outputs(
    state: PartyState,
    c: Circuit,
    output_shares: Sequence[ReplicatedShare],
    output_party: int = DEFAULT_OUTPUT_PARTY,
) -> np.ndarray | None:
    """Open the output wires to `output_party`; other parties get None.

    The output party's successor sends its a-parts to the output party's
    predecessor, which forwards them and then sends its own. Each OUTPUT_REVEAL
    payload starts with one byte naming the party whose a-parts follow.
    """
    state.advance(Phase.REVEAL)
    lanes = state.lane_count
    n_bits = len(output_shares) * lanes
    a_parts = BitVector.concat([share.a for share in output_shares])
    me = state.party_id
    own_payload = bytes([me]) + a_parts.to_bytes()
    successor = ring_index(output_party + 1)
    predecessor = ring_index(output_party - 1)
    revealed = None

    if me == successor:
        await state.endpoint.send_to_next(MSG_OUTPUT_REVEAL, own_payload)
    elif me == predecessor:
        forwarded = await state.endpoint.expect(MSG_OUTPUT_REVEAL)
        await state.endpoint.send_to_next(MSG_OUTPUT_REVEAL, forwarded.payload)
        await state.endpoint.send_to_next(MSG_OUTPUT_REVEAL, own_payload)
    else:
        received = {}
        for _ in range(2):
            message = await state.endpoint.expect(MSG_OUTPUT_REVEAL)
            if not message.payload or len(message.payload) - 1 != (n_bits + 7) // 8:
                raise ProtocolDesyncError(
                    f"party {me}: OUTPUT_REVEAL of {message.length} bytes, expected "
                    f"{1 + (n_bits + 7) // 8}"
                )
            origin, body = message.payload[0], message.payload[1:]
            received[origin] = BitVector.from_bytes(body, n_bits)
        if set(received) != {successor, predecessor}:
            raise ProtocolDesyncError(
                f"party {me}: reveal came from parties {sorted(received)}"
            )
        opened = reconstruct([a_parts, received[successor], received[predecessor]])
        revealed = opened.bits.reshape(len(output_shares), lanes).copy()
        _LOGGER.info("🔓 Party %s revealed %d output wires", me, len(output_shares))
    state.advance(Phase.DONE)
    return revealed


@dataclass
class SessionReport:
    """What a session did and how long it took."""

    and_count: int
    and_depth: int
    lane_count: int
    seconds: float
    counters: dict[int, TrafficCounters]

    @property
    def and_bit_operations(self) -> int:
        return self.and_count * self.lane_count

    def and_payload_bits(self, party_id: int) -> int:
        return self.counters[party_id].payload_bits_sent(MSG_AND_ROUND)

    @classmethod
    def combine(cls, reports: Sequence["SessionReport"]) -> "SessionReport":
        """Add up repeated sessions of one circuit at one lane count."""
        first = reports[0]
        counters = {
            party: sum((r.counters[party] for r in reports[1:]), first.counters[party])
            for party in first.counters
        }
        return cls(
            and_count=sum(r.and_count for r in reports),
            and_depth=first.and_depth,
            lane_count=first.lane_count,
            seconds=sum(r.seconds for r in reports),
            counters=counters,
        )

    def as_dict(self) -> dict[str, object]:
        return {
            "and_count": self.and_count,
            "and_depth": self.and_depth,
            "lanes": self.lane_count,
            "seconds": self.seconds,
            "traffic": {str(p): c.as_dict() for p, c in self.counters.items()},
        }


@dataclass
class SimulationResult:
    outputs: np.ndarray
    report: SessionReport
    transcripts: dict[int, bytes]
    states: tuple[PartyState, ...]


def _lane_inputs(
    c: Circuit, inputs: np.ndarray | BitVector, lane_count: int | None
) -> np.ndarray:
    matrix = as_lane_matrix(c, inputs)
    if lane_count is not None and matrix.shape[1] != lane_count:
        if matrix.shape[1] != 1:
            raise InputLengthError(
                f"inputs carry {matrix.shape[1]} lanes but lane_count is {lane_count}"
            )
        matrix = np.repeat(matrix, lane_count, axis=1)
    return matrix


async def run_local_simulation(
    c: Circuit,
    inputs: np.ndarray | BitVector,
    lane_count: int | None = None,
    seed: int | None = None,
    output_party: int = DEFAULT_OUTPUT_PARTY,
    prf: Prf = DEFAULT_PRF,
    input_assignment: Mapping[int, int] | None = None,
    transport: str = TRANSPORT_MEMORY,
    record_rounds: bool = False,
    record_transcript: bool = False,
    session_id: str = DEFAULT_SESSION_ID,
    timeout: float = DEFAULT_TIMEOUT_SECONDS,
) -> SimulationResult:
    """Run all three parties in this process and return the revealed outputs.

    With an `input_assignment` the inputs are shared by the assigned parties over
    the ring; otherwise an in-process dealer shares them. Deterministic under a
    fixed seed.
    """
    matrix = _lane_inputs(c, inputs, lane_count)
    lanes = matrix.shape[1]
    layering = layerize(c)
    rng = RandomSource(seed, "session")
    dealer_rng = rng.spawn("dealer")
    party_rngs = {party: rng.spawn("party", party) for party in PARTY_IDS}

    if transport == TRANSPORT_TCP:
        endpoints = await open_local_tcp_ring(session_id, timeout, record_transcript)
    elif transport == TRANSPORT_MEMORY:
        endpoints = in_memory_ring(
            session_id, timeout, record_transcript=record_transcript
        )
    else:
        raise ConfigError(f"unknown transport {transport!r}", "transport")

    states = tuple(
        PartyState(
            party,
            endpoints[party - 1],
            lanes,
            prf=prf,
            round_log=[] if record_rounds else None,
        )
        for party in PARTY_IDS
    )
    dealt = None if input_assignment else distribute_inputs(c, matrix, dealer_rng)
    offsets = group_offsets(c.input_groups)

    async def play(state: PartyState) -> np.ndarray | None:
        await state.setup(party_rngs[state.party_id])
        if dealt is not None:
            state.load_inputs(dealt[state.party_id - 1])
        else:
            own = {
                group: matrix[offsets[group - 1] :][: c.input_groups[group - 1]]
                for group, provider in input_assignment.items()
                if provider == state.party_id and 1 <= group <= len(c.input_groups)
            }
            await share_party_inputs(
                state, c, input_assignment, own, party_rngs[state.party_id]
            )
        outputs = await run_circuit(state, c, layering)
        return await reveal_outputs(state, c, outputs, output_party)

    start = time.perf_counter()
    tasks = [asyncio.create_task(play(state)) for state in states]
    try:
        results = await asyncio.gather(*tasks)
    except BaseException:
        # stop the parties still waiting on the ring
        for task in tasks:
            task.cancel()
        await asyncio.gather(*tasks, return_exceptions=True)
        raise
    finally:
        await asyncio.gather(*(endpoint.close() for endpoint in endpoints))
    seconds = time.perf_counter() - start

    report = SessionReport(
        and_count=c.and_count,
        and_depth=layering.and_depth,
        lane_count=lanes,
        seconds=seconds,
        counters={state.party_id: state.traffic for state in states},
    )
    _LOGGER.info(
        "✅ Local session finished: %d AND gates x %d lanes in %.3fs",
        c.and_count,
        lanes,
        seconds,
    )
    return SimulationResult(
        outputs=results[output_party - 1],
        report=report,
        transcripts={e.party_id: e.transcript_bytes() for e in endpoints},
        states=states,
    )


@dataclass
class PartyOutcome:
    """Result of one party's session over TCP."""

    party_id: int
    outputs: np.ndarray | None
    report: SessionReport


async def run_party(
    config: SessionConfig,
    c: Circuit,
    input_shares: Sequence[ReplicatedShare] | None = None,
    own_values: Mapping[int, np.ndarray] | None = None,
) -> PartyOutcome:
    """One party of a networked session, as configured.

    Dealer-file mode passes `input_shares` (one per input wire); party-file mode
    passes the plaintext of this party's own groups in `own_values`.
    """
    layering = layerize(c)
    rng = RandomSource(config.seed, "party", config.party_id)
    try:
        endpoint = await connect_ring(config)
    except RingMpcError as err:
        err.phase = PHASE_CONNECT
        raise
    state = PartyState(config.party_id, endpoint, config.lane_count)
    start = time.perf_counter()
    try:
        await state.setup(rng)
        if config.input_source == INPUT_SOURCE_DEALER_FILE:
            if input_shares is None:
                raise ConfigError("dealer-file mode needs input shares", "input_file")
            state.load_inputs(input_shares)
        else:
            await share_party_inputs(
                state,
                c,
                config.input_assignment or {},
                own_values or {},
                rng.spawn("input"),
            )
        outputs = await run_circuit(state, c, layering)
        revealed = await reveal_outputs(state, c, outputs, config.output_party)
    except RingMpcError as err:
        err.phase = state.phase.name.lower()
        raise
    finally:
        await endpoint.close()
    report = SessionReport(
        and_count=c.and_count,
        and_depth=layering.and_depth,
        lane_count=config.lane_count,
        seconds=time.perf_counter() - start,
        counters={config.party_id: state.traffic},
    )
    return PartyOutcome(config.party_id, revealed, report)
