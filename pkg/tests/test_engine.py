"""Tests for the three-party protocol engine."""

import asyncio
import socket

import numpy as np
import pytest

from conftest import CIRCUITS_DIR, bundled_circuit, random_circuit
from ring_mpc.circuit import (
    LayerKind,
    decode_outputs,
    encode_lane_inputs,
    eval_clear,
    eval_wires,
    layerize,
    load_circuit,
    load_metadata,
    parse_metadata,
)
from ring_mpc.config import SessionConfig
from ring_mpc.const import (
    MSG_AND_ROUND,
    MSG_INPUT_SHARES,
    MSG_KEY_EXCHANGE,
    MSG_OUTPUT_REVEAL,
)
from ring_mpc.correlated import AlphaStream, InsecureTestPrf, PrfKey
from ring_mpc.engine import (
    PHASE_CONNECT,
    Phase,
    PartyState,
    SessionReport,
    and_round_finalize,
    and_round_local,
    distribute_inputs,
    reveal_outputs,
    run_circuit,
    run_local_simulation,
    run_party,
    share_party_inputs,
)
from ring_mpc.exceptions import (
    ConfigError,
    InputLengthError,
    PhaseError,
    ProtocolDesyncError,
    TransportError,
)
from ring_mpc.randomness import RandomSource
from ring_mpc.sharing import (
    BitVector,
    ReplicatedShare,
    bundle_from_parts,
    split_secret,
    validate_bundle,
)
from ring_mpc.transport import in_memory_ring


def _random_inputs(c, lanes, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, (c.input_wire_count, lanes)).astype(bool)


def _free_ports(count):
    sockets = [socket.socket() for _ in range(count)]
    try:
        for sock in sockets:
            sock.bind(("127.0.0.1", 0))
        return [sock.getsockname()[1] for sock in sockets]
    finally:
        for sock in sockets:
            sock.close()


def test_and_gate_algebra(rng):
    u, v = rng.random_bits(300), rng.random_bits(300)
    su, sv = split_secret(u, rng), split_secret(v, rng)
    keys = [PrfKey(rng.random_bytes(16)) for _ in range(3)]
    alphas = [AlphaStream(keys[i], keys[i - 1]).next_alphas(300) for i in range(3)]

    r = [
        and_round_local(su.x(p), su.a(p), sv.x(p), sv.a(p), alphas[p - 1])
        for p in (1, 2, 3)
    ]
    shares = [and_round_finalize(r[i], r[i - 1]) for i in range(3)]
    result = bundle_from_parts([s.x for s in shares], [s.a for s in shares])

    assert (r[0] ^ r[1] ^ r[2]) == (u & v)
    assert validate_bundle(result, u & v).passed


@pytest.mark.parametrize(
    "name", ["minimal_and", "xor_chain", "full_adder", "comparator8"]
)
@pytest.mark.parametrize("lanes", [1, 8, 13])
async def test_bundled_circuits_match_clear_evaluation(name, lanes):
    c = load_circuit(bundled_circuit(name))
    inputs = _random_inputs(c, lanes, seed=lanes)
    result = await run_local_simulation(c, inputs, seed=42)
    np.testing.assert_array_equal(result.outputs, eval_clear(c, inputs))


@pytest.mark.parametrize("seed", range(100))
async def test_random_circuits_match_clear_evaluation(seed):
    c = random_circuit(seed, n_inputs=8, n_gates=20 + (seed * 37) % 181, n_outputs=6)
    inputs = _random_inputs(c, 1024, seed=seed)
    result = await run_local_simulation(c, inputs, seed=seed)
    np.testing.assert_array_equal(result.outputs, eval_clear(c, inputs))


async def test_insecure_prf_gives_same_answers(comparator_path):
    c = load_circuit(comparator_path)
    inputs = _random_inputs(c, 32)
    result = await run_local_simulation(c, inputs, seed=1, prf=InsecureTestPrf())
    np.testing.assert_array_equal(result.outputs, eval_clear(c, inputs))


async def test_round_values_sum_to_clear_and_outputs(comparator_path):
    c = load_circuit(comparator_path)
    inputs = _random_inputs(c, 24, seed=9)
    result = await run_local_simulation(c, inputs, seed=3, record_rounds=True)
    wires = eval_wires(c, inputs)
    logs = [state.round_log for state in result.states]
    assert len(logs[0]) == layerize(c).and_depth

    for rounds in zip(*logs):
        gates = rounds[0].gates
        assert all(r.gates == gates for r in rounds)
        total = rounds[0].r_self ^ rounds[1].r_self ^ rounds[2].r_self
        expected = np.concatenate([wires[c.gates[g].output] for g in gates])
        np.testing.assert_array_equal(total.bits, expected)
        # each party received exactly what its predecessor sent
        for index in range(3):
            assert rounds[index].r_prev == rounds[index - 1].r_self


@pytest.mark.parametrize("lanes", [1, 8, 64])
async def test_communication_is_one_bit_per_and(comparator_path, lanes):
    c = load_circuit(comparator_path)
    layering = layerize(c)
    result = await run_local_simulation(c, _random_inputs(c, lanes), seed=2)
    expected_bytes = sum(
        (len(layer.gates) * lanes + 7) // 8
        for layer in layering.layers
        if layer.kind is LayerKind.AND
    )
    for party, counters in result.report.counters.items():
        sent = counters.sent[MSG_AND_ROUND]
        assert sent.messages == layering.and_depth, party
        assert sent.payload_bytes == expected_bytes
        assert counters.sent[MSG_KEY_EXCHANGE].payload_bytes == 16
    if lanes % 8 == 0:
        assert result.report.and_payload_bits(1) == c.and_count * lanes


async def test_local_only_circuit_sends_no_and_rounds():
    c = load_circuit(bundled_circuit("xor_chain"))
    result = await run_local_simulation(c, _random_inputs(c, 8), seed=4)
    for counters in result.report.counters.values():
        assert counters.sent[MSG_AND_ROUND].messages == 0


async def test_reveal_traffic_pattern():
    c = load_circuit(bundled_circuit("full_adder"))
    result = await run_local_simulation(c, _random_inputs(c, 8), seed=6, output_party=1)
    counters = result.report.counters
    sent = {p: t.sent[MSG_OUTPUT_REVEAL].messages for p, t in counters.items()}
    # party 2 sends its a-parts to 3, which forwards them and adds its own
    assert sent == {1: 0, 2: 1, 3: 2}


async def test_masked_messages_look_random(minimal_and):
    lanes = 4096
    inputs = np.zeros((2, lanes), dtype=bool)
    result = await run_local_simulation(minimal_and, inputs, seed=8, record_rounds=True)
    for state in result.states:
        received = state.round_log[0].r_prev
        assert 0.45 < received.count_ones() / lanes < 0.55
    assert not result.outputs.any()


async def test_received_round_bits_do_not_depend_on_inputs(comparator_path):
    c = load_circuit(comparator_path)
    runs, lanes = 1000, 4
    fixed_inputs = (
        np.zeros((c.input_wire_count, lanes), dtype=bool),
        _random_inputs(c, lanes, seed=77),
    )
    frequencies = []
    for offset, inputs in enumerate(fixed_inputs):
        ones = total = 0
        for run in range(runs):
            result = await run_local_simulation(
                c, inputs, seed=offset * runs + run, record_rounds=True
            )
            for rounds in result.states[1].round_log:
                ones += rounds.r_prev.count_ones()
                total += len(rounds.r_prev)
        frequencies.append(ones / total)
    assert all(0.47 < f < 0.53 for f in frequencies), frequencies
    assert abs(frequencies[0] - frequencies[1]) <= 0.03


@pytest.mark.parametrize("output_party", [1, 2, 3])
async def test_reveal_to_each_party(comparator_path, output_party):
    c = load_circuit(comparator_path)
    inputs = _random_inputs(c, 16, seed=output_party)
    result = await run_local_simulation(c, inputs, seed=5, output_party=output_party)
    np.testing.assert_array_equal(result.outputs, eval_clear(c, inputs))
    assert all(state.phase is Phase.DONE for state in result.states)


async def test_non_output_parties_learn_nothing(minimal_and):
    endpoints = in_memory_ring(timeout=5.0)
    states = [PartyState(p, endpoints[p - 1], 4) for p in (1, 2, 3)]
    dealt = distribute_inputs(minimal_and, np.ones((2, 4), dtype=bool), RandomSource(1))

    async def play(state):
        await state.setup(RandomSource(2, state.party_id))
        shares = dealt[state.party_id - 1]
        outputs = await run_circuit(state, minimal_and, input_shares=shares)
        return await reveal_outputs(state, minimal_and, outputs, output_party=2)

    results = await asyncio.gather(*(play(s) for s in states))
    assert results[0] is None and results[2] is None
    assert results[1].tolist() == [[True] * 4]


async def test_same_seed_same_transcript(full_adder_path):
    c = load_circuit(full_adder_path)
    inputs = _random_inputs(c, 8)
    first = await run_local_simulation(c, inputs, seed=11, record_transcript=True)
    second = await run_local_simulation(c, inputs, seed=11, record_transcript=True)
    other = await run_local_simulation(c, inputs, seed=12, record_transcript=True)
    assert first.transcripts == second.transcripts
    assert all(first.transcripts.values())
    assert first.transcripts != other.transcripts
    np.testing.assert_array_equal(first.outputs, other.outputs)


async def test_single_lane_input_broadcasts(full_adder_path):
    c = load_circuit(full_adder_path)
    column = np.array([1, 1, 0], dtype=bool)
    result = await run_local_simulation(c, column, lane_count=5, seed=1)
    assert result.outputs.shape == (2, 5)
    assert result.outputs[:, 0].tolist() == [False, True]
    with pytest.raises(InputLengthError):
        await run_local_simulation(c, np.zeros((3, 2), dtype=bool), lane_count=5)


@pytest.mark.parametrize(
    "assignment", [{1: 1, 2: 2}, {1: 3, 2: 3}, {1: 2, 2: 1}, {1: 1, 2: 1}]
)
async def test_party_sourced_inputs(comparator_path, assignment):
    c = load_circuit(comparator_path)
    meta = load_metadata(comparator_path)
    pairs = [(200, 100), (3, 4), (77, 77), (0, 255)]
    inputs = encode_lane_inputs(c, meta, pairs)
    result = await run_local_simulation(c, inputs, seed=13, input_assignment=assignment)
    decoded = [decode_outputs(c, meta, result.outputs[:, lane]) for lane in range(4)]
    assert decoded == [[1], [0], [0], [0]]
    for party, counters in result.report.counters.items():
        # one message per group, plus one forward for the provider's successor
        forwards = sum(1 for p in assignment.values() if party == p % 3 + 1)
        provides = sum(1 for p in assignment.values() if party == p)
        assert counters.sent[MSG_INPUT_SHARES].messages == forwards + provides


async def test_party_sourced_shares_are_consistent(full_adder_path):
    c = load_circuit(full_adder_path)
    lanes = 8
    values = _random_inputs(c, lanes, seed=21)
    endpoints = in_memory_ring(timeout=5.0)
    states = [PartyState(p, endpoints[p - 1], lanes) for p in (1, 2, 3)]
    assignment = {1: 1, 2: 2, 3: 3}

    async def provide(state):
        await state.setup(RandomSource(4, "setup", state.party_id))
        own = {state.party_id: values[state.party_id - 1 : state.party_id]}
        await share_party_inputs(
            state, c, assignment, own, RandomSource(4, "input", state.party_id)
        )

    await asyncio.gather(*(provide(s) for s in states))
    for wire in range(c.input_wire_count):
        bundle = bundle_from_parts(
            [s.wire_store[wire].x for s in states],
            [s.wire_store[wire].a for s in states],
        )
        assert validate_bundle(bundle, BitVector.from_array(values[wire])).passed


async def test_missing_input_provider(full_adder_path):
    c = load_circuit(full_adder_path)
    with pytest.raises(ConfigError):
        await run_local_simulation(
            c, _random_inputs(c, 8), seed=1, input_assignment={1: 1, 2: 2}
        )


async def test_tcp_matches_in_memory(comparator_path):
    c = load_circuit(comparator_path)
    inputs = _random_inputs(c, 16, seed=17)
    local = await run_local_simulation(c, inputs, seed=19)
    tcp = await run_local_simulation(c, inputs, seed=19, transport="tcp", timeout=5.0)
    np.testing.assert_array_equal(local.outputs, tcp.outputs)
    for party in (1, 2, 3):
        assert (
            local.report.counters[party].sent[MSG_AND_ROUND].payload_bytes
            == tcp.report.counters[party].sent[MSG_AND_ROUND].payload_bytes
        )


class _FailOncePrf:
    """Raises on its first block request, then behaves like InsecureTestPrf."""

    secure = False

    def __init__(self):
        self.calls = 0

    def encrypt_blocks(self, key, blocks):
        self.calls += 1
        if self.calls == 1:
            raise RuntimeError("prf unavailable")
        return InsecureTestPrf().encrypt_blocks(key, blocks)


async def test_failed_party_stops_the_others(minimal_and):
    with pytest.raises(RuntimeError, match="prf unavailable"):
        await run_local_simulation(
            minimal_and,
            np.ones(2, dtype=bool),
            lane_count=8,
            seed=1,
            prf=_FailOncePrf(),
            timeout=5.0,
        )
    pending = [t for t in asyncio.all_tasks() if t is not asyncio.current_task()]
    assert pending == []


async def test_unknown_transport(minimal_and):
    with pytest.raises(ConfigError):
        await run_local_simulation(minimal_and, np.ones(2, dtype=bool), transport="udp")


def test_phase_order_is_enforced():
    first, _, _ = in_memory_ring()
    state = PartyState(1, first, 8)
    with pytest.raises(PhaseError):
        state.advance(Phase.COMPUTE)
    with pytest.raises(PhaseError):
        state.load_inputs([])
    state.advance(Phase.INPUT)
    with pytest.raises(PhaseError):
        state.advance(Phase.SETUP)


async def test_lane_mismatch_is_a_desync(minimal_and):
    endpoints = in_memory_ring(timeout=1.0)
    lanes = {1: 8, 2: 8, 3: 16}
    states = [PartyState(p, endpoints[p - 1], lanes[p]) for p in (1, 2, 3)]

    async def play(state):
        await state.setup(RandomSource(3, state.party_id))
        zero = BitVector.zeros(state.lane_count)
        shares = [ReplicatedShare(zero, zero)] * 2
        outputs = await run_circuit(state, minimal_and, input_shares=shares)
        return await reveal_outputs(state, minimal_and, outputs)

    results = await asyncio.gather(*(play(s) for s in states), return_exceptions=True)
    assert any(isinstance(r, ProtocolDesyncError) for r in results)


def test_session_report_combine():
    first, _, _ = in_memory_ring()
    counters = first.counters()
    counters.record_sent(MSG_AND_ROUND, 10)
    report = SessionReport(5, 2, 16, 0.5, {1: counters})
    combined = SessionReport.combine([report, report, report])
    assert combined.and_count == 15
    assert combined.seconds == pytest.approx(1.5)
    assert combined.and_bit_operations == 15 * 16
    assert combined.and_payload_bits(1) == 3 * 80
    assert combined.as_dict()["lanes"] == 16


def _session_configs(circuit_path, lanes, **extra):
    ports = _free_ports(3)
    return [
        SessionConfig.from_mapping(
            {
                "party_id": party,
                "listen_address": f"127.0.0.1:{ports[party - 1]}",
                "successor_address": f"127.0.0.1:{ports[party % 3]}",
                "circuit_path": str(circuit_path),
                "lane_count": lanes,
                "seed": 7,
                "timeout_seconds": 5,
                **extra,
            }
        )
        for party in (1, 2, 3)
    ]


async def test_run_party_with_dealer_shares(full_adder_path):
    c = load_circuit(full_adder_path)
    lanes = 8
    inputs = _random_inputs(c, lanes, seed=23)
    dealt = distribute_inputs(c, inputs, RandomSource(5, "dealer"))
    configs = _session_configs(full_adder_path, lanes)

    outcomes = await asyncio.gather(
        *(run_party(cfg, c, input_shares=dealt[cfg.party_id - 1]) for cfg in configs)
    )
    np.testing.assert_array_equal(outcomes[0].outputs, eval_clear(c, inputs))
    assert outcomes[1].outputs is None and outcomes[2].outputs is None
    assert outcomes[0].report.counters[1].sent[MSG_AND_ROUND].messages == 1


async def test_run_party_with_party_inputs(full_adder_path):
    c = load_circuit(full_adder_path)
    lanes = 8
    inputs = _random_inputs(c, lanes, seed=29)
    configs = _session_configs(
        full_adder_path,
        lanes,
        input_source="party-file",
        input_assignment="1:1,2:2,3:3",
        output_party=3,
    )
    outcomes = await asyncio.gather(
        *(
            run_party(cfg, c, own_values={cfg.party_id: inputs[cfg.party_id - 1 :][:1]})
            for cfg in configs
        )
    )
    np.testing.assert_array_equal(outcomes[2].outputs, eval_clear(c, inputs))


async def test_aes_under_mpc(aes_circuit_path):
    c = load_circuit(aes_circuit_path)
    meta = parse_metadata((CIRCUITS_DIR / "aes_128_expanded.meta").read_text())
    vector = meta.known_answer_vectors[0]
    lanes = 8
    inputs = encode_lane_inputs(c, meta, [vector.inputs] * lanes)
    result = await run_local_simulation(c, inputs, seed=31)
    for lane in range(lanes):
        assert decode_outputs(c, meta, result.outputs[:, lane]) == list(vector.outputs)
    for party in (1, 2, 3):
        assert result.report.and_payload_bits(party) == c.and_count * lanes


async def test_run_party_tags_connect_failures(full_adder_path):
    c = load_circuit(full_adder_path)
    # the successor never starts listening
    config = _session_configs(full_adder_path, 8, timeout_seconds=0.3)[0]
    with pytest.raises(TransportError) as info:
        await run_party(config, c, input_shares=[])
    assert info.value.phase == PHASE_CONNECT
