"""Command-line front end: `ring-mpc <command> ...`.

Every command prints plain text by default and JSON lines with `--json`; each JSON
line is one record with a "record" field naming its kind. Exit codes: 0 success,
2 usage or configuration, 3 circuit parse or validation, 4 transport, 5 protocol
desync, 6 other.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence, TextIO

import numpy as np
import voluptuous as vol

from . import perf_model
from .assets import fetch_circuit
from .circuit import (
    Circuit,
    CircuitMetadata,
    decode_outputs,
    encode_group,
    encode_lane_inputs,
    known_answer_results,
    layerize,
    load_circuit,
    load_metadata,
    stats,
    validate,
)
from .config import SessionConfig, input_assignment, load_key_value_file
from .const import (
    CONF_CIRCUIT_PATH,
    CONF_INPUT_ASSIGNMENT,
    CONF_INPUT_FILE,
    CONF_INPUT_SOURCE,
    CONF_LANE_COUNT,
    CONF_LISTEN_ADDRESS,
    CONF_OUTPUT_PARTY,
    CONF_PARTY_ID,
    CONF_SEED,
    CONF_SESSION_ID,
    CONF_SUCCESSOR_ADDRESS,
    CONF_TIMEOUT_SECONDS,
    DEFAULT_BENCH_REPETITIONS,
    DEFAULT_LANE_COUNT,
    DEFAULT_LOG_LEVEL,
    DEFAULT_NAME,
    DEFAULT_OUTPUT_PARTY,
    ENV_LOG_LEVEL,
    EXIT_OK,
    EXIT_PARSE,
    FPGA_CLOCK_HZ,
    HIGH_CLOCK_HZ,
    INITIATION_INTERVAL,
    INPUT_SOURCE_DEALER_FILE,
    INPUT_SOURCES,
    MESSAGE_TYPES,
    PARTY_IDS,
    PER_INSTANCE_UTILIZATION_PERCENT,
    REALISTIC_USABLE_FRACTION,
    UNIT_GBPS,
    UNIT_PERCENTAGE,
    UNIT_SECONDS,
)
from .engine import (
    TRANSPORT_MEMORY,
    TRANSPORT_TCP,
    SessionReport,
    run_local_simulation,
    run_party,
)
from .exceptions import ConfigError, InputLengthError, RingMpcError
from .randomness import RandomSource
from .share_file import read_share_file, reconstruct_files, write_bundle
from .sharing import BitVector, split_secret
from .transport import TrafficCounters

_LOGGER = logging.getLogger(__name__)

BENCH_TRANSPORTS = {"local": TRANSPORT_MEMORY, "tcp": TRANSPORT_TCP}


def setup_logging() -> None:
    """Apply the log level from the environment."""
    level = os.environ.get(ENV_LOG_LEVEL, DEFAULT_LOG_LEVEL).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


class Output:
    """Writes either aligned text or one JSON record per line."""

    def __init__(self, as_json: bool, stream: TextIO | None = None) -> None:
        self.as_json = as_json
        self.stream = stream or sys.stdout

    def record(self, kind: str, text: str | None = None, /, **fields: Any) -> None:
        if self.as_json:
            line = json.dumps({"record": kind, **fields}, sort_keys=True)
            print(line, file=self.stream)
        elif text is not None:
            print(text, file=self.stream)

    def text(self, text: str) -> None:
        if not self.as_json:
            print(text, file=self.stream)


# Input helpers


def _hex_values(text: str) -> list[int]:
    try:
        return [int(v.strip(), 16) for v in text.split(",") if v.strip()]
    except ValueError as err:
        raise ConfigError(
            f"inputs must be comma-separated hex values, got {text!r}"
        ) from err


def _hex_width(bits: int) -> int:
    return max(1, (bits + 3) // 4)


def _format_group(value: int, bits: int) -> str:
    return f"{value:0{_hex_width(bits)}x}"


def lane_matrix(
    c: Circuit,
    meta: CircuitMetadata,
    rows: Sequence[str] | None,
    lanes: int | None,
    random_seed: int | None = None,
    random_inputs: bool = False,
) -> np.ndarray:
    """Input wire matrix (wires, lanes) from `--inputs` rows or random draws."""
    if random_inputs:
        count = lanes or DEFAULT_LANE_COUNT
        source = RandomSource(random_seed, "inputs")
        bits = source.random_bits(c.input_wire_count * count)
        return bits.bits.reshape(c.input_wire_count, count).copy()
    if not rows:
        raise ConfigError("give --inputs (one per lane) or --random", "inputs")
    matrix = encode_lane_inputs(c, meta, [_hex_values(row) for row in rows])
    if lanes is not None and matrix.shape[1] != lanes:
        if matrix.shape[1] != 1:
            raise InputLengthError(f"{matrix.shape[1]} input rows for {lanes} lanes")
        matrix = np.repeat(matrix, lanes, axis=1)
    return matrix


def _decode_lanes(
    c: Circuit, meta: CircuitMetadata, outputs: np.ndarray
) -> list[list[str]]:
    lanes = []
    for lane in range(outputs.shape[1]):
        values = decode_outputs(c, meta, outputs[:, lane])
        lanes.append(
            [_format_group(v, width) for v, width in zip(values, c.output_groups)]
        )
    return lanes


def _emit_outputs(
    out: Output, c: Circuit, meta: CircuitMetadata, outputs: np.ndarray
) -> None:
    for lane, values in enumerate(_decode_lanes(c, meta, outputs)):
        out.record(
            "output", f"lane {lane}: {' '.join(values)}", lane=lane, outputs=values
        )


def _emit_traffic(out: Output, counters: dict[int, TrafficCounters]) -> None:
    for party, traffic in sorted(counters.items()):
        sent = {MESSAGE_TYPES[t]: vars(c) for t, c in traffic.sent.items()}
        summary = ", ".join(
            f"{name}={counts['messages']} msg/{counts['payload_bytes'] * 8} bits"
            for name, counts in sent.items()
            if counts["messages"]
        )
        out.record(
            "traffic",
            f"party {party} sent: {summary or 'nothing'}",
            party=party,
            **traffic.as_dict(),
        )


def _emit_summary(out: Output, report: SessionReport) -> None:
    out.record(
        "summary",
        f"{report.and_count} AND gates x {report.lane_count} lanes, "
        f"AND depth {report.and_depth}, {report.seconds:.4f} {UNIT_SECONDS}",
        and_count=report.and_count,
        and_depth=report.and_depth,
        lanes=report.lane_count,
        seconds=report.seconds,
    )


# Commands


def cmd_circuit(args: argparse.Namespace, out: Output) -> int:
    if args.action == "fetch":
        return _fetch_circuit(args, out)
    c = load_circuit(args.path)
    if args.action == "validate":
        report = validate(c)
        for error in report.errors:
            out.record("error", f"error: {error}", message=error)
        meta = load_metadata(args.path)
        results = known_answer_results(c, meta) if report.passed else []
        kat_ok = all(results)
        for index, passed in enumerate(results):
            out.record(
                "known_answer",
                f"known answer {index}: {'PASS' if passed else 'FAIL'}",
                index=index,
                passed=passed,
            )
        ok = report.passed and kat_ok
        out.record(
            "validate", "OK" if ok else "FAILED", path=str(args.path), passed=ok
        )
        return EXIT_OK if ok else EXIT_PARSE

    if args.action == "stats":
        s = stats(c)
        counts = " ".join(f"{k}={v}" for k, v in s.counts.items())
        out.record(
            "stats",
            f"gates {s.gate_count}, wires {s.wire_count}, {counts}, "
            f"AND depth {s.and_depth}",
            **s.as_dict(),
        )
        return EXIT_OK

    layering = layerize(c)
    out.record(
        "layers",
        f"AND depth {layering.and_depth}",
        and_depth=layering.and_depth,
        layer_count=len(layering.layers),
    )
    for index, layer in enumerate(layering.layers):
        out.record(
            "layer",
            f"{index:5d}  {layer.kind.value:5s}  depth {layer.depth:4d}  "
            f"{len(layer.gates)} gates",
            index=index,
            kind=layer.kind.value,
            depth=layer.depth,
            gates=len(layer.gates),
        )
    return EXIT_OK


def _fetch_circuit(args: argparse.Namespace, out: Output) -> int:
    if not args.url:
        raise ConfigError("circuit fetch needs --url", "url")
    fetched = fetch_circuit(args.url, args.path, args.sha256)
    out.record(
        "fetch",
        f"stored {fetched.path}: {fetched.and_count} AND gates, "
        f"{fetched.known_answers} known answers passed, sha256 {fetched.sha256}",
        path=str(fetched.path),
        sha256=fetched.sha256,
        and_count=fetched.and_count,
        known_answers=fetched.known_answers,
    )
    return EXIT_OK


def cmd_share(args: argparse.Namespace, out: Output) -> int:
    rng = RandomSource(args.seed, "share")
    if args.circuit:
        c = load_circuit(args.circuit)
        meta = load_metadata(args.circuit)
        matrix = lane_matrix(c, meta, args.inputs, args.lanes, args.seed, args.random)
        secret = BitVector.from_array(matrix.reshape(-1))
    elif args.input:
        data = Path(args.input).read_bytes()
        if args.hex:
            try:
                data = bytes.fromhex(data.decode().strip())
            except ValueError as err:
                raise ConfigError(f"{args.input} is not valid hex") from err
        secret = BitVector.from_bytes(data)
    else:
        raise ConfigError("share needs --input or --circuit", "input")
    paths = write_bundle(split_secret(secret, rng), args.out)
    for party, path in zip(PARTY_IDS, paths):
        out.record(
            "share_file",
            f"party {party}: {path}",
            party=party,
            path=str(path),
            bits=len(secret),
        )
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace, out: Output) -> int:
    shares = [read_share_file(path) for path in args.files]
    secret = reconstruct_files(shares, pairwise=args.pairwise)
    data = secret.to_bytes()
    if args.output:
        Path(args.output).write_bytes(data)
    out.record(
        "plaintext",
        None if args.output else data.hex(),
        bits=len(secret),
        hex=data.hex(),
        path=args.output,
    )
    if args.output:
        out.text(f"wrote {len(secret)} bits to {args.output}")
    return EXIT_OK


def session_config(args: argparse.Namespace) -> SessionConfig:
    """Config file values, overridden by any flags given."""
    values: dict[str, Any] = load_key_value_file(args.config) if args.config else {}
    flags = {
        CONF_PARTY_ID: args.party_id,
        CONF_LISTEN_ADDRESS: args.listen,
        CONF_SUCCESSOR_ADDRESS: args.successor,
        CONF_CIRCUIT_PATH: args.circuit,
        CONF_LANE_COUNT: args.lanes,
        CONF_SEED: args.seed,
        CONF_TIMEOUT_SECONDS: args.timeout,
        CONF_OUTPUT_PARTY: args.output_party,
        CONF_INPUT_SOURCE: args.input_source,
        CONF_INPUT_FILE: args.input_file,
        CONF_INPUT_ASSIGNMENT: args.input_assignment,
        CONF_SESSION_ID: args.session_id,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    return SessionConfig.from_mapping(values)


def _own_group_values(
    c: Circuit, meta: CircuitMetadata, config: SessionConfig
) -> dict[int, np.ndarray]:
    assignment = config.input_assignment or {}
    groups = sorted(g for g, p in assignment.items() if p == config.party_id)
    if not groups:
        return {}
    if config.input_file is None:
        raise ConfigError("party-file mode needs an input file", CONF_INPUT_FILE)
    rows = [
        _hex_values(line)
        for line in config.input_file.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if len(rows) == 1:
        rows = rows * config.lane_count
    if len(rows) != config.lane_count or any(len(r) != len(groups) for r in rows):
        raise InputLengthError(
            f"{config.input_file} needs {config.lane_count} lines of "
            f"{len(groups)} hex values"
        )
    return {
        group: np.stack(
            [encode_group(c, meta, group - 1, row[k]) for row in rows], axis=1
        )
        for k, group in enumerate(groups)
    }


def cmd_run(args: argparse.Namespace, out: Output) -> int:
    config = session_config(args)
    c = load_circuit(config.circuit_path)
    meta = load_metadata(config.circuit_path)
    lanes = config.lane_count
    input_shares = own_values = None
    if config.input_source == INPUT_SOURCE_DEALER_FILE:
        if config.input_file is None:
            raise ConfigError(
                "dealer-file mode needs an input share file", CONF_INPUT_FILE
            )
        party_share = read_share_file(config.input_file)
        if party_share.party_id != config.party_id:
            raise ConfigError(
                f"{config.input_file} belongs to party {party_share.party_id}",
                CONF_INPUT_FILE,
            )
        if len(party_share.share) != c.input_wire_count * lanes:
            raise InputLengthError(
                f"share file holds {len(party_share.share)} bits, circuit needs "
                f"{c.input_wire_count} wires x {lanes} lanes"
            )
        input_shares = [
            party_share.share.slice(w * lanes, (w + 1) * lanes)
            for w in range(c.input_wire_count)
        ]
    else:
        own_values = _own_group_values(c, meta, config)

    outcome = asyncio.run(run_party(config, c, input_shares, own_values))
    if outcome.outputs is not None:
        _emit_outputs(out, c, meta, outcome.outputs)
    _emit_traffic(out, outcome.report.counters)
    _emit_summary(out, outcome.report)
    return EXIT_OK


def _assignment_arg(value: str | None) -> dict[int, int] | None:
    if value is None:
        return None
    try:
        return input_assignment(value)
    except vol.Invalid as err:
        raise ConfigError(str(err), CONF_INPUT_ASSIGNMENT) from err


def cmd_run_local(args: argparse.Namespace, out: Output) -> int:
    c = load_circuit(args.circuit)
    meta = load_metadata(args.circuit)
    matrix = lane_matrix(c, meta, args.inputs, args.lanes, args.seed, args.random)
    result = asyncio.run(
        run_local_simulation(
            c,
            matrix,
            seed=args.seed,
            output_party=args.output_party,
            input_assignment=_assignment_arg(args.input_assignment),
            transport=BENCH_TRANSPORTS[args.transport],
        )
    )
    _emit_outputs(out, c, meta, result.outputs)
    _emit_traffic(out, result.report.counters)
    _emit_summary(out, result.report)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, out: Output) -> int:
    if args.repetitions < 1:
        raise ConfigError("repetitions must be at least 1", "repetitions")
    if args.lanes < 1:
        raise ConfigError("lanes must be at least 1", CONF_LANE_COUNT)
    c = load_circuit(args.circuit)
    meta = load_metadata(args.circuit)
    matrix = lane_matrix(c, meta, None, args.lanes, args.seed, random_inputs=True)

    async def repeat() -> list[SessionReport]:
        reports = []
        for rep in range(args.repetitions):
            seed = None if args.seed is None else args.seed + rep
            result = await run_local_simulation(
                c, matrix, seed=seed, transport=BENCH_TRANSPORTS[args.transport]
            )
            reports.append(result.report)
        return reports

    report = SessionReport.combine(asyncio.run(repeat()))
    measured = perf_model.measure_throughput(report)
    _LOGGER.info(
        "📊 Bench: %.0f ANDs/s, %.1f AES/s over %d repetitions",
        measured.ands_per_sec,
        measured.equivalent_aes_per_sec,
        args.repetitions,
    )
    out.record(
        "bench",
        f"{args.repetitions} x {c.and_count} AND gates x {args.lanes} lanes over "
        f"{args.transport}: {measured.seconds:.4f} {UNIT_SECONDS}\n"
        f"  ANDs/s      {measured.ands_per_sec:,.0f}\n"
        f"  AES/s       {measured.equivalent_aes_per_sec:,.1f}\n"
        f"  payload     {measured.payload_gbps:.6f} {UNIT_GBPS}",
        transport=args.transport,
        repetitions=args.repetitions,
        lanes=args.lanes,
        **vars(measured),
    )
    return EXIT_OK


def _checked_rows(out: Output, rows, columns: Sequence[tuple[str, Callable]]) -> bool:
    table = [[fn(r.model) for _, fn in columns] + [r.passed] for r in rows]
    out.text(perf_model.format_table([h for h, _ in columns] + ["check"], table))
    for r in rows:
        out.record("model_row", **r.as_dict())
    return all(r.passed for r in rows)


def cmd_model(args: argparse.Namespace, out: Output) -> int:
    if args.action == "cpu-table":
        rows = perf_model.cpu_table(args.ands_per_aes, args.overhead)
        _checked_rows(
            out,
            rows,
            [
                ("cores", lambda m: m.cores),
                ("AES/s", lambda m: m.reported_aes_per_sec),
                (f"{UNIT_GBPS}/serv.", lambda m: m.reported_gbps),
                (f"{UNIT_GBPS} w/over.", lambda m: m.predicted_gbps_with_overhead),
                (f"error {UNIT_PERCENTAGE}", lambda m: m.error_percent),
            ],
        )
    elif args.action == "fpga-table":
        rows = perf_model.fpga_table(args.freq, args.width, args.ii, args.ands_per_aes)
        _checked_rows(
            out,
            rows,
            [
                ("AND cores", lambda m: m.and_cores),
                ("bits", lambda m: m.bits_per_round),
                (UNIT_GBPS, lambda m: m.gbps),
                ("M AES/s", lambda m: m.aes_per_sec / 1e6),
            ],
        )
        _checked_rows(
            out,
            perf_model.pipelined_checks(args.width, args.ands_per_aes),
            [
                ("MHz", lambda m: m.freq_hz / 1e6),
                ("ii", lambda m: m.initiation_interval),
                (UNIT_GBPS, lambda m: m.gbps),
            ],
        )
    elif args.action == "capacity":
        fraction = REALISTIC_USABLE_FRACTION if args.realistic else args.fraction
        estimate = perf_model.capacity_estimate(args.utilization, fraction, args.ii)
        instances = args.instances if args.instances is not None else estimate.instances
        ops = perf_model.ops_per_cycle(instances, args.ii)
        gbps = perf_model.saturation_gbps(ops, args.width, args.freq) if ops else 0.0
        out.record(
            "capacity",
            f"{estimate.instances} instances fit; {instances} instances at "
            f"ii={args.ii} give {ops} ops/cycle = {gbps:.1f} {UNIT_GBPS} at "
            f"{args.freq / 1e6:g} MHz",
            instances=estimate.instances,
            evaluated_instances=instances,
            ops_per_cycle=ops,
            gbps=gbps,
        )
    elif args.action == "fit":
        points = (
            _points_arg(args.points) if args.points else perf_model.UTILIZATION_POINTS
        )
        fit = perf_model.utilization_fit(points)
        out.record(
            "fit",
            f"slope {fit.slope:.4f} {UNIT_PERCENTAGE}/core, "
            f"intercept {fit.intercept:.3f}, r^2 {fit.r_squared:.4f}",
            slope=fit.slope,
            intercept=fit.intercept,
            r_squared=fit.r_squared,
        )
    elif args.action == "extrapolate":
        e = perf_model.cpu_saturation_extrapolation(
            args.aes, args.gbps, args.usage, args.cores
        )
        out.record(
            "extrapolation",
            f"1 core at 100%: {perf_model.sig3(e.single_core_gbps):g} {UNIT_GBPS}, "
            f"{e.single_core_aes_per_sec:,.0f} AES/s\n"
            f"{e.cores} cores: {perf_model.sig3(e.total_gbps):g} {UNIT_GBPS}, "
            f"{e.total_aes_per_sec / 1e6:.2f} M AES/s",
            **vars(e),
        )
    else:
        f = perf_model.fabric_for_bandwidth(
            args.target_gbps, None, args.freq, args.width, args.ii
        )
        out.record(
            "fabric",
            f"{f.and_cores} AND cores reach {f.achieved_gbps:.1f} {UNIT_GBPS}; "
            f"predicted utilization {f.utilization_percent:.1f}{UNIT_PERCENTAGE}",
            **vars(f),
        )
    return EXIT_OK


def _points_arg(text: str) -> list[tuple[float, float]]:
    try:
        pairs = (item.partition(":") for item in text.split(",") if item.strip())
        return [(float(x), float(y)) for x, _, y in pairs]
    except ValueError as err:
        raise ConfigError(
            f"points must look like 0:3.2,3:5.53, got {text!r}"
        ) from err


MODEL_DEFAULTS = {
    # action: (clock Hz, initiation interval)
    "cpu-table": (FPGA_CLOCK_HZ, INITIATION_INTERVAL),
    "fpga-table": (FPGA_CLOCK_HZ, INITIATION_INTERVAL),
    "capacity": (HIGH_CLOCK_HZ, INITIATION_INTERVAL),
    "fit": (FPGA_CLOCK_HZ, INITIATION_INTERVAL),
    "extrapolate": (FPGA_CLOCK_HZ, INITIATION_INTERVAL),
    "fabric": (FPGA_CLOCK_HZ, 1),
}


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=DEFAULT_NAME, description="Three-party replicated secret sharing engine"
    )
    parser.add_argument("--json", action="store_true", help="Emit JSON-lines records")
    commands = parser.add_subparsers(dest="command", required=True)

    circuit = commands.add_parser(
        "circuit", help="Inspect or fetch a Bristol-fashion circuit"
    )
    circuit.add_argument("action", choices=["validate", "stats", "layers", "fetch"])
    circuit.add_argument("path", type=Path)
    circuit.add_argument("--url", help="Where to download the circuit from (fetch)")
    circuit.add_argument("--sha256", help="Expected SHA-256 of the download (fetch)")
    circuit.set_defaults(handler=cmd_circuit)

    def add_inputs(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--inputs",
            action="append",
            help="Comma-separated hex value per input group; repeat once per lane",
        )
        p.add_argument("--random", action="store_true", help="Draw random inputs")
        p.add_argument("--lanes", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)

    share = commands.add_parser("share", help="Split a secret into three share files")
    share.add_argument("--input", help="File to share (raw bytes)")
    share.add_argument("--hex", action="store_true", help="Read --input as hex text")
    share.add_argument("--circuit", help="Share circuit inputs instead of a file")
    share.add_argument("--out", required=True, help="Output prefix")
    add_inputs(share)
    share.set_defaults(handler=cmd_share)

    rec = commands.add_parser("reconstruct", help="Recover a secret from share files")
    rec.add_argument("files", nargs="+")
    rec.add_argument("--pairwise", action="store_true", help="Use two adjacent shares")
    rec.add_argument("--output", help="Write plaintext bytes here")
    rec.set_defaults(handler=cmd_reconstruct)

    run = commands.add_parser("run", help="Run one party over TCP")
    run.add_argument("--config", help="Flat key = value config file")
    run.add_argument("--party-id", type=int)
    run.add_argument("--listen")
    run.add_argument("--successor")
    run.add_argument("--circuit")
    run.add_argument("--lanes", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--timeout", type=float)
    run.add_argument("--output-party", type=int)
    run.add_argument("--input-source", choices=INPUT_SOURCES)
    run.add_argument("--input-file")
    run.add_argument("--input-assignment", help="group:party pairs, e.g. 1:1,2:2")
    run.add_argument("--session-id")
    run.set_defaults(handler=cmd_run)

    local = commands.add_parser(
        "run-local", help="Run all three parties in this process"
    )
    local.add_argument("--circuit", required=True)
    add_inputs(local)
    local.add_argument(
        "--output-party", type=int, default=DEFAULT_OUTPUT_PARTY, choices=PARTY_IDS
    )
    local.add_argument(
        "--input-assignment", help="Share inputs from parties, e.g. 1:1,2:2"
    )
    local.add_argument(
        "--transport", choices=sorted(BENCH_TRANSPORTS), default="local"
    )
    local.set_defaults(handler=cmd_run_local)

    bench = commands.add_parser("bench", help="Measure throughput")
    bench.add_argument("--circuit", required=True)
    bench.add_argument("--lanes", type=int, default=DEFAULT_LANE_COUNT)
    bench.add_argument("--repetitions", type=int, default=DEFAULT_BENCH_REPETITIONS)
    bench.add_argument("--transport", choices=sorted(BENCH_TRANSPORTS), default="local")
    bench.add_argument("--seed", type=int, default=None)
    bench.set_defaults(handler=cmd_bench)

    model = commands.add_parser("model", help="Analytic throughput model")
    model.add_argument("action", choices=list(MODEL_DEFAULTS))
    model.add_argument("--ands-per-aes", type=int, default=perf_model.ANDS_PER_AES)
    model.add_argument("--overhead", type=float, default=perf_model.TCP_IP_OVERHEAD)
    model.add_argument("--freq", type=float, default=None, help="Clock in Hz")
    model.add_argument("--width", type=int, default=perf_model.AND_MODULE_WIDTH)
    model.add_argument("--ii", type=int, default=None, help="Initiation interval")
    model.add_argument(
        "--utilization", type=float, default=PER_INSTANCE_UTILIZATION_PERCENT
    )
    model.add_argument("--fraction", type=float, default=1.0)
    model.add_argument(
        "--realistic",
        action="store_true",
        help="Assume only 70%% of the fabric is usable",
    )
    model.add_argument("--instances", type=int, default=None)
    model.add_argument("--points", help="x:y pairs, e.g. 0:3.2,3:5.53")
    model.add_argument("--aes", type=float, default=perf_model.CPU_REFERENCE[0][1])
    model.add_argument("--gbps", type=float, default=perf_model.CPU_REFERENCE[0][2])
    model.add_argument("--usage", type=float, default=perf_model.MEASURED_CPU_USAGE)
    model.add_argument("--cores", type=int, default=perf_model.MAX_CPU_CORES)
    model.add_argument("--target-gbps", type=float, default=200.0)
    model.set_defaults(handler=cmd_model)
    return parser


def main(argv: Sequence[str] | None = None, stream: TextIO | None = None) -> int:
    """Entry point; returns the process exit code."""
    setup_logging()
    args = build_arg_parser().parse_args(argv)
    if args.command == "model":
        freq, ii = MODEL_DEFAULTS[args.action]
        args.freq = freq if args.freq is None else args.freq
        args.ii = ii if args.ii is None else args.ii
    out = Output(args.json, stream)
    try:
        return args.handler(args, out)
    except RingMpcError as err:
        phase = f" during {err.phase}" if err.phase else ""
        _LOGGER.error("%s failed%s: %s", args.command, phase, err)
        out.record(
            "error",
            None,
            error=type(err).__name__,
            message=str(err),
            phase=err.phase,
            exit_code=err.exit_code,
        )
        print(f"error{phase}: {err}", file=sys.stderr)
        return err.exit_code
    except OSError as err:
        _LOGGER.error("%s failed: %s", args.command, err)
        print(f"error: {err}", file=sys.stderr)
        return ConfigError.exit_code
