"""Analytic throughput model for the ring protocol on CPUs and FPGA fabric.

Every function is pure. Constants live in const.py and can be overridden per
call. Published reference numbers are kept next to the model so tables can be
checked row by row.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .const import (
    AND_MODULE_WIDTH,
    ANDS_PER_AES,
    FPGA_CLOCK_HZ,
    HIGH_CLOCK_HZ,
    INITIATION_INTERVAL,
    MAX_CPU_CORES,
    MEASURED_CPU_USAGE,
    PER_INSTANCE_UTILIZATION_PERCENT,
    SATURATION_CLOCK_HZ,
    TCP_IP_OVERHEAD,
)
from .exceptions import ModelInputError

if TYPE_CHECKING:
    from .engine import SessionReport

_LOGGER = logging.getLogger(__name__)

GIGA = 1e9

# (cores, AES/s, Gbps per server, Gbps with overhead, error %)
CPU_REFERENCE = (
    (1, 100103, 0.572, 0.559, 2.19),
    (5, 530408, 2.99, 2.96, 0.85),
    (10, 975237, 5.47, 5.45, 0.35),
    (16, 1242310, 6.95, 6.94, 0.10),
    (20, 1324117, 7.38, 7.40, 0.28),
)
CPU_GBPS_TOLERANCE = 0.005
CPU_ERROR_TOLERANCE_PP = 0.1

# (AND cores, bits per round, Gbps, AES/s) at 125 MHz, initiation interval 6
FPGA_REFERENCE = (
    (1, 128, 2.67, 0.490e6),
    (3, 384, 8.00, 1.47e6),
    (12, 1536, 32.0, 5.89e6),
    (24, 3072, 64.0, 11.8e6),
    (48, 6144, 128.0, 23.5e6),
    (60, 7680, 160.0, 29.4e6),
)
FPGA_GBPS_TOLERANCE = 0.05
FPGA_AES_RELATIVE_TOLERANCE = 0.01

# (clock Hz, Gbps) for one AND core at initiation interval 1
PIPELINED_REFERENCE = (
    (SATURATION_CLOCK_HZ, 10.0),
    (HIGH_CLOCK_HZ, 25.6),
)

# (AND cores, percent of fabric used)
UTILIZATION_POINTS = (
    (0, 3.2),
    (3, 5.53),
    (12, 14.36),
    (24, 41.26),
    (48, 85.6),
    (60, 98.53),
)


def _positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise ModelInputError(f"{name} must be positive, got {value}")


def sig3(value: float) -> float:
    """Round to three significant figures, the precision the reference tables use."""
    return float(f"{value:.3g}")


@dataclass(frozen=True)
class CpuModelRow:
    cores: int
    reported_aes_per_sec: float
    reported_gbps: float
    predicted_gbps_with_overhead: float
    error_percent: float


@dataclass(frozen=True)
class FpgaModelRow:
    and_cores: int
    bits_per_round: int
    gbps: float
    aes_per_sec: float
    freq_hz: float
    initiation_interval: int


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class CapacityEstimate:
    instances: int
    ops_per_cycle: int


@dataclass(frozen=True)
class ThroughputResult:
    and_bit_operations: int
    payload_bits: int
    seconds: float
    ands_per_sec: float
    equivalent_aes_per_sec: float
    payload_gbps: float


@dataclass(frozen=True)
class Extrapolation:
    """One CPU core scaled to full usage, then to many cores."""

    single_core_gbps: float
    single_core_aes_per_sec: float
    cores: int
    total_gbps: float
    total_aes_per_sec: float


@dataclass(frozen=True)
class FabricEstimate:
    target_gbps: float
    and_cores: int
    achieved_gbps: float
    utilization_percent: float


@dataclass(frozen=True)
class CheckedRow:
    """A model row next to the published numbers it should reproduce."""

    model: CpuModelRow | FpgaModelRow
    published: dict[str, float]
    passed: bool

    def as_dict(self) -> dict[str, object]:
        fields = asdict(self.model)
        return {**fields, "published": self.published, "passed": self.passed}


def cpu_bandwidth(
    aes_per_sec: float,
    ands_per_aes: int = ANDS_PER_AES,
    overhead: float = TCP_IP_OVERHEAD,
) -> float:
    """Gbps one party sends at an AES rate: one bit per AND plus TCP/IP overhead."""
    _positive(aes_per_sec=aes_per_sec, ands_per_aes=ands_per_aes)
    if overhead < 0:
        raise ModelInputError(f"overhead must be non-negative, got {overhead}")
    return aes_per_sec * ands_per_aes * (1 + overhead) / GIGA


def cpu_model_row(
    cores: int,
    aes_per_sec: float,
    reported_gbps: float,
    ands_per_aes: int = ANDS_PER_AES,
    overhead: float = TCP_IP_OVERHEAD,
) -> CpuModelRow:
    _positive(reported_gbps=reported_gbps)
    predicted = cpu_bandwidth(aes_per_sec, ands_per_aes, overhead)
    return CpuModelRow(
        cores=cores,
        reported_aes_per_sec=aes_per_sec,
        reported_gbps=reported_gbps,
        predicted_gbps_with_overhead=predicted,
        error_percent=abs(reported_gbps - predicted) / reported_gbps * 100,
    )


def cpu_table(
    ands_per_aes: int = ANDS_PER_AES, overhead: float = TCP_IP_OVERHEAD
) -> list[CheckedRow]:
    """Model every reference CPU row and check it against the published columns."""
    rows = []
    for cores, aes, gbps, published_pred, published_err in CPU_REFERENCE:
        row = cpu_model_row(cores, aes, gbps, ands_per_aes, overhead)
        passed = (
            abs(row.predicted_gbps_with_overhead - published_pred) <= CPU_GBPS_TOLERANCE
            and abs(row.error_percent - published_err) <= CPU_ERROR_TOLERANCE_PP
        )
        rows.append(
            CheckedRow(
                row,
                {
                    "predicted_gbps_with_overhead": published_pred,
                    "error_percent": published_err,
                },
                passed,
            )
        )
    return rows


def fpga_throughput(
    and_cores: int,
    freq_hz: float = FPGA_CLOCK_HZ,
    width: int = AND_MODULE_WIDTH,
    initiation_interval: int = INITIATION_INTERVAL,
    ands_per_aes: int = ANDS_PER_AES,
) -> FpgaModelRow:
    """Bits per round, Gbps and AES/s for a number of AND cores."""
    _positive(
        and_cores=and_cores,
        freq_hz=freq_hz,
        width=width,
        initiation_interval=initiation_interval,
        ands_per_aes=ands_per_aes,
    )
    bits = and_cores * width
    gbps = bits * freq_hz / initiation_interval / GIGA
    return FpgaModelRow(
        and_cores=and_cores,
        bits_per_round=bits,
        gbps=gbps,
        aes_per_sec=gbps * GIGA / ands_per_aes,
        freq_hz=freq_hz,
        initiation_interval=initiation_interval,
    )


def fpga_table(
    freq_hz: float = FPGA_CLOCK_HZ,
    width: int = AND_MODULE_WIDTH,
    initiation_interval: int = INITIATION_INTERVAL,
    ands_per_aes: int = ANDS_PER_AES,
) -> list[CheckedRow]:
    rows = []
    for cores, bits, gbps, aes in FPGA_REFERENCE:
        row = fpga_throughput(cores, freq_hz, width, initiation_interval, ands_per_aes)
        passed = (
            row.bits_per_round == bits
            and abs(row.gbps - gbps) <= FPGA_GBPS_TOLERANCE
            and abs(row.aes_per_sec - aes) / aes <= FPGA_AES_RELATIVE_TOLERANCE
        )
        rows.append(
            CheckedRow(
                row,
                {"bits_per_round": bits, "gbps": gbps, "aes_per_sec": aes},
                passed,
            )
        )
    return rows


def pipelined_checks(
    width: int = AND_MODULE_WIDTH, ands_per_aes: int = ANDS_PER_AES
) -> list[CheckedRow]:
    """A single fully pipelined AND core against the link rates it saturates."""
    rows = []
    for freq_hz, gbps in PIPELINED_REFERENCE:
        row = fpga_throughput(1, freq_hz, width, 1, ands_per_aes)
        rows.append(
            CheckedRow(
                row,
                {"freq_hz": freq_hz, "gbps": gbps},
                abs(row.gbps - gbps) <= FPGA_GBPS_TOLERANCE,
            )
        )
    return rows


def ops_per_cycle(
    instances: int, initiation_interval: int = INITIATION_INTERVAL
) -> int:
    """AND operations completed per clock by `instances` modules."""
    if instances < 0:
        raise ModelInputError("instances must be non-negative")
    _positive(initiation_interval=initiation_interval)
    return instances // initiation_interval


def capacity_estimate(
    per_instance_utilization_percent: float = PER_INSTANCE_UTILIZATION_PERCENT,
    usable_fraction: float = 1.0,
    initiation_interval: int = INITIATION_INTERVAL,
) -> CapacityEstimate:
    """How many AND modules fit, and how many operations they finish per cycle."""
    if not 0 < per_instance_utilization_percent <= 100:
        raise ModelInputError("per-instance utilization must be in (0, 100]")
    if not 0 < usable_fraction <= 1:
        raise ModelInputError("usable fraction must be in (0, 1]")
    share = usable_fraction * 100 / per_instance_utilization_percent
    instances = math.floor(share + 1e-9)
    return CapacityEstimate(instances, ops_per_cycle(instances, initiation_interval))


def saturation_gbps(
    operations_per_cycle: int,
    width: int = AND_MODULE_WIDTH,
    freq_hz: float = FPGA_CLOCK_HZ,
) -> float:
    """Link bandwidth kept busy by a number of width-bit AND operations per cycle."""
    _positive(operations_per_cycle=operations_per_cycle, width=width, freq_hz=freq_hz)
    return operations_per_cycle * width * freq_hz / GIGA


def utilization_fit(
    points: Sequence[tuple[float, float]] = UTILIZATION_POINTS,
) -> FitResult:
    """Ordinary least squares of utilization against AND cores."""
    if len(points) < 2:
        raise ModelInputError("a fit needs at least two points")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.ptp(x) == 0:
        raise ModelInputError("all x values are equal; the fit is degenerate")
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sum((y - (slope * x + intercept)) ** 2))
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if total == 0 else max(0.0, min(1.0, 1 - residual / total))
    return FitResult(float(slope), float(intercept), r_squared)


def cpu_saturation_extrapolation(
    aes_per_sec: float = CPU_REFERENCE[0][1],
    reported_gbps: float = CPU_REFERENCE[0][2],
    cpu_usage: float = MEASURED_CPU_USAGE,
    cores: int = MAX_CPU_CORES,
) -> Extrapolation:
    """Scale a single-core measurement from its CPU usage to 100%, then to `cores`."""
    _positive(aes_per_sec=aes_per_sec, reported_gbps=reported_gbps, cores=cores)
    if not 0 < cpu_usage <= 1:
        raise ModelInputError("cpu_usage must be in (0, 1]")
    single_gbps = reported_gbps / cpu_usage
    single_aes = aes_per_sec / cpu_usage
    return Extrapolation(
        single_core_gbps=single_gbps,
        single_core_aes_per_sec=single_aes,
        cores=cores,
        total_gbps=single_gbps * cores,
        total_aes_per_sec=single_aes * cores,
    )


def fabric_for_bandwidth(
    target_gbps: float,
    fit: FitResult | None = None,
    freq_hz: float = FPGA_CLOCK_HZ,
    width: int = AND_MODULE_WIDTH,
    initiation_interval: int = 1,
) -> FabricEstimate:
    """AND cores needed to saturate a link, and the fabric share the fit predicts."""
    _positive(target_gbps=target_gbps)
    per_core = fpga_throughput(1, freq_hz, width, initiation_interval).gbps
    cores = math.ceil(target_gbps / per_core - 1e-9)
    fit = fit or utilization_fit()
    return FabricEstimate(
        target_gbps=target_gbps,
        and_cores=cores,
        achieved_gbps=cores * per_core,
        utilization_percent=fit.predict(cores),
    )


def measure_throughput(
    report: "SessionReport", party_id: int = 1, ands_per_aes: int = ANDS_PER_AES
) -> ThroughputResult:
    """Throughput of a finished session, from its AND count and traffic counters.

    Payload bits are whole AND_ROUND bytes as counted on the wire.
    """
    if report.seconds <= 0:
        raise ModelInputError("session duration must be positive")
    ands_per_sec = report.and_bit_operations / report.seconds
    payload_bits = report.and_payload_bits(party_id)
    result = ThroughputResult(
        and_bit_operations=report.and_bit_operations,
        payload_bits=payload_bits,
        seconds=report.seconds,
        ands_per_sec=ands_per_sec,
        equivalent_aes_per_sec=ands_per_sec / ands_per_aes,
        payload_gbps=payload_bits / report.seconds / GIGA,
    )
    _LOGGER.debug("Measured throughput: %s", result)
    return result


def format_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """Right-aligned plain-text table."""
    cells = [[str(h) for h in headers]] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _cell(value: object) -> str:
    if isinstance(value, bool):
        return "PASS" if value else "FAIL"
    if isinstance(value, float):
        return f"{sig3(value):g}"
    return str(value)
