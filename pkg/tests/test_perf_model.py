"""Tests for the analytic throughput model."""

import pytest

from ring_mpc.const import (
    HIGH_CLOCK_HZ,
    REALISTIC_USABLE_FRACTION,
    SATURATION_CLOCK_HZ,
)
from ring_mpc.engine import SessionReport
from ring_mpc.exceptions import ModelInputError
from ring_mpc.perf_model import (
    CPU_REFERENCE,
    capacity_estimate,
    cpu_bandwidth,
    cpu_model_row,
    cpu_saturation_extrapolation,
    cpu_table,
    fabric_for_bandwidth,
    format_table,
    fpga_table,
    fpga_throughput,
    measure_throughput,
    ops_per_cycle,
    pipelined_checks,
    saturation_gbps,
    sig3,
    utilization_fit,
)
from ring_mpc.transport import TrafficCounters


def test_cpu_single_core_row():
    row = cpu_model_row(1, 100103, 0.572)
    assert row.predicted_gbps_with_overhead == pytest.approx(0.5595, abs=1e-4)
    assert row.error_percent == pytest.approx(2.189, abs=1e-3)


def test_cpu_twenty_core_row():
    row = cpu_model_row(20, 1324117, 7.38)
    assert row.predicted_gbps_with_overhead == pytest.approx(7.4006, abs=1e-4)
    assert row.error_percent == pytest.approx(0.279, abs=1e-3)


def test_cpu_table_reproduces_every_row():
    rows = cpu_table()
    assert len(rows) == len(CPU_REFERENCE)
    assert all(row.passed for row in rows)


def test_cpu_table_detects_a_wrong_constant():
    assert not all(row.passed for row in cpu_table(ands_per_aes=6400))


def test_cpu_bandwidth_without_overhead():
    assert cpu_bandwidth(1e6, overhead=0.0) == pytest.approx(5.44)


def test_fpga_single_core():
    row = fpga_throughput(1)
    assert row.bits_per_round == 128
    assert row.gbps == pytest.approx(2.667, abs=1e-3)
    assert row.aes_per_sec == pytest.approx(490196, abs=1)


def test_fpga_table_reproduces_every_row():
    rows = fpga_table()
    assert [row.model.and_cores for row in rows] == [1, 3, 12, 24, 48, 60]
    assert all(row.passed for row in rows)
    assert rows[-1].model.gbps == pytest.approx(160.0)


def test_pipelined_core_spot_checks():
    assert fpga_throughput(1, SATURATION_CLOCK_HZ, initiation_interval=1).gbps == (
        pytest.approx(10.0, abs=0.01)
    )
    assert fpga_throughput(1, HIGH_CLOCK_HZ, initiation_interval=1).gbps == (
        pytest.approx(25.6)
    )
    rows = pipelined_checks()
    assert [row.model.freq_hz for row in rows] == [SATURATION_CLOCK_HZ, HIGH_CLOCK_HZ]
    assert all(row.passed for row in rows)


@pytest.mark.parametrize(
    "cores, freq_hz, ii",
    [(1, 125e6, 6), (7, 78.13e6, 1), (13, 200e6, 3), (60, 250e6, 2), (5, 1e6, 7)],
)
def test_fpga_throughput_scales_linearly(cores, freq_hz, ii):
    base = fpga_throughput(cores, freq_hz, initiation_interval=ii)
    for factor in (2, 3, 10):
        scaled = fpga_throughput(cores * factor, freq_hz, initiation_interval=ii)
        assert scaled.gbps == pytest.approx(base.gbps * factor)
        assert scaled.aes_per_sec == pytest.approx(base.aes_per_sec * factor)
        assert scaled.bits_per_round == base.bits_per_round * factor
        faster = fpga_throughput(cores, freq_hz * factor, initiation_interval=ii)
        assert faster.gbps == pytest.approx(base.gbps * factor)
        slower = fpga_throughput(cores, freq_hz, initiation_interval=ii * factor)
        assert slower.gbps == pytest.approx(base.gbps / factor)


def test_capacity():
    assert capacity_estimate().instances == 75
    realistic = capacity_estimate(usable_fraction=REALISTIC_USABLE_FRACTION)
    assert realistic.instances == 53
    assert realistic.ops_per_cycle == 8


def test_saturation():
    assert ops_per_cycle(48) == 8
    assert saturation_gbps(8, freq_hz=HIGH_CLOCK_HZ) == pytest.approx(204.8)


def test_utilization_fit():
    fit = utilization_fit()
    assert fit.slope == pytest.approx(1.686, abs=1e-3)
    assert fit.intercept == pytest.approx(0.099, abs=1e-3)
    assert 0.98 <= fit.r_squared <= 1.0
    assert fit.r_squared == pytest.approx(0.9915, abs=1e-3)


def test_exact_fit_on_a_line():
    fit = utilization_fit([(0, 1.0), (1, 3.0), (2, 5.0)])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.predict(10) == pytest.approx(21.0)


@pytest.mark.parametrize("points", [[(1, 2.0)], [(3, 1.0), (3, 2.0)]])
def test_degenerate_fits(points):
    with pytest.raises(ModelInputError):
        utilization_fit(points)


def test_cpu_extrapolation():
    e = cpu_saturation_extrapolation()
    assert sig3(e.single_core_gbps) == pytest.approx(0.780)
    assert e.single_core_aes_per_sec == pytest.approx(136566, abs=1)
    assert sig3(e.total_gbps) == pytest.approx(15.6)
    assert e.total_aes_per_sec == pytest.approx(2.73e6, rel=1e-3)


def test_fabric_for_200_gbps():
    estimate = fabric_for_bandwidth(200)
    assert estimate.and_cores == 13
    assert estimate.achieved_gbps >= 200
    assert estimate.utilization_percent == pytest.approx(22.0, abs=0.1)


@pytest.mark.parametrize(
    "call",
    [
        lambda: cpu_bandwidth(0),
        lambda: cpu_bandwidth(1, overhead=-0.1),
        lambda: fpga_throughput(0),
        lambda: fpga_throughput(1, initiation_interval=0),
        lambda: capacity_estimate(per_instance_utilization_percent=0),
        lambda: capacity_estimate(usable_fraction=1.5),
        lambda: ops_per_cycle(-1),
        lambda: cpu_saturation_extrapolation(cpu_usage=0),
        lambda: fabric_for_bandwidth(-5),
    ],
)
def test_invalid_model_inputs(call):
    with pytest.raises(ModelInputError):
        call()


def test_measure_throughput_is_consistent():
    counters = TrafficCounters()
    counters.record_sent(0x02, 680)
    report = SessionReport(5440, 40, 1, 0.5, {1: counters})
    measured = measure_throughput(report)
    assert measured.payload_bits == 5440
    assert measured.ands_per_sec == pytest.approx(10880)
    aes = measured.equivalent_aes_per_sec
    assert aes * 5440 == pytest.approx(measured.ands_per_sec)
    assert measured.payload_gbps == pytest.approx(5440 / 0.5 / 1e9)


def test_measure_throughput_needs_duration():
    report = SessionReport(1, 1, 1, 0.0, {1: TrafficCounters()})
    with pytest.raises(ModelInputError):
        measure_throughput(report)


def test_format_table():
    rows = [[1, 0.55951, True], [20, 7.4, False]]
    text = format_table(["cores", "Gbps", "check"], rows)
    lines = text.splitlines()
    assert len(lines) == 4
    assert "0.56" in lines[2] and "PASS" in lines[2]
    assert "FAIL" in lines[3]
