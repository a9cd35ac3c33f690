"""Arithmetic ceilings: peaks from issue-slot counting, ridge points, and
the largest square matrix multiply that fits in tile memory."""

import math

import pytest

from bspsim import roofline


def test_peak_flops_from_issue_slots(params):
    tiles = params.tiles_per_processor
    clock = params.clock_hz
    assert roofline.peak_flops(params) == tiles * 16 * clock
    assert roofline.peak_flops(params) == 31_129_600_000_000
    assert roofline.peak_flops(params, precision="mixed") == tiles * 64 * clock
    assert roofline.peak_flops(params, precision="mixed") == 124_518_400_000_000
    assert roofline.peak_flops(params, unit="vector") == tiles * 4 * clock
    assert roofline.peak_flops(params, unit="vector",
                               precision="mixed") == tiles * 8 * clock


def test_achievable_is_scaled_peak(params):
    assert roofline.achievable_flops(params) == pytest.approx(
        31_129_600_000_000 * 0.607)
    assert roofline.achievable_flops(params, precision="mixed") \
        == pytest.approx(124_518_400_000_000 * 0.473)


def test_unknown_unit_or_precision_rejected(params):
    with pytest.raises(ValueError):
        roofline.peak_flops(params, unit="tensor")
    with pytest.raises(ValueError):
        roofline.peak_flops(params, precision="double")
    with pytest.raises(ValueError):
        roofline.attainable_flops(params, 0.0)


def test_ridge_intensity(params):
    want = 31_129_600_000_000 / params.peak_read_bps
    assert roofline.ridge_intensity(params) == pytest.approx(want)
    # writes are half the read rate, so the store ridge sits twice as high
    assert roofline.ridge_intensity(params, store_bound=True) \
        == pytest.approx(2 * want)


def test_attainable_two_regimes(params):
    ridge = roofline.ridge_intensity(params)
    low = roofline.attainable_flops(params, ridge / 10)
    assert low == pytest.approx(ridge / 10 * params.peak_read_bps)
    high = roofline.attainable_flops(params, ridge * 10)
    assert high == roofline.peak_flops(params)
    # the sustained roof engages at the same memory slope
    assert roofline.attainable_flops(params, ridge * 10, sustained=True) \
        == roofline.achievable_flops(params)


def test_gemm_max_operand(params):
    for precision, budget, elem in (("single", 104_005_632, 4),
                                    ("mixed", 43_352_064, 2)):
        want = math.isqrt(budget // (3 * elem))
        assert roofline.gemm_max_operand(params, precision) == want
    assert roofline.gemm_max_operand(params) == 2944
    assert roofline.gemm_max_operand(params, "mixed") == 2688


def test_gemm_point_fit_boundary(params):
    edge = roofline.gemm_max_operand(params)
    assert roofline.gemm_point(params, edge).fits
    assert not roofline.gemm_point(params, edge + 1).fits


def test_gemm_point_values(params):
    n = 512
    pt = roofline.gemm_point(params, n)
    assert pt.flops == 2 * n ** 3
    assert pt.bytes_moved == 3 * 4 * n ** 2
    assert pt.intensity == pytest.approx(2 * n / 12)
    # n = 512 sits far beyond the ridge: compute bound at the sustained roof
    assert pt.bound == "compute"
    assert pt.attainable_flops == roofline.achievable_flops(params)
    with pytest.raises(ValueError):
        roofline.gemm_point(params, 0)


def test_gemm_small_n_memory_bound(params):
    # intensity 2n/12 < sustained ridge for tiny n
    pt = roofline.gemm_point(params, 2)
    assert pt.bound == "memory"
    assert pt.attainable_flops == pytest.approx(pt.intensity
                                                * params.peak_read_bps)


def test_summary_table(params):
    table = roofline.summary(params)
    assert table["read_bps"] == params.peak_read_bps
    assert table["write_bps"] == params.peak_write_bps
    assert table["peak_amp_single_flops"] == 31_129_600_000_000
    assert table["peak_amp_mixed_flops"] == 124_518_400_000_000
    assert table["gemm_max_operand_single"] == 2944
    assert table["gemm_max_operand_mixed"] == 2688
    assert set(table) >= {f"achievable_{u}_{p}_flops"
                          for u in roofline.UNITS
                          for p in roofline.PRECISIONS}
