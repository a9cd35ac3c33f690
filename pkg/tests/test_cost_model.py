"""Cost-law oracles: every law checked against hand-computed expected
values frozen here, plus round-trip properties for the calibration fit
and the parameter file writer."""

import math

import pytest

from bspsim.cost_model import (
    IDLE,
    LoadContext,
    apply_hop_calibration,
    calibrate_hop_line,
    host_bandwidth_cap,
    host_transfer,
    load_cost_params,
    memory_latency,
    memory_read_bandwidth,
    memory_write_bandwidth,
    p2p_latency,
    saturation,
    save_cost_params,
    tile_pair_latency_cycles,
    tile_pair_latency_ns,
    transfer_bandwidth,
)
from bspsim.errors import RoutingError
from bspsim.topology import (
    CROSS_COLUMN,
    CROSS_PROCESSOR,
    SAME_COLUMN,
    SAME_ISLAND,
    SAME_TILE,
    TileId,
)


def path(topo, src, dst):
    return topo.tile_route(TileId(*src), TileId(*dst))


# -- saturation curve -------------------------------------------------------

def test_saturation_curve(params):
    assert saturation(None, 100.0) == 1.0
    assert saturation(0, 100.0) == 0.0
    assert saturation(100, 100.0) == 0.5
    # the block curve passes exactly through 95% at 8 KiB by construction
    assert saturation(8192, params.block_half_sat_bytes) == pytest.approx(
        0.95, abs=1e-12)
    with pytest.raises(ValueError):
        saturation(-1, 100.0)


# -- p2p latency ------------------------------------------------------------

def test_idle_latency_by_link_class(topo, params):
    # on-chip / board rung / one rail hop / rung-then-rail
    assert p2p_latency(path(topo, (0, 0), (0, 1)), params) == 133.0
    assert p2p_latency(path(topo, (0, 0), (1, 0)), params) == 633.0
    assert p2p_latency(path(topo, (0, 0), (2, 0)), params) == 524.0
    assert p2p_latency(path(topo, (0, 0), (3, 0)), params) == 779.0


def test_idle_latency_grows_per_hop(topo, params):
    # same-parity rail rides: 524 + 160 per extra hop
    for hops, slot in ((1, 2), (2, 4), (3, 6), (4, 8)):
        got = p2p_latency(path(topo, (0, 0), (slot, 0)), params)
        assert got == 524.0 + 160.0 * (hops - 1)


def test_loaded_latency_stretches_by_class_multiplier(topo, params):
    # saturate every resource: utilization 1 -> latency = idle * multiplier
    full = LoadContext(kind_counts={
        "on_chip_exchange": 1216, "intra_board_bundle": 100,
        "inter_board_rail": 100, "pass_through": 100})
    cases = [
        ((0, 1), 133.0 * 1.2),        # 159.6
        ((1, 0), 633.0 * 4.0),        # 2532
        ((2, 0), 524.0 * 4.8),        # 2515.2
        ((3, 0), 779.0 * 7.7),        # 5998.3
    ]
    for dst, want in cases:
        got = p2p_latency(path(topo, (0, 0), dst), params, full)
        assert got == pytest.approx(want, rel=1e-12)


def test_partial_load_interpolates(topo, params):
    # two transfers on the rung: one competitor of 5.46 over a 55.0 cap
    load = LoadContext(kind_counts={"intra_board_bundle": 2})
    util = 5.46e9 / 55.0e9
    want = 633.0 * (1.0 + 3.0 * util)
    got = p2p_latency(path(topo, (0, 0), (1, 0)), params, load)
    assert got == pytest.approx(want, rel=1e-12)


def test_empty_path_rejected(params):
    with pytest.raises(RoutingError):
        p2p_latency([], params)


def test_load_context_precedence(topo, params):
    hop = path(topo, (0, 0), (0, 1))[1]   # the exchange hop
    ctx = LoadContext(counts={hop.key: 7},
                      kind_counts={"on_chip_exchange": 3}, default_count=2)
    assert ctx.count_for(hop) == 7
    other = path(topo, (1, 0), (1, 1))[1]
    assert ctx.count_for(other) == 3
    egress = path(topo, (0, 0), (0, 1))[0]
    assert ctx.count_for(egress) == 2
    assert LoadContext().utilization(hop, params) == 0.0


# -- bandwidth --------------------------------------------------------------

def test_single_transfer_bandwidth(topo, params):
    per, agg = transfer_bandwidth(path(topo, (0, 0), (0, 1)), None, params)
    assert per == agg == 6.34e9
    per, agg = transfer_bandwidth(path(topo, (0, 0), (1, 0)), None, params)
    assert per == 5.46e9     # rung ceiling binds before the exchange cap
    per, agg = transfer_bandwidth(path(topo, (0, 0), (2, 0)), None, params)
    assert per == 4.99e9


def test_contended_bandwidth_splits_cap(topo, params):
    load = LoadContext(kind_counts={"on_chip_exchange": 1216})
    per, agg = transfer_bandwidth(path(topo, (0, 0), (0, 1)), None, params,
                                  load)
    assert per == pytest.approx(7679.01e9 / 1216, rel=1e-12)
    assert agg == pytest.approx(7679.01e9, rel=1e-12)


def test_finite_size_derates_by_link_saturation(topo, params):
    half = params.link_half_sat_bytes
    per_inf, _ = transfer_bandwidth(path(topo, (0, 0), (1, 0)), None, params)
    per, _ = transfer_bandwidth(path(topo, (0, 0), (1, 0)), int(half), params)
    assert per == pytest.approx(per_inf / 2, rel=1e-12)


# -- memory -----------------------------------------------------------------

def test_memory_read_widths(params):
    peak = 1216 * 16 * 1_600_000_000
    assert params.peak_read_bps == peak == 31_129_600_000_000
    for width, frac in ((128, 0.986), (64, 0.49), (32, 0.244)):
        chip, per_tile = memory_read_bandwidth(params, width_bits=width)
        assert chip == pytest.approx(peak * frac, rel=1e-12)
        assert per_tile == pytest.approx(chip / 1216, rel=1e-12)
    with pytest.raises(ValueError):
        memory_read_bandwidth(params, width_bits=256)


def test_memory_write_half_wide(params):
    chip, _ = memory_write_bandwidth(params)
    assert chip == params.peak_write_bps == 15_564_800_000_000


def test_memory_thread_scaling(params):
    full, _ = memory_read_bandwidth(params)
    half, _ = memory_read_bandwidth(params, threads=3)
    assert half == pytest.approx(full / 2, rel=1e-12)
    with pytest.raises(ValueError):
        memory_read_bandwidth(params, threads=7)


def test_memory_block_saturation(params):
    chip_8k, _ = memory_read_bandwidth(params, block_bytes=8192)
    chip_inf, _ = memory_read_bandwidth(params)
    assert chip_8k == pytest.approx(0.95 * chip_inf, rel=1e-12)


def test_memory_latency_constant(params):
    cycles, ns = memory_latency(params)
    assert cycles == 6
    assert ns == pytest.approx(3.75, rel=1e-12)


# -- on-chip placement ------------------------------------------------------

def test_tile_pair_cycles(params):
    assert tile_pair_latency_cycles(params, SAME_ISLAND) == 59
    assert tile_pair_latency_cycles(params, SAME_COLUMN, island_delta=18) == 95
    # worst case: full island span plus the full fold toward the die edge
    worst = tile_pair_latency_cycles(params, CROSS_COLUMN, island_delta=18,
                                     src_column=8, dst_column=0)
    assert worst == 59 + 2 * 18 + 9 * 7 == 158
    assert tile_pair_latency_ns(params, CROSS_COLUMN, island_delta=18,
                                src_column=8, dst_column=0) == 98.75
    # the return direction is cheaper per column
    back = tile_pair_latency_cycles(params, CROSS_COLUMN, island_delta=18,
                                    src_column=0, dst_column=8)
    assert back == 59 + 36 + 5 * 7 == 130
    with pytest.raises(RoutingError):
        tile_pair_latency_cycles(params, SAME_TILE)
    with pytest.raises(RoutingError):
        tile_pair_latency_cycles(params, CROSS_PROCESSOR)
    with pytest.raises(ValueError):
        tile_pair_latency_cycles(params, CROSS_COLUMN)  # columns required


# -- host link --------------------------------------------------------------

def test_host_caps_tier_structure(params):
    gbps = lambda n: host_bandwidth_cap(params, n) / 1e9
    assert gbps(1) == pytest.approx(5.86)
    assert gbps(2) == pytest.approx(11.35)
    assert gbps(4) == pytest.approx(13.78)
    assert gbps(8) == pytest.approx(27.56)
    assert gbps(16) == pytest.approx(55.04)
    # independent 4-term oracle over every processor count
    for n in range(1, 17):
        want = min(n * 5.86, math.ceil(n / 2) * 11.35,
                   math.ceil(n / 4) * 13.78, 55.04)
        assert gbps(n) == pytest.approx(want, rel=1e-9), n
    with pytest.raises(ValueError):
        host_bandwidth_cap(params, 0)


def test_host_transfer_flat_latency(params):
    for n in (1, 3, 16):
        latency, bw = host_transfer(params, None, n)
        assert latency == 8810.0
        assert bw == host_bandwidth_cap(params, n)
    _, bw_half = host_transfer(params, round(params.host_half_sat_bytes), 16)
    assert bw_half == pytest.approx(host_bandwidth_cap(params, 16) / 2,
                                    rel=1e-4)


# -- calibration ------------------------------------------------------------

def test_hop_line_round_trip(params):
    base, slope = 524.0, 157.0
    samples = [(h, base + slope * (h - 1)) for h in range(1, 8)]
    fit = calibrate_hop_line(samples)
    assert fit.base_ns == pytest.approx(base, rel=1e-6)
    assert fit.per_hop_ns == pytest.approx(slope, rel=1e-6)
    assert fit.residual_rms_ns == pytest.approx(0.0, abs=1e-6)
    assert fit.samples == 7


def test_hop_line_rejects_degenerate_input():
    with pytest.raises(ValueError):
        calibrate_hop_line([(1, 524.0), (1, 530.0)])
    with pytest.raises(ValueError):
        calibrate_hop_line([(0, 10.0), (2, 20.0)])


def test_apply_hop_calibration(params):
    fit = calibrate_hop_line([(1, 500.0), (2, 650.0), (3, 800.0)])
    updated = apply_hop_calibration(params, fit)
    assert updated.per_hop_latency_ns == pytest.approx(150.0, rel=1e-9)
    assert updated.links["inter_board_rail"].base_latency_ns == 500
    # the original parameter set is untouched
    assert params.per_hop_latency_ns == 160.0
    assert params.links["inter_board_rail"].base_latency_ns == 524


def test_cost_params_file_round_trip(tmp_path, bench):
    out = tmp_path / "costs.ini"
    save_cost_params(bench.params, out)
    reloaded = load_cost_params(out, system=bench.topo.spec)
    p, q = bench.params, reloaded
    assert q.per_hop_latency_ns == p.per_hop_latency_ns
    assert q.block_half_sat_bytes == pytest.approx(p.block_half_sat_bytes,
                                                   rel=1e-10)
    assert q.replicated_ingress_bps == p.replicated_ingress_bps
    assert q.width_fraction == p.width_fraction
    assert q.roofline == p.roofline
    assert q.host_system_bps == p.host_system_bps
