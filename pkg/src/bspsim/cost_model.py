"""Analytical cost laws calibrated against hardware measurements.

Everything here is closed-form: given a path, a size and a contention
description, produce a latency and a bandwidth.  The constants come from
the packaged `reference_costs.ini` (calibrated values) plus the link table
of the machine description.  The superstep engine composes these laws;
this module knows nothing about messages or scheduling.

Conventions: latencies in nanoseconds, rates in bytes/second (integers
where exactness matters), sizes in bytes.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import topology as topo_mod
from .config import asset_path, gbps_to_bps, load_system_spec
from .errors import ConfigError, RoutingError
from .topology import (
    CROSS_COLUMN,
    CROSS_PROCESSOR,
    INTER_PROCESSOR_KINDS,
    LOCAL_MEMORY,
    ON_CHIP_EXCHANGE,
    SAME_COLUMN,
    SAME_ISLAND,
    SAME_TILE,
    TILES_PER_COLUMN,
)


def saturation(size_bytes, half_sat_bytes):
    """Fraction of peak achieved at a finite transfer size.

    The half-saturation size is where half of peak is reached; the curve is
    size / (size + half_sat).  `size_bytes=None` means "asymptotic", i.e. 1.
    """
    if size_bytes is None:
        return 1.0
    if size_bytes < 0:
        raise ValueError("negative transfer size")
    if size_bytes == 0:
        return 0.0
    return size_bytes / (size_bytes + half_sat_bytes)


# ---------------------------------------------------------------------------
# calibrated parameter set


@dataclass(frozen=True)
class RooflineParams:
    amp_flops_per_cycle: dict          # precision -> flops/cycle/tile
    vector_flops_per_cycle: dict
    achievable_fraction: dict          # precision -> measured fraction of peak
    gemm_memory_budget: dict           # precision -> bytes (at reference capacity)
    gemm_element_bytes: dict           # precision -> bytes per matrix element
    gemm_budget_reference_tile_bytes: int


@dataclass(frozen=True)
class CostParams:
    """Calibrated constants plus the machine figures the laws depend on."""

    # machine figures (copied from the system description, not re-declared)
    links: dict
    tiles_per_processor: int
    clock_hz: int
    usable_memory_per_tile: int

    # interconnect
    per_hop_latency_ns: float
    link_half_sat_bytes: float
    replicated_ingress_bps: int   # per-destination ceiling when a payload fans out

    # tile memory
    read_bytes_per_cycle: int
    write_bytes_per_cycle: int
    mem_latency_cycles: int
    width_fraction: dict          # access width in bits -> fraction of peak
    block_half_sat_bytes: float
    threads_per_tile: int

    # on-chip exchange grid
    exchange_base_cycles: int
    exchange_cycles_per_island: int
    column_offset_out_cycles: int   # per unit of physical x, toward the die edge
    column_offset_back_cycles: int  # per unit of physical x, away from the edge

    # host link
    host_latency_ns: float
    host_proc_bps: int
    host_pair_bps: int
    host_quad_bps: int
    host_system_bps: int
    host_half_sat_bytes: float

    # collective calibration
    broadcast_fanout_ns: float
    gather_board_fix_ns: float
    gather_rail_fix_ns: float     # per rail hop
    gather_pass_fix_ns: float
    reduce_base_ns: float
    reduce_per_op_ns: float
    reduce_parallel_base_ns: float
    barrier_ns: float

    roofline: RooflineParams = field(default=None)

    # -- derived machine rates --------------------------------------------

    @property
    def peak_read_bps(self):
        return self.tiles_per_processor * self.read_bytes_per_cycle * self.clock_hz

    @property
    def peak_write_bps(self):
        return self.tiles_per_processor * self.write_bytes_per_cycle * self.clock_hz

    @property
    def tile_port_bps(self):
        """Injection/reception rate of a single tile's exchange port."""
        return self.links[ON_CHIP_EXCHANGE].per_transfer_peak_bps

    def cycles_to_ns(self, cycles):
        return cycles * 1e9 / self.clock_hz


_COST_FLOAT_KEYS = {
    "per_hop_latency_ns", "link_half_sat_bytes", "block_half_sat_bytes",
    "host_latency_ns", "host_half_sat_bytes", "broadcast_fanout_ns",
    "gather_board_fix_ns", "gather_rail_fix_ns", "gather_pass_fix_ns",
    "reduce_base_ns", "reduce_per_op_ns", "reduce_parallel_base_ns",
    "barrier_ns",
}
_COST_INT_KEYS = {
    "read_bytes_per_cycle", "write_bytes_per_cycle", "mem_latency_cycles",
    "threads_per_tile", "exchange_base_cycles", "exchange_cycles_per_island",
    "column_offset_out_cycles", "column_offset_back_cycles",
}
_COST_GBPS_KEYS = {
    "replicated_ingress_bps": "replicated_ingress_gbps",
    "host_proc_bps": "host_proc_gbps",
    "host_pair_bps": "host_pair_gbps",
    "host_quad_bps": "host_quad_gbps",
    "host_system_bps": "host_system_gbps",
}


def load_cost_params(path=None, system=None):
    """Read calibrated constants; machine figures come from the system spec."""
    if path is None:
        path = asset_path("reference_costs.ini")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"cost parameter file not found: {path}")
    if system is None:
        system = load_system_spec()

    parser = configparser.ConfigParser()
    parser.read(path)
    if not parser.has_section("costs"):
        raise ConfigError(f"{path}: missing [costs] section")
    costs = parser["costs"]

    kwargs = {}
    try:
        for key in _COST_FLOAT_KEYS:
            kwargs[key] = costs.getfloat(key)
        for key in _COST_INT_KEYS:
            kwargs[key] = costs.getint(key)
        for attr, ini_key in _COST_GBPS_KEYS.items():
            kwargs[attr] = gbps_to_bps(costs.get(ini_key))
        width_fraction = {}
        for bits in (32, 64, 128):
            width_fraction[bits] = costs.getfloat(f"width_fraction_{bits}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad or missing cost constant: {exc}") from exc

    roofline = None
    if parser.has_section("roofline"):
        r = parser["roofline"]
        try:
            roofline = RooflineParams(
                amp_flops_per_cycle={
                    "single": r.getint("amp_flops_per_cycle_single"),
                    "mixed": r.getint("amp_flops_per_cycle_mixed"),
                },
                vector_flops_per_cycle={
                    "single": r.getint("vector_flops_per_cycle_single"),
                    "mixed": r.getint("vector_flops_per_cycle_mixed"),
                },
                achievable_fraction={
                    "single": r.getfloat("achievable_fraction_single"),
                    "mixed": r.getfloat("achievable_fraction_mixed"),
                },
                gemm_memory_budget={
                    "single": r.getint("gemm_memory_budget_single"),
                    "mixed": r.getint("gemm_memory_budget_mixed"),
                },
                gemm_element_bytes={
                    "single": r.getint("gemm_element_bytes_single"),
                    "mixed": r.getint("gemm_element_bytes_mixed"),
                },
                gemm_budget_reference_tile_bytes=r.getint(
                    "gemm_budget_reference_tile_bytes"
                ),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: bad [roofline] constant: {exc}") from exc

    return CostParams(
        links=dict(system.links),
        tiles_per_processor=system.tiles_per_processor,
        clock_hz=system.clock_hz,
        usable_memory_per_tile=system.usable_memory_per_tile,
        width_fraction=width_fraction,
        roofline=roofline,
        **kwargs,
    )


def save_cost_params(params: CostParams, path):
    """Write the calibrated constants back out (round-trips with load)."""
    parser = configparser.ConfigParser()
    parser.add_section("costs")

    def fmt(x):
        return f"{x:.12g}"

    for key in sorted(_COST_FLOAT_KEYS):
        parser.set("costs", key, fmt(getattr(params, key)))
    for key in sorted(_COST_INT_KEYS):
        parser.set("costs", key, str(getattr(params, key)))
    for attr, ini_key in sorted(_COST_GBPS_KEYS.items()):
        parser.set("costs", ini_key, fmt(getattr(params, attr) / 1e9))
    for bits, frac in sorted(params.width_fraction.items()):
        parser.set("costs", f"width_fraction_{bits}", fmt(frac))

    if params.roofline is not None:
        r = params.roofline
        parser.add_section("roofline")
        for prec in ("single", "mixed"):
            parser.set("roofline", f"amp_flops_per_cycle_{prec}",
                       str(r.amp_flops_per_cycle[prec]))
            parser.set("roofline", f"vector_flops_per_cycle_{prec}",
                       str(r.vector_flops_per_cycle[prec]))
            parser.set("roofline", f"achievable_fraction_{prec}",
                       fmt(r.achievable_fraction[prec]))
            parser.set("roofline", f"gemm_memory_budget_{prec}",
                       str(r.gemm_memory_budget[prec]))
            parser.set("roofline", f"gemm_element_bytes_{prec}",
                       str(r.gemm_element_bytes[prec]))
        parser.set("roofline", "gemm_budget_reference_tile_bytes",
                   str(r.gemm_budget_reference_tile_bytes))

    with open(path, "w") as fh:
        parser.write(fh)


# ---------------------------------------------------------------------------
# contention description


def edge_key(edge):
    """Stable resource key for a path element (Hop or RouteEdge)."""
    if isinstance(edge, topo_mod.Hop):
        return edge.key
    if isinstance(edge, topo_mod.RouteEdge):
        return ("link", edge.kind, edge.src, edge.dst)
    raise TypeError(f"not a path element: {edge!r}")


@dataclass(frozen=True)
class LoadContext:
    """How many concurrent transfers occupy each resource along a path.

    Counts can be given per resource key (exact, as the engine does) or per
    link kind (convenient for uniform experiments).  Any resource not
    mentioned carries `default_count` transfers, including the one being
    costed, so the idle context is `LoadContext()`.
    """

    counts: dict = field(default_factory=dict)       # resource key -> transfers
    kind_counts: dict = field(default_factory=dict)  # link kind -> transfers
    default_count: int = 1

    def count_for(self, edge):
        key = edge_key(edge)
        if key in self.counts:
            return self.counts[key]
        if edge.kind in self.kind_counts:
            return self.kind_counts[edge.kind]
        return self.default_count

    def utilization(self, edge, params: CostParams):
        """Occupancy of the link an edge runs over, in [0, 1].

        The transfer being costed does not contend with itself, hence the
        count - 1: a lone transfer always sees the unloaded latency.
        """
        k = self.count_for(edge)
        if k <= 1:
            return 0.0
        link = params.links.get(edge.kind)
        if link is None or link.aggregate_cap_bps <= 0:
            return 0.0
        other = (k - 1) * link.per_transfer_peak_bps
        return min(1.0, other / link.aggregate_cap_bps)


IDLE = LoadContext()


# ---------------------------------------------------------------------------
# point-to-point laws


def _latency_class(path):
    """Link class that sets the base latency of a path.

    Multi-hop paths pay the base of their first inter-processor edge plus a
    per-hop forwarding charge for every further inter-processor edge.
    """
    inter = [e for e in path if e.kind in INTER_PROCESSOR_KINDS]
    if inter:
        return inter[0].kind, len(inter)
    if any(e.kind == ON_CHIP_EXCHANGE for e in path):
        return ON_CHIP_EXCHANGE, 0
    if all(e.kind == LOCAL_MEMORY for e in path):
        return LOCAL_MEMORY, 0
    raise RoutingError(f"cannot classify path kinds {[e.kind for e in path]}")


def p2p_latency(path, params: CostParams, load: LoadContext = IDLE):
    """One-way latency of a single transfer along `path`, in ns.

    Idle latency is the base of the path's latency class plus the per-hop
    charge.  Under load the whole figure stretches by the class's loaded
    multiplier, proportionally to the busiest resource on the path.
    """
    if not path:
        raise RoutingError("empty path: endpoints are distinct but no route given")
    kind, inter_hops = _latency_class(path)
    base = params.links[kind].base_latency_ns
    if inter_hops > 1:
        base = base + params.per_hop_latency_ns * (inter_hops - 1)
    util = max(load.utilization(e, params) for e in path)
    mult = params.links[kind].loaded_multiplier
    return base * (1.0 + (mult - 1.0) * util)


def transfer_bandwidth(path, size_bytes, params: CostParams,
                       load: LoadContext = IDLE):
    """(per-transfer, aggregate) bandwidth in bytes/s for transfers on `path`.

    A single transfer is limited by the slowest per-transfer ceiling on its
    path; concurrent transfers additionally share each link's aggregate cap
    evenly.  Finite sizes are derated by the link saturation curve.  The
    aggregate is the per-transfer rate times the number of transfers at the
    bottleneck.
    """
    if not path:
        raise RoutingError("empty path")
    ceiling = None
    share = None
    k_max = 1
    for e in path:
        link = params.links.get(_capacity_kind(e.kind))
        if link is None:
            continue
        ceiling = link.per_transfer_peak_bps if ceiling is None \
            else min(ceiling, link.per_transfer_peak_bps)
        k = load.count_for(e)
        k_max = max(k_max, k)
        if k > 0:
            s = link.aggregate_cap_bps / k
            share = s if share is None else min(share, s)
    if ceiling is None:
        raise RoutingError("path has no bandwidth-bearing element")
    rate = ceiling if share is None else min(ceiling, share)
    per = rate * saturation(size_bytes, params.link_half_sat_bytes)
    return per, per * k_max


def _capacity_kind(kind):
    """Map port pseudo-hops onto the link class that owns their capacity."""
    if kind in (topo_mod.EGRESS_PORT, topo_mod.INGRESS_PORT):
        return ON_CHIP_EXCHANGE
    return kind


# ---------------------------------------------------------------------------
# tile memory


def _check_threads(params, threads):
    if threads is None:
        return params.threads_per_tile
    if not 1 <= threads <= params.threads_per_tile:
        raise ValueError(
            f"threads must be 1..{params.threads_per_tile}, got {threads}")
    return threads


def memory_read_bandwidth(params: CostParams, width_bits=128, block_bytes=None,
                          threads=None):
    """(chip aggregate, per tile) read bandwidth in bytes/s.

    Width sets the fraction of the load pipeline used per access; thread
    count scales linearly up to the hardware maximum; finite block sizes
    follow the block saturation curve.
    """
    if width_bits not in params.width_fraction:
        raise ValueError(f"unsupported access width {width_bits} bits")
    threads = _check_threads(params, threads)
    chip = (params.peak_read_bps
            * params.width_fraction[width_bits]
            * (threads / params.threads_per_tile)
            * saturation(block_bytes, params.block_half_sat_bytes))
    return chip, chip / params.tiles_per_processor


def memory_write_bandwidth(params: CostParams, block_bytes=None, threads=None):
    """(chip aggregate, per tile) write bandwidth; the store path is half wide."""
    threads = _check_threads(params, threads)
    chip = (params.peak_write_bps
            * (threads / params.threads_per_tile)
            * saturation(block_bytes, params.block_half_sat_bytes))
    return chip, chip / params.tiles_per_processor


def memory_latency(params: CostParams):
    """(cycles, ns) for a dependent load from tile-local memory."""
    cycles = params.mem_latency_cycles
    return cycles, params.cycles_to_ns(cycles)


# ---------------------------------------------------------------------------
# on-chip exchange placement effects


def tile_pair_latency_cycles(params: CostParams, pair_class, island_delta=0,
                             src_column=None, dst_column=None):
    """Exchange latency between two tiles of one processor, in clock cycles.

    Within a column the cost grows linearly with island distance.  Across
    columns a directional wiring offset is added per unit of physical
    distance; travelling toward the die edge costs more than returning.
    """
    if pair_class == SAME_TILE:
        raise RoutingError("same tile: no exchange involved")
    if pair_class == CROSS_PROCESSOR:
        raise RoutingError("tile pair spans processors; use the link laws")
    if pair_class not in (SAME_ISLAND, SAME_COLUMN, CROSS_COLUMN):
        raise ValueError(f"unknown tile pair class {pair_class!r}")
    cycles = params.exchange_base_cycles \
        + params.exchange_cycles_per_island * island_delta
    if pair_class == CROSS_COLUMN:
        if src_column is None or dst_column is None:
            raise ValueError("cross-column pair needs both column indices")
        half = params.tiles_per_processor // TILES_PER_COLUMN // 2
        px = (lambda c: c if c < half else 2 * half - 1 - c)
        dist = abs(px(src_column) - px(dst_column))
        if px(dst_column) < px(src_column):
            cycles += params.column_offset_out_cycles * dist
        else:
            cycles += params.column_offset_back_cycles * dist
    return cycles


def tile_pair_latency_ns(params: CostParams, pair_class, island_delta=0,
                         src_column=None, dst_column=None):
    return params.cycles_to_ns(tile_pair_latency_cycles(
        params, pair_class, island_delta, src_column, dst_column))


# ---------------------------------------------------------------------------
# host link


def host_bandwidth_cap(params: CostParams, processors):
    """Aggregate host-link ceiling for a transfer spread over n processors.

    Lane bundles are shared per processor, per board pair, and per group of
    four, with a system-wide cap; the binding constraint wins.
    """
    if processors < 1:
        raise ValueError("host transfer needs at least one processor")
    return min(
        processors * params.host_proc_bps,
        math.ceil(processors / 2) * params.host_pair_bps,
        math.ceil(processors / 4) * params.host_quad_bps,
        params.host_system_bps,
    )


def host_transfer(params: CostParams, size_bytes, processors):
    """(latency_ns, aggregate_bps) for host reads spread over n processors.

    Latency is flat: every request crosses the same software stack and
    switch no matter which processor serves it.
    """
    cap = host_bandwidth_cap(params, processors)
    bw = cap * saturation(size_bytes, params.host_half_sat_bytes)
    return params.host_latency_ns, bw


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class HopLineFit:
    base_ns: float
    per_hop_ns: float
    residual_rms_ns: float
    samples: int


def calibrate_hop_line(samples):
    """Least-squares fit of latency = base + per_hop * (hops - 1).

    `samples` is a sequence of (hops, latency_ns) with hops >= 1.  Needs at
    least two distinct hop counts to determine the slope.
    """
    pts = [(int(h), float(l)) for h, l in samples]
    if any(h < 1 for h, _ in pts):
        raise ValueError("hop counts must be >= 1")
    if len({h for h, _ in pts}) < 2:
        raise ValueError("need at least two distinct hop counts to fit a line")
    a = np.array([[1.0, h - 1.0] for h, _ in pts])
    y = np.array([l for _, l in pts])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = a @ coef - y
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return HopLineFit(base_ns=float(coef[0]), per_hop_ns=float(coef[1]),
                      residual_rms_ns=rms, samples=len(pts))


def apply_hop_calibration(params: CostParams, fit: HopLineFit,
                          kind=topo_mod.INTER_BOARD_RAIL):
    """New CostParams with the fitted per-hop charge and class base installed."""
    links = dict(params.links)
    old = links[kind]
    links[kind] = replace(old, base_latency_ns=round(fit.base_ns))
    return replace(params, links=links,
                   per_hop_latency_ns=float(fit.per_hop_ns))
