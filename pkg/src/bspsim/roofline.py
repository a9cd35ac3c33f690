"""Roofline-style arithmetic ceilings and operating points.

Peak compute comes from counting issue slots: every tile finishes a fixed
number of flops per cycle in its wide accumulating unit, fewer in plain
vector code.  Sustained kernels reach a calibrated fraction of peak.  The
memory roof uses the load/store rates from the cost model, giving the
usual two-regime attainable curve over arithmetic intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cost_model import CostParams

AMP = "amp"          # wide accumulating matrix unit
VECTOR = "vector"    # plain SIMD issue
UNITS = (AMP, VECTOR)
PRECISIONS = ("single", "mixed")


def _check(unit, precision):
    if unit not in UNITS:
        raise ValueError(f"unknown unit {unit!r}")
    if precision not in PRECISIONS:
        raise ValueError(f"unknown precision {precision!r}")


def peak_flops(params: CostParams, unit=AMP, precision="single"):
    """Theoretical flops/s of one processor for a unit/precision pair."""
    _check(unit, precision)
    r = params.roofline
    per_cycle = r.amp_flops_per_cycle if unit == AMP else r.vector_flops_per_cycle
    return params.tiles_per_processor * per_cycle[precision] * params.clock_hz


def achievable_flops(params: CostParams, unit=AMP, precision="single"):
    """Sustained flops/s: peak scaled by the measured efficiency fraction."""
    return peak_flops(params, unit, precision) \
        * params.roofline.achievable_fraction[precision]


def ridge_intensity(params: CostParams, unit=AMP, precision="single",
                    store_bound=False):
    """Arithmetic intensity (flops/byte) where compute and memory roofs meet."""
    mem = params.peak_write_bps if store_bound else params.peak_read_bps
    return peak_flops(params, unit, precision) / mem


def attainable_flops(params: CostParams, intensity, unit=AMP,
                     precision="single", sustained=False):
    """Roofline value at a given arithmetic intensity.

    `sustained` applies the calibrated efficiency fraction to the compute
    roof (the memory roof is already a measured figure).
    """
    if intensity <= 0:
        raise ValueError("arithmetic intensity must be positive")
    roof = achievable_flops(params, unit, precision) if sustained \
        else peak_flops(params, unit, precision)
    return min(roof, intensity * params.peak_read_bps)


@dataclass(frozen=True)
class GemmPoint:
    n: int
    flops: int
    bytes_moved: int
    intensity: float
    attainable_flops: float
    bound: str            # "compute" or "memory"
    fits: bool


def gemm_memory_budget(params: CostParams, precision="single"):
    """Bytes available for the three square operands of a matrix multiply.

    Calibrated at the reference per-tile capacity; scales linearly if the
    usable capacity differs.
    """
    r = params.roofline
    budget = r.gemm_memory_budget[precision]
    return budget * params.usable_memory_per_tile \
        // r.gemm_budget_reference_tile_bytes


def gemm_max_operand(params: CostParams, precision="single"):
    """Largest n such that three n-by-n operands still fit."""
    _check(AMP, precision)
    elem = params.roofline.gemm_element_bytes[precision]
    budget = gemm_memory_budget(params, precision)
    return math.isqrt(budget // (3 * elem))


def gemm_point(params: CostParams, n, precision="single", sustained=True):
    """Roofline operating point of an n-by-n-by-n matrix multiply."""
    if n < 1:
        raise ValueError("operand size must be positive")
    elem = params.roofline.gemm_element_bytes[precision]
    flops = 2 * n ** 3
    bytes_moved = 3 * elem * n ** 2
    intensity = flops / bytes_moved
    value = attainable_flops(params, intensity, AMP, precision,
                             sustained=sustained)
    roof = achievable_flops(params, AMP, precision) if sustained \
        else peak_flops(params, AMP, precision)
    bound = "compute" if value >= roof else "memory"
    return GemmPoint(
        n=n, flops=flops, bytes_moved=bytes_moved, intensity=intensity,
        attainable_flops=value, bound=bound,
        fits=n <= gemm_max_operand(params, precision))


def summary(params: CostParams):
    """All ceilings in one table-shaped dict (flops/s and bytes/s)."""
    out = {"read_bps": params.peak_read_bps,
           "write_bps": params.peak_write_bps}
    for unit in UNITS:
        for prec in PRECISIONS:
            key = f"{unit}_{prec}"
            out[f"peak_{key}_flops"] = peak_flops(params, unit, prec)
            out[f"achievable_{key}_flops"] = achievable_flops(params, unit, prec)
    for prec in PRECISIONS:
        out[f"gemm_max_operand_{prec}"] = gemm_max_operand(params, prec)
    return out
