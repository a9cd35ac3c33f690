"""Parameter sweeps: model curves with measured points overlaid.

Each registered sweep produces a :class:`SweepResult` -- a plain table
whose first column is the swept variable -- which can be written out as
CSV and as a small self-contained SVG line chart (no plotting library
involved).  Model points come from the same prediction registry the
verifier uses, so the curves here and the regression checks can never
drift apart.
"""

import csv
import math
from dataclasses import dataclass, field

from .errors import BspsimError
from .experiments import default_bench, predict_metrics
from .golden import load_golden
from . import roofline


@dataclass
class SweepResult:
    name: str                        # sweep id
    axis: str                        # swept variable
    title: str
    x_column: str
    x_label: str
    y_label: str
    columns: list                    # CSV header, x first
    rows: list                       # tuples aligned with columns; None = blank
    series: list = field(default_factory=list)   # y columns to draw
    log_x: bool = False
    log_y: bool = False


_SWEEPS = {}    # (sweep id, axis) -> builder


def _sweep(sweep_id, axis):
    def register(fn):
        _SWEEPS[(sweep_id, axis)] = fn
        return fn
    return register


def available_sweeps():
    """Supported (sweep id, axis) pairs."""
    return sorted(_SWEEPS)


def run_sweep(sweep_id, axis=None, bench=None, golden=None) -> SweepResult:
    """Build one sweep.  `axis` may be omitted when the id has only one."""
    if axis is None:
        axes = [a for (sid, a) in _SWEEPS if sid == sweep_id]
        if len(axes) == 1:
            axis = axes[0]
        elif len(axes) > 1:
            raise BspsimError(
                f"sweep {sweep_id!r} needs --axis, one of: " + ", ".join(axes))
    fn = _SWEEPS.get((sweep_id, axis))
    if fn is None:
        known = ", ".join(f"{sid} --axis {a}" for sid, a in available_sweeps())
        raise BspsimError(f"unknown sweep {sweep_id!r} (axis {axis!r}); "
                          f"available: {known}")
    if bench is None:
        bench = default_bench()
    if golden is None:
        golden = load_golden()
    return fn(bench, golden)


# -- the sweeps -------------------------------------------------------------

_CHIP_LADDER = (1, 2, 4, 8, 16, 38, 76, 152, 304, 608, 1216)


@_sweep("p2p-bw-chip", "participants")
def _sweep_exchange(bench, golden):
    """On-chip exchange bandwidth as ever more tile pairs talk at once."""
    rows = []
    for n in _CHIP_LADDER:
        pred = predict_metrics(bench, f"p2p-bw-chip-{n}")
        measured = golden.by_id.get(f"p2p-bw-chip-{n}")
        rows.append((n, round(pred["aggregate_bw"], 3),
                     measured.aggregate_bw if measured else None,
                     round(pred["per_transfer_bw"], 3),
                     measured.per_transfer_bw if measured else None))
    return SweepResult(
        name="p2p-bw-chip", axis="participants", title="On-chip exchange scaling",
        x_column="pairs", x_label="concurrent tile pairs",
        y_label="aggregate GB/s",
        columns=["pairs", "aggregate_model", "aggregate_measured",
                 "per_transfer_model", "per_transfer_measured"],
        rows=rows, series=["aggregate_model", "aggregate_measured"],
        log_x=True)


@_sweep("host-bw-tiles", "participants")
def _sweep_host(bench, golden):
    """Host link bandwidth against the number of tiles streaming."""
    grid = sorted(set(_CHIP_LADDER) | {3, 6, 12, 24, 50, 100, 200, 450, 900})
    rows = []
    for n in grid:
        pred = predict_metrics(bench, f"host-bw-tiles-{n}")
        measured = golden.by_id.get(f"host-bw-tiles-{n}")
        rows.append((n, round(pred["aggregate_bw"], 4),
                     measured.aggregate_bw if measured else None))
    return SweepResult(
        name="host-bw-tiles", axis="participants", title="Host link bandwidth vs. streaming tiles",
        x_column="tiles", x_label="tiles", y_label="GB/s",
        columns=["tiles", "model", "measured"],
        rows=rows, series=["model", "measured"], log_x=True)


@_sweep("broadcast-bw-j", "size")
def _sweep_broadcast_size(bench, golden):
    """Machine-wide broadcast bandwidth as the payload grows."""
    plateau = predict_metrics(bench, "broadcast-bw-j")["aggregate_bw"]
    sizes = [1 << k for k in range(8, 17)]
    sizes += [96 * 1024, 102400, 128 * 1024, 256 * 1024, 512 * 1024]
    rows = []
    for size in sorted(sizes):
        measured, extrapolated = golden.broadcast_bw_at_size("j", size)
        rows.append((size, round(plateau, 1), round(measured, 1),
                     int(extrapolated)))
    return SweepResult(
        name="broadcast-bw-j", axis="size", title="Broadcast bandwidth vs. message size",
        x_column="message_bytes", x_label="message bytes",
        y_label="aggregate GB/s",
        columns=["message_bytes", "model_plateau", "measured", "extrapolated"],
        rows=rows, series=["model_plateau", "measured"], log_x=True)


@_sweep("roofline", "intensity")
def _sweep_roofline(bench, golden):
    """Attainable compute against arithmetic intensity, all four roofs."""
    params = bench.params
    intensities = [2.0 ** (k / 2.0) for k in range(-4, 21)]
    rows = []
    for x in intensities:
        row = [round(x, 4)]
        for unit in roofline.UNITS:
            for prec in roofline.PRECISIONS:
                f = roofline.attainable_flops(params, x, unit, prec,
                                              sustained=True)
                row.append(round(f / 1e12, 4))
        rows.append(tuple(row))
    return SweepResult(
        name="roofline", axis="intensity", title="Sustained roofline",
        x_column="flops_per_byte", x_label="flops per byte",
        y_label="TFLOP/s",
        columns=["flops_per_byte", "amp_single", "amp_mixed",
                 "vector_single", "vector_mixed"],
        rows=rows,
        series=["amp_single", "amp_mixed", "vector_single", "vector_mixed"],
        log_x=True, log_y=True)


@_sweep("reduce-bw-base", "operands")
def _sweep_reduce(bench, golden):
    """Reduction throughput as the per-tile operand count grows."""
    grid = sorted({1216, 2432, 4864, 9728, 19456,
                   100, 300, 600, 1800, 3600, 7000, 14000, 28000})
    rows = []
    for k in grid:
        pred = predict_metrics(bench, f"reduce-bw-base-{k}")
        measured = golden.by_id.get(f"reduce-bw-base-{k}")
        rows.append((k, round(pred["aggregate_bw"], 4),
                     measured.aggregate_bw if measured else None))
    return SweepResult(
        name="reduce-bw-base", axis="operands", title="Reduction throughput vs. operand count",
        x_column="operands_per_tile", x_label="operands per tile",
        y_label="GB/s",
        columns=["operands_per_tile", "model", "measured"],
        rows=rows, series=["model", "measured"], log_x=True)


# -- output -----------------------------------------------------------------

def write_csv(result: SweepResult, fh=None):
    """Write the sweep table as CSV; returns the text if `fh` is None."""
    import io
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf)
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow(["" if v is None else v for v in row])
    if fh is None:
        return buf.getvalue()
    return None


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
_W, _H = 720, 460
_ML, _MR, _MT, _MB = 80, 24, 48, 56


def _tick_values(lo, hi, log):
    if log:
        first = math.floor(math.log10(lo))
        last = math.ceil(math.log10(hi))
        ticks = [10.0 ** e for e in range(int(first), int(last) + 1)]
        return [t for t in ticks if lo <= t <= hi] or [lo, hi]
    span = hi - lo
    if span <= 0:
        return [lo]
    step = 10.0 ** math.floor(math.log10(span / 4))
    for mult in (1, 2, 2.5, 5, 10):
        if span / (step * mult) <= 5:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * span:
        ticks.append(t)
        t += step
    return ticks


def _fmt_tick(v):
    if v == 0:
        return "0"
    if abs(v) >= 10000 or abs(v) < 0.01:
        return f"{v:.0e}"
    return f"{v:g}"


def write_svg(result: SweepResult, fh=None):
    """Render the sweep as a small standalone SVG line chart.

    Returns the text if `fh` is None.  Cells with None are simply left
    out of their series (measured overlays are usually sparser than the
    model grid).
    """
    xi = result.columns.index(result.x_column)
    series_pts = []
    for name in result.series:
        yi = result.columns.index(name)
        pts = [(row[xi], row[yi]) for row in result.rows
               if row[xi] is not None and row[yi] is not None]
        series_pts.append((name, pts))

    xs = [p[0] for _, pts in series_pts for p in pts]
    ys = [p[1] for _, pts in series_pts for p in pts]
    if not xs:
        raise BspsimError(f"sweep {result.name} has nothing to plot")

    def txf(v, log):
        return math.log10(v) if log else v

    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if result.log_y:
        y_lo = min(y for y in ys if y > 0)
    else:
        y_lo = min(y_lo, 0.0)
    tx_lo, tx_hi = txf(x_lo, result.log_x), txf(x_hi, result.log_x)
    ty_lo, ty_hi = txf(y_lo, result.log_y), txf(y_hi, result.log_y)
    if tx_hi == tx_lo:
        tx_hi = tx_lo + 1
    if ty_hi == ty_lo:
        ty_hi = ty_lo + 1
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB

    def px(v):
        return _ML + (txf(v, result.log_x) - tx_lo) / (tx_hi - tx_lo) * plot_w

    def py(v):
        return _MT + plot_h - (txf(v, result.log_y) - ty_lo) \
            / (ty_hi - ty_lo) * plot_h

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
           f'height="{_H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_ML}" y="24" font-size="15">{result.title}</text>']

    for t in _tick_values(x_lo, x_hi, result.log_x):
        x = px(t)
        out.append(f'<line x1="{x:.1f}" y1="{_MT}" x2="{x:.1f}" '
                   f'y2="{_MT + plot_h}" stroke="#dddddd"/>')
        out.append(f'<text x="{x:.1f}" y="{_MT + plot_h + 18}" '
                   f'text-anchor="middle">{_fmt_tick(t)}</text>')
    for t in _tick_values(y_lo, y_hi, result.log_y):
        y = py(t)
        out.append(f'<line x1="{_ML}" y1="{y:.1f}" x2="{_ML + plot_w}" '
                   f'y2="{y:.1f}" stroke="#dddddd"/>')
        out.append(f'<text x="{_ML - 6}" y="{y + 4:.1f}" '
                   f'text-anchor="end">{_fmt_tick(t)}</text>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{plot_w}" '
               f'height="{plot_h}" fill="none" stroke="#444444"/>')
    out.append(f'<text x="{_ML + plot_w / 2:.0f}" y="{_H - 12}" '
               f'text-anchor="middle">{result.x_label}</text>')
    out.append(f'<text x="18" y="{_MT + plot_h / 2:.0f}" '
               f'text-anchor="middle" transform="rotate(-90 18 '
               f'{_MT + plot_h / 2:.0f})">{result.y_label}</text>')

    legend_x = _ML + 8
    for i, (name, pts) in enumerate(series_pts):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
        if len(pts) > 1:
            out.append(f'<polyline points="{coords}" fill="none" '
                       f'stroke="{color}" stroke-width="1.8"/>')
        for x, y in pts:
            out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" '
                       f'r="2.6" fill="{color}"/>')
        ly = _MT + 14 + 16 * i
        out.append(f'<line x1="{legend_x}" y1="{ly - 4}" '
                   f'x2="{legend_x + 22}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="2.5"/>')
        out.append(f'<text x="{legend_x + 28}" y="{ly}">{name}</text>')
    out.append("</svg>")
    text = "\n".join(out)
    if fh is None:
        return text
    fh.write(text)
    return None


def write_outputs(result: SweepResult, directory):
    """Write `<id>-<axis>.csv` and `.svg` under `directory`; returns paths."""
    import os
    os.makedirs(directory, exist_ok=True)
    stem = f"{result.name}-{result.axis}"
    csv_path = os.path.join(directory, f"{stem}.csv")
    svg_path = os.path.join(directory, f"{stem}.svg")
    with open(csv_path, "w", newline="") as fh:
        write_csv(result, fh)
    with open(svg_path, "w") as fh:
        write_svg(result, fh)
    return csv_path, svg_path
