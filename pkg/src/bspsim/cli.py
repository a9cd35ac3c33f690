"""Command-line harness.

Subcommands: `topo` (machine summary, cabling map, hop matrix),
`run <id>` (predict one experiment, compare to the reference row),
`verify` (regression-check a glob of experiments), `sweep` (model
curves as CSV and optional SVG), `calibrate` (refit the per-hop latency
line from the reference hop matrix).

Exit codes: 0 success, 1 verification failures, 2 usage or
configuration errors.
"""

import argparse
import json
import sys

from .cost_model import (apply_hop_calibration, calibrate_hop_line,
                         save_cost_params)
from .errors import BspsimError
from .experiments import default_bench, predict_metrics
from .golden import load_golden
from .verify import format_report, verify_analytic, verify_empirical
from . import sweep as sweep_mod


def _bench(args):
    return default_bench(system_path=args.system, costs_path=args.costs)


# -- subcommands ------------------------------------------------------------

def cmd_topo(args):
    bench = _bench(args)
    topo = bench.topo
    spec = topo.spec
    print(f"ladder machine: {spec.boards} boards, {topo.processors} "
          f"processors, {topo.tiles_per_processor} tiles each "
          f"({spec.total_tiles} total)")
    print(f"clock {spec.clock_hz / 1e9:g} GHz, "
          f"{spec.memory_per_tile // 1024} KiB per tile "
          f"({spec.usable_memory_per_tile // 1024} KiB usable)")
    print()
    print("cabling map (slot -> device):")
    slots = range(topo.processors)
    print("  slot   " + " ".join(f"{s:3d}" for s in slots))
    print("  device " + " ".join(f"{topo.device_of(s):3d}" for s in slots))
    print()
    print("hop matrix (cabling slots):")
    print("      " + " ".join(f"{b:3d}" for b in slots))
    for a in slots:
        row = " ".join(f"{topo.hop_distance(a, b):3d}" for b in slots)
        print(f"  {a:3d} {row}")
    return 0


def cmd_run(args):
    bench = _bench(args)
    golden = load_golden()
    predicted = predict_metrics(bench, args.experiment_id)
    row = golden.by_id.get(args.experiment_id)
    if args.json:
        doc = {"experiment_id": args.experiment_id, "predicted": predicted}
        if row is not None:
            doc["measured"] = row.metrics()
            doc["analytic_tol"] = row.analytic_tol
        print(json.dumps(doc, indent=2, sort_keys=True))
        return 0
    print(f"experiment {args.experiment_id}")
    measured = row.metrics() if row is not None else {}
    for metric, value in predicted.items():
        line = f"  {metric:<26} {value:>14.6g}"
        if metric in measured:
            want = measured[metric]
            err = abs(value - want) / abs(want) if want else abs(value)
            line += f"   measured {want:>12.6g}   rel err {err:.2e}"
        print(line)
    if row is None:
        print("  (no reference row; model prediction only)")
    elif row.analytic_tol is None:
        print("  (reference-only row: measured values are not a model claim)")
    else:
        print(f"  (tolerance {row.analytic_tol:g})")
    return 0


def cmd_verify(args):
    golden = load_golden()
    if args.mode == "empirical":
        report = verify_empirical(golden=golden, pattern=args.filter)
    else:
        report = verify_analytic(bench=_bench(args), golden=golden,
                                 pattern=args.filter,
                                 tolerance=args.tolerance)
    print(format_report(report, verbose=args.verbose))
    return 0 if report.ok else 1


def cmd_sweep(args):
    result = sweep_mod.run_sweep(args.sweep_id, args.axis,
                                 bench=_bench(args), golden=load_golden())
    csv_text = sweep_mod.write_csv(result)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(csv_text)
        print(f"wrote {args.csv}")
    else:
        sys.stdout.write(csv_text)
    if args.plot:
        with open(args.plot, "w") as fh:
            sweep_mod.write_svg(result, fh)
        print(f"wrote {args.plot}")
    return 0


def cmd_calibrate(args):
    bench = _bench(args)
    golden = load_golden(args.golden) if args.golden else load_golden()
    samples = []
    for row in golden.by_family.get("hop_matrix", []):
        if row.extras.get("link_kind") == args.kind and row.latency_ns:
            samples.append((int(row.extras["hops"]), row.latency_ns))
    if not samples:
        raise BspsimError(
            f"no hop-matrix rows with link kind {args.kind!r} to fit")
    fit = calibrate_hop_line(samples)
    print(f"hop line fit over {fit.samples} samples ({args.kind}):")
    print(f"  base latency  {fit.base_ns:10.3f} ns")
    print(f"  per extra hop {fit.per_hop_ns:10.3f} ns")
    print(f"  residual rms  {fit.residual_rms_ns:10.3f} ns")
    updated = apply_hop_calibration(bench.params, fit, kind=args.kind)
    if args.out:
        save_cost_params(updated, args.out)
        print(f"wrote {args.out}")
    else:
        print("(dry run: pass --out FILE to write the fitted constants)")
    return 0


# -- argument parsing -------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="bspsim",
        description="Calibrated simulator of a tiled BSP machine "
                    "on a ladder interconnect.")
    parser.add_argument("--system", metavar="FILE", default=None,
                        help="machine description INI "
                             "(default: packaged reference system)")
    parser.add_argument("--costs", metavar="FILE", default=None,
                        help="cost constants INI "
                             "(default: packaged calibration)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topo", help="print the machine, cabling map "
                                    "and hop matrix")
    p.set_defaults(fn=cmd_topo)

    p = sub.add_parser("run", help="predict one experiment and compare "
                                   "to its reference row")
    p.add_argument("experiment_id")
    p.add_argument("--json", action="store_true",
                   help="machine-readable output")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("verify", help="regression-check predictions "
                                      "against the reference dataset")
    p.add_argument("--filter", metavar="GLOB", default=None,
                   help="only experiment ids matching this glob")
    p.add_argument("--mode", choices=("analytic", "empirical"),
                   default="analytic")
    p.add_argument("--tolerance", type=float, default=None,
                   help="override the per-row relative tolerances")
    p.add_argument("--verbose", action="store_true",
                   help="per-metric detail on passing rows too")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("sweep", help="sweep a model curve; CSV to stdout")
    p.add_argument("sweep_id",
                   help="one of: " + ", ".join(
                       sorted({sid for sid, _ in
                               sweep_mod.available_sweeps()})))
    p.add_argument("--axis", default=None,
                   help="swept variable (defaults to the id's only axis)")
    p.add_argument("--plot", metavar="FILE.svg", default=None,
                   help="also write an SVG chart")
    p.add_argument("--csv", metavar="FILE.csv", default=None,
                   help="write CSV here instead of stdout")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("calibrate", help="refit the per-hop latency line "
                                         "from the reference hop matrix")
    p.add_argument("--golden", metavar="DIR", default=None,
                   help="reference CSV directory (default: packaged)")
    p.add_argument("--out", metavar="FILE", default=None,
                   help="write the updated cost constants INI here")
    p.add_argument("--kind", default="inter_board_rail",
                   help="link class to fit (default: inter_board_rail)")
    p.set_defaults(fn=cmd_calibrate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BspsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
