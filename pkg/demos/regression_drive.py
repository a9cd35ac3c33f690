# Drive the regression machinery from Python instead of the CLI: run one
# experiment, sweep a family, refit the per-hop line, and render a curve.

import io

from bspsim import default_bench
from bspsim.cost_model import apply_hop_calibration, calibrate_hop_line
from bspsim.experiments import predict_metrics
from bspsim.golden import load_golden
from bspsim.sweep import run_sweep, write_csv, write_svg
from bspsim.verify import format_report, verify_analytic

bench = default_bench()
golden = load_golden()

# one experiment, prediction against its measured row
predicted = predict_metrics(bench, "p2p-latency-load-d")
row = golden.experiment("p2p-latency-load-d")
print("p2p-latency-load-d:")
for metric, want in row.metrics().items():
    got = predicted[metric]
    print(f"  {metric:26s} model {got:10.3f}  measured {want:10.3f}")

# the whole host family in one report
report = verify_analytic(bench=bench, golden=golden, pattern="host-*")
print("\n" + format_report(report).splitlines()[-1])

# refit the rail hop line from the measured inter-processor matrix
samples = [(int(r.extras["hops"]), r.latency_ns)
           for r in golden.by_family["hop_matrix"]
           if r.extras.get("link_kind") == "inter_board_rail"]
fit = calibrate_hop_line(samples)
print(f"\nrefitted hop line: base {fit.base_ns:.1f} ns, "
      f"{fit.per_hop_ns:.1f} ns per extra hop "
      f"(rms residual {fit.residual_rms_ns:.1f} ns over {fit.samples} rows)")
refit = apply_hop_calibration(bench.params, fit)
print(f"  stored per-hop constant was {bench.params.per_hop_latency_ns} ns, "
      f"now {refit.per_hop_latency_ns:.1f} ns")

# a sweep rendered two ways
result = run_sweep("p2p-bw-chip", "participants", bench=bench, golden=golden)
print(f"\nsweep '{result.title}': {len(result.rows)} points")
print("\n".join(write_csv(result).splitlines()[:4]))
buf = io.StringIO()
write_svg(result, buf)
print(f"(SVG chart: {len(buf.getvalue())} bytes)")
