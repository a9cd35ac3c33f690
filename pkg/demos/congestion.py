# Run actual supersteps through the engine and watch a board rung choke.
# More and more tile pairs push 16 KiB each across the same rung; the
# aggregate flat-lines at the rung's cap while per-message rates fall.
# Also contrasts the two load modes: CONTENDED prices everything as if
# concurrent, SCHEDULED assumes a perfectly staged exchange.

from bspsim import default_bench
from bspsim.engine import CONTENDED, SCHEDULED, Message, Superstep, \
    run_superstep
from bspsim.topology import TileId

bench = default_bench()
topo, params = bench.topo, bench.params

print("tile pairs over one rung, 16 KiB each:")
print(f"  {'pairs':>5} {'per-msg GB/s':>12} {'aggregate GB/s':>14} "
      f"{'finish us':>10}")
for pairs in (1, 2, 4, 8, 16, 32, 64):
    msgs = [Message(TileId(0, i), TileId(1, i), 16384)
            for i in range(pairs)]
    trace = run_superstep(topo, params, Superstep(messages=msgs))
    per = trace.transfers[0].rate_bps / 1e9
    agg = trace.aggregate_exchange_bps / 1e9
    print(f"  {pairs:5d} {per:12.2f} {agg:14.2f} "
          f"{trace.span_ns/1000:10.2f}")

# same traffic, both pricing modes
msgs = [Message(TileId(0, i), TileId(1, i), 16384) for i in range(32)]
for mode in (CONTENDED, SCHEDULED):
    trace = run_superstep(topo, params, Superstep(messages=msgs),
                          load_mode=mode)
    print(f"\n{mode}: span {trace.span_ns/1000:.2f} us, "
          f"aggregate {trace.aggregate_exchange_bps/1e9:.2f} GB/s")
    worst = max(trace.transfers, key=lambda r: r.end_ns)
    print(f"  slowest message ends at {worst.end_ns/1000:.2f} us "
          f"(rate {worst.rate_bps/1e9:.2f} GB/s)")

# a compute phase delays the exchange; the barrier waits for the lot
step = Superstep(compute_ns={TileId(0, 0): 5000.0},
                 messages=[Message(TileId(0, 0), TileId(2, 0), 4096)])
trace = run_superstep(topo, params, step)
print(f"\nwith a 5 us compute phase: exchange starts at "
      f"{trace.compute_end_ns/1000:.1f} us, barrier drops at "
      f"{trace.barrier_end_ns/1000:.2f} us")
