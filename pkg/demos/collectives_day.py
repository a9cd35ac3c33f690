# The rooted collectives at growing scale: broadcast a word to a whole
# chip, gather from the whole machine, scatter back out, and run the
# reduction tree.  Each prediction is printed next to the measured row
# it is graded against.

from bspsim import default_bench
from bspsim.collectives import (BROADCAST, GATHER, REDUCE, SCATTER,
                                CollectiveSpec, max_message_size, predict,
                                reduce_plan, simulate_reduce)
from bspsim.golden import load_golden
from bspsim.topology import TileId

bench = default_bench()
topo, params = bench.topo, bench.params
golden = load_golden()


def against(experiment_id, predicted_ns):
    row = golden.by_id.get(experiment_id)
    if row is None or row.latency_ns is None:
        return f"{predicted_ns:10.0f} ns"
    err = abs(predicted_ns - row.latency_ns) / row.latency_ns
    return (f"{predicted_ns:10.0f} ns   measured {row.latency_ns:10.0f} ns "
            f"(off by {err:.1%})")


root = TileId(0, 0)

# broadcast one word from tile 0 to every other tile of its chip
fan = tuple(TileId(0, t) for t in range(1, 1216))
res = predict(CollectiveSpec(BROADCAST, fan, 4, root=root), topo, params)
print("chip broadcast: ", against("broadcast-latency-a", res.latency_ns))

# gather a word from every tile of all sixteen chips
everyone = tuple(TileId(p, t) for p in range(16) for t in range(1216))
res = predict(CollectiveSpec(GATHER, everyone, 4, root=root), topo, params)
print("system gather:  ", against("gather-latency-j", res.latency_ns))

res = predict(CollectiveSpec(SCATTER, everyone, 4, root=root), topo, params)
print("system scatter: ", against("scatter-latency-j", res.latency_ns))

# how big a message can each collective carry before buffers blow?
print("\nsafe message sizes (bytes per participant):")
for op, group in (
        (BROADCAST, fan),
        (GATHER, everyone),
        (SCATTER, everyone)):
    limit = max_message_size(op, group, topo.spec.usable_memory_per_tile,
                             root=root)
    print(f"  {op:<10} over {len(group):6d} tiles: {limit}")

# the reduction actually computes: combine locally, relay partials
# toward the root chip, check the sum comes out right
group = tuple(TileId(p, t) for p in (0, 5, 10, 15) for t in range(50))
spec = CollectiveSpec(REDUCE, group, root=root, operands_per_tile=4)
values = {t: [1] * 4 for t in group}
total = simulate_reduce(spec, topo, values)
print(f"\nreduction over {len(group)} tiles x 4 operands: sum = {total} "
      f"(expected {4 * len(group)})")
print(f"  relay schedule: {len(reduce_plan(spec, topo))} supersteps")
res = predict(spec, topo, params)
print(f"  predicted latency {res.latency_ns/1000:.2f} us, "
      f"{res.aggregate_bps/1e9:.2f} GB/s effective")
