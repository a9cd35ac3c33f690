# Point-to-point latency under the four locality classes: same chip,
# same board, same rail, and the cross-parity pass-through.  Then the
# same four trips with heavy background traffic to show the loaded
# multipliers kick in.

from bspsim import default_bench
from bspsim.cost_model import LoadContext, p2p_latency, transfer_bandwidth

bench = default_bench()
topo, params = bench.topo, bench.params

trips = [
    ("on-chip exchange  ", 0, 0),     # same processor: exchange only
    ("board rung        ", 0, 1),
    ("one rail hop      ", 0, 2),
    ("rung + rail       ", 0, 3),
]

print("idle latencies:")
for name, a, b in trips:
    if a == b:
        # exchange-only trip; the route helper needs two processors, so
        # price the on-chip link directly
        ns = params.links["on_chip_exchange"].base_latency_ns
    else:
        ns = p2p_latency(topo.route(a, b), params)
    print(f"  {name} {ns:8.1f} ns")

# Pile a hundred concurrent transfers onto every off-chip link class and
# the full 1,216 onto the exchange: latency stretches toward the loaded
# multiplier of each class.
busy = LoadContext(kind_counts={
    "on_chip_exchange": 1216,
    "intra_board_bundle": 100,
    "inter_board_rail": 100,
    "pass_through": 100,
})
print("\nsame trips, saturated links:")
for name, a, b in trips:
    if a == b:
        link = params.links["on_chip_exchange"]
        ns = link.base_latency_ns * link.loaded_multiplier
    else:
        ns = p2p_latency(topo.route(a, b), params, load=busy)
    print(f"  {name} {ns:8.1f} ns")

# the per-hop line: each extra rail hop costs a fixed increment
print("\nlatency along the even rail (slot 0 outward):")
for dst in (2, 4, 6, 8, 10, 12, 14):
    ns = p2p_latency(topo.route(0, dst), params)
    print(f"  {topo.hop_distance(0, dst)} hops -> {ns:7.1f} ns")

# bandwidth of one transfer vs many sharing a rung
print("\nboard rung, 16 KiB messages:")
for k in (1, 4, 16, 64):
    crowd = LoadContext(default_count=k)
    per, agg = transfer_bandwidth(topo.route(0, 1), 16384, params,
                                  load=crowd)
    print(f"  {k:3d} concurrent -> {per/1e9:6.2f} GB/s each, "
          f"{agg/1e9:6.2f} GB/s aggregate")
