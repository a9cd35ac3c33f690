# A first walk around the modelled machine: sixteen processors on eight
# boards, wired as a ladder, each processor carrying 1,216 tiles.  Shows
# the cabling order, the hop matrix, and what a route actually looks like.

from bspsim import default_bench
from bspsim.topology import TileId

bench = default_bench()
topo = bench.topo
spec = topo.spec

print(f"{spec.boards} boards x 2 processors, {topo.tiles_per_processor} "
      f"tiles per processor = {spec.total_tiles} tiles")
print(f"clock {spec.clock_hz/1e9:g} GHz, "
      f"{spec.memory_per_tile//1024} KiB per tile "
      f"({spec.usable_memory_per_tile} B usable)")

print("\ncabling slot -> device id:")
for slot in range(topo.processors):
    board = slot // 2
    print(f"  slot {slot:2d} (board {board}) -> device {topo.device_of(slot):2d}")

print("\nhop distances from slot 0:")
print("  " + "  ".join(f"{topo.hop_distance(0, b)}" for b in range(16)))

# A same-parity trip rides the rail; slot 0 and slot 6 are both on the
# even rail, three boards apart.
print("\nroute slot 0 -> slot 6 (same rail):")
for edge in topo.route(0, 6):
    print(f"  {edge}")

# Crossing parity takes the rung on the source board first, then the
# other rail.  Slot 1 to slot 14 is the long diagonal of the ladder.
print("\nroute slot 1 -> slot 14 (cross parity, pass-through):")
for edge in topo.route(1, 14):
    print(f"  {edge}")

# Tile-level routes add the egress port, the on-chip exchange at both
# ends, and the ingress port.
src, dst = TileId(0, 10), TileId(3, 1200)
print(f"\ntile route {src} -> {dst}:")
for hop in topo.tile_route(src, dst):
    print(f"  {hop.kind:20s} {hop.key}")
