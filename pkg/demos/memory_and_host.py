# The two ends of the data path the interconnect doesn't cover: tile
# local memory (width-dependent chip-wide bandwidth, block saturation)
# and the host link (flat latency, lane-count bandwidth caps).

from bspsim import default_bench
from bspsim.cost_model import (host_bandwidth_cap, host_transfer,
                               memory_latency, memory_read_bandwidth,
                               memory_write_bandwidth, saturation)

bench = default_bench()
params = bench.params

cycles, ns = memory_latency(params)
print(f"local memory latency: {cycles} cycles = {ns:.2f} ns, "
      f"independent of stride and size")

print("\nchip-wide read bandwidth by access width:")
for width in (32, 64, 128):
    chip_bw, tile_bw = memory_read_bandwidth(params, width_bits=width)
    print(f"  {width:3d}-bit loads: {chip_bw/1e12:6.2f} TB/s "
          f"({tile_bw/1e9:5.2f} GB/s per tile)")
chip_bw, _ = memory_write_bandwidth(params)
print(f"  stores:        {chip_bw/1e12:6.2f} TB/s")

print("\nblock-transfer saturation (setup cost amortizing away):")
for size in (256, 1024, 4096, 8192, 65536):
    frac = saturation(size, params.block_half_sat_bytes)
    chip_bw, _ = memory_read_bandwidth(params, block_bytes=size)
    print(f"  {size:6d} B blocks: {frac:6.1%} of peak = "
          f"{chip_bw/1e12:6.2f} TB/s")

# fewer active threads share the same ports
print("\nthread scaling (128-bit loads):")
for threads in (1, 2, 4, 6):
    chip_bw, _ = memory_read_bandwidth(params, threads=threads)
    print(f"  {threads} of 6 threads: {chip_bw/1e12:6.2f} TB/s")

print(f"\nhost round trip: flat {params.host_latency_ns/1000:.2f} us "
      f"to any processor")

print("\nhost bandwidth cap by processors attached:")
for procs in (1, 2, 4, 8, 16):
    cap = host_bandwidth_cap(params, procs)
    print(f"  {procs:2d} processors: {cap/1e9:6.2f} GB/s")

print("\neffective host rate vs transfer size (16 processors):")
for size in (4096, 40_000, 400_000, 4_000_000):
    latency_ns, rate_bps = host_transfer(params, size, 16)
    total_us = (latency_ns + size * 1e9 / rate_bps) / 1000
    print(f"  {size:9,d} B: {rate_bps/1e9:6.2f} GB/s, "
          f"round trip {total_us:8.2f} us")
