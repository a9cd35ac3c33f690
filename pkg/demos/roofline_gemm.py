# Compute ceilings and where a square matrix multiply lands on them.
# The wide accumulating unit gives 16 flops/cycle/tile in single
# precision and 64 in mixed; plain vector code gets 4 and 8.  Sustained
# kernels reach a calibrated fraction of those peaks.

from bspsim import default_bench, roofline

bench = default_bench()
params = bench.params

print("per-processor ceilings:")
for unit in roofline.UNITS:
    for prec in roofline.PRECISIONS:
        peak = roofline.peak_flops(params, unit, prec)
        sustained = roofline.achievable_flops(params, unit, prec)
        print(f"  {unit:6s} {prec:6s}: peak {peak/1e12:7.2f} TFLOP/s, "
              f"sustained {sustained/1e12:7.2f}")

print(f"\nmemory roofs: read {params.peak_read_bps/1e12:.2f} TB/s, "
      f"write {params.peak_write_bps/1e12:.2f} TB/s")

for prec in roofline.PRECISIONS:
    ridge = roofline.ridge_intensity(params, "amp", prec)
    print(f"ridge point ({prec}): {ridge:.2f} flops/byte")

# walk the attainable curve across the ridge
print("\nattainable (amp, single, sustained):")
for intensity in (0.125, 0.5, 1.0, 2.0, 8.0):
    got = roofline.attainable_flops(params, intensity, sustained=True)
    print(f"  {intensity:6.3f} flops/byte -> {got/1e12:6.2f} TFLOP/s")

# the biggest n-by-n-by-n multiply whose three operands fit on chip
for prec in roofline.PRECISIONS:
    n = roofline.gemm_max_operand(params, prec)
    print(f"\nlargest resident GEMM ({prec}): n = {n}")
    for probe in (256, n, n + 1):
        pt = roofline.gemm_point(params, probe, precision=prec)
        fits = "fits" if pt.fits else "spills"
        print(f"  n={probe:5d}: {pt.intensity:7.1f} flops/byte, "
              f"{pt.attainable_flops/1e12:6.2f} TFLOP/s, {pt.bound}-bound, "
              f"{fits}")
