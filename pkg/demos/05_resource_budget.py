"""Resource budgets: what each projection costs next to the sensor.

Shipping raw bit-planes off-chip costs orders of magnitude more
bandwidth and readout power than computing a projection in place and
reading out the result. The budget table below is calibrated on the
reference 288-pixel, 3x6-core design; constants can be overridden
through a key=value config, and the readout side scales to larger
arrays.
"""

import photoncube as pc

spec = pc.ReadoutSpec(pixels=288, readout_rate=40.0)
report = pc.benchmark_table(spec)
print("reference design, 288 px @ 40 Hz projections:\n")
print(report.to_text())

cube_row = report.row("photon-cube")
sum_row = report.row("sum")
print(f"raw cube vs summed readout: {cube_row.bandwidth_kbps / sum_row.bandwidth_kbps:,.0f}x "
      f"bandwidth, {cube_row.total_uw / sum_row.total_uw:,.0f}x power\n")

# config overrides: the same table at a 20 Hz readout
slow = pc.benchmark_table(spec, overrides={"readout.rate_hz": "20"})
print(f"at 20 Hz the image rows drop to "
      f"{slow.row('sum').bandwidth_kbps:.2f} kb/s readout")

# readout scales with the array; processing stays per-core
mega = pc.scale_to_array(report, pixels=1_000_000, detection_uw=4500.0)
row = mega.row("three-projection")
print(f"\nscaled to 1 Mpx (plus 4.5 mW detection): three-projection readout "
      f"{row.bandwidth_kbps / 1024:,.1f} Mb/s, total {row.total_uw / 1000:,.2f} mW")
raw = mega.row("photon-cube")
print(f"raw cube at 1 Mpx would need {raw.bandwidth_kbps / 1024 / 1024:,.1f} Gb/s")
