"""Walkthrough: urban map synthesis, rasterization, and condition images.

Generates a seeded block-grid map, rasterizes it, samples endpoints, and
builds the three-channel condition image, printing the numbers that matter
along the way.  Everything is deterministic in the seed.
"""

import numpy as np

from apsbench import (HeatmapConfig, MapGenParams, build_condition, free_fraction,
                      gaussian_heatmap, generate_map, rasterize, sample_endpoints)

params = MapGenParams()
m = generate_map(seed=7, params=params)
print(f"map 0: {len(m.buildings)} buildings on a "
      f"{m.width_m:.0f} x {m.height_m:.0f} m scene at {m.resolution_m} m/px")
print(f"free-area fraction: {free_fraction(m):.3f} (invariant: >= 0.30)")

raster = rasterize(m, 256, 256)
print(f"raster: {raster.H} x {raster.W}, {int(raster.cells.sum())} building pixels")

# ASCII thumbnail, 1 character per 8x8 pixel block
blocks = raster.cells.reshape(32, 8, 32, 8).mean(axis=(1, 3))
for row in blocks[::2]:
    print("".join("#" if v > 0.5 else ("+" if v > 0.1 else ".") for v in row))

tx, rx = sample_endpoints(m, n_tx=2, n_rx=3, seed=3)
print(f"\nsampled tx: {[(round(p.x, 1), round(p.y, 1)) for p in tx]}")
print(f"sampled rx: {[(round(p.x, 1), round(p.y, 1)) for p in rx]}")

hm = HeatmapConfig(sigma_px=2.0)
g = gaussian_heatmap(tx[0], hm, 256, 256, m.resolution_m)
peak = np.unravel_index(int(np.argmax(g)), g.shape)
print(f"\ntx heatmap: max {g.max()} at pixel {peak} "
      f"(tx cell is row {int(tx[0].y / 2)}, col {int(tx[0].x / 2)})")

cond = build_condition(raster, tx[0], rx[0], hm, m.resolution_m)
print(f"condition image: shape {cond.channels.shape}, "
      f"channel maxima {[float(c.max()) for c in cond.channels]}")
