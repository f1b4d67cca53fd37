"""Field-response channels: how the received gain changes as a movable antenna slides.

Run: python3 demos/01_channel_model.py
"""

import numpy as np

from macnoma.channel import SystemConfig, channels_at, sample_scenario

config = SystemConfig()
scenario = sample_scenario(config, seed=7)
center = config.region_center

# Slide user N's receive antenna along x across the region and watch |h_N|^2 fluctuate.
xs = config.region_origin + np.linspace(0.0, config.region_side, 9)
print(f"region side = {config.region_side / config.wavelength:.1f} wavelengths")
print("   x/lambda   ||h_N||^2 / mean")
for x in xs:
    r_n = np.array([x, center[1]])
    ch = channels_at(scenario, center, r_n, center, config)
    gain = np.mean(np.abs(ch.h_n) ** 2) / config.mean_gain("bn")
    print(f"   {x / config.wavelength:8.3f}   {gain:8.3f}")

# Batched evaluation: a whole grid of positions in one call.
grid = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1)
ch = channels_at(scenario, center, grid, grid, config)
print("grid gain spread (max/min):", float(np.ptp(np.abs(ch.h_n[..., 0]) ** 2) / np.min(np.abs(ch.h_n[..., 0]) ** 2)))
