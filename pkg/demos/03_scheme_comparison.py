"""Reference optimizer across the four access schemes on a few scenarios.

Run: python3 demos/03_scheme_comparison.py   (about a minute)
"""

import numpy as np

from macnoma.baselines import Scheme, reference_optimize
from macnoma.channel import SystemConfig, sample_scenario
from macnoma.seeding import stream

config = SystemConfig()
n = 4
table = {s: [] for s in Scheme}
for i in range(n):
    scenario = sample_scenario(config, stream(0, "scenario", i))
    for s in Scheme:
        rep = reference_optimize(scenario, config, s, budget=10_000, seed=i)
        table[s].append(rep.best_objective if rep.feasible else 0.0)

for s, vals in table.items():
    print(f"{s.value:10s} mean sum rate {np.mean(vals):.3f} bits/s/Hz  per scenario {np.round(vals, 2)}")
