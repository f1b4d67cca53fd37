"""Rates of the cooperative NOMA link for a hand-built candidate.

Run: python3 demos/02_link_rates.py
"""

import numpy as np

from macnoma.channel import SystemConfig, channels_at, sample_scenario
from macnoma.link_rates import CandidateSolution, evaluate_links
from macnoma.problem import default_beamformers

config = SystemConfig()
scenario = sample_scenario(config, seed=3)
c = config.region_center
w_f, w_n = default_beamformers(config.n_bs_antennas, config.p_t)
# NOMA split: most of the BS power goes to the weaker far user.
w_f, w_n = w_f * np.sqrt(1.8), w_n * np.sqrt(0.2)
t_d = c + np.array([config.wavelength / 2, 0.0])

for p_n in (0.0, config.p_nf / 4, config.p_nf):
    sol = CandidateSolution(w_f=w_f, w_n=w_n, p_n=p_n, t_d=t_d, r_n=c, r_f=c)
    ev = evaluate_links(channels_at(scenario, t_d, c, c, config), sol, config)
    print(f"P_N={p_n * 1e3:6.2f} mW  R_NN={ev.r_nn:.3f}  R_NF={ev.r_nf:.3f}  "
          f"R_MRC={ev.r_mrc:.3f}  R_FF={ev.r_ff:.3f}  sum={ev.sum_rate:.3f}  feasible={bool(ev.feasible)}")

# Channel-blind beamformers rarely meet every QoS floor; the reference optimizer does.
from macnoma.baselines import Scheme, reference_optimize  # noqa: E402

rep = reference_optimize(scenario, config, Scheme.MA_CNOMA, budget=5_000, seed=0)
ev = rep.evaluation
print(f"optimized   R_NN={ev.r_nn:.3f}  R_NF={ev.r_nf:.3f}  R_MRC={ev.r_mrc:.3f}  R_FF={ev.r_ff:.3f}  "
      f"sum={ev.sum_rate:.3f}  feasible={rep.feasible}  P_N={float(rep.best_solution.p_n) * 1e3:.2f} mW")
