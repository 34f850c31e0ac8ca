#!/usr/bin/env python
"""Two-step plug-in estimates versus coordinate-descent refinement.

Draws target-plus-interference observations across a range of training
sizes and compares the closed-form two-step amplitude estimates (the
descent's seed) against the descended minimizer of the determinant-ratio
objective.  The descent never increases the objective, and its payoff is
concentrated in the sample-starved regime: with only 2K real training
vectors against N dimensions, the plug-in covariance is noisy and the
joint minimizer can sit well away from the two-step seed.  As training
grows the seed is already nearly optimal and the two estimates coincide.

Estimation error here depends only on the interference realization, not
on the signal level, so SINR is held fixed; the training size K is the
axis that matters.  A nonzero Doppler is used because at zero Doppler
the two quadrature channels decouple and the two-step estimate is
already the exact minimizer.

Runs in a few seconds.
"""

import numpy as np

from symdet import Scenario
from symdet.batch import draw_trials, estimates_from_arrays, split_view

N = 8
SINR_DB = 15.0
TRIALS = 2_000
SEED = 7

print(f"N={N}, Doppler 0.08 cycles/pulse, SINR {SINR_DB:.0f} dB, "
      f"{TRIALS} trials per row\n")
print(f"{'K':>4s} {'regime':>14s} {'mse two-step':>13s} "
      f"{'mse descended':>14s} {'improvement':>12s}")

for k in (4, 6, 8, 12, 24):
    scenario = Scenario(n=N, k=k, rho_c=0.9, cnr_db=20.0, nu_d=0.08)
    v = scenario.steering_pair()
    alpha = scenario.alpha_at(SINR_DB)
    r, rs = draw_trials(scenario, alpha, SEED, 0, TRIALS)
    z1, z2, zs = split_view(r, rs)
    a1_ts, a2_ts, a1, a2 = estimates_from_arrays(z1, z2, zs, v)
    mse_ts = float(np.mean((a1_ts - alpha.a1) ** 2 + (a2_ts - alpha.a2) ** 2))
    mse_cd = float(np.mean((a1 - alpha.a1) ** 2 + (a2 - alpha.a2) ** 2))
    gain = (mse_ts - mse_cd) / mse_ts * 100.0
    regime = "starved (K<N)" if k < N else "K >= N"
    print(f"{k:4d} {regime:>14s} {mse_ts:13.4f} {mse_cd:14.4f} {gain:11.2f}%")

print("\nThe descended estimate is never worse in mean square, and the")
print("margin widens as the training set shrinks toward the 2K >= N floor.")
