"""Walkthrough: conditional U-statistic estimation on a known process.

Simulates (X, Y) pairs with Y = X^2 + noise, evaluates Stute's ratio
estimator for two functions of Y-pairs over a dyadic bandwidth sweep, and
compares each cell against the closed-form regression and its population
centering.

Run:  python3 demos/estimator_walkthrough.py
"""

import numpy as np

from condu import (
    builtin_member,
    centering,
    estimate,
    get_kernel,
    make_dgp,
    simulate,
    true_regression,
)
from condu.bandwidth import RateRegime, lower_bandwidth
from condu.harness import bandwidths, child_seed
from condu.config import parse_config

doc = {
    "dgp": {"id": "uniform_quadratic", "noise": "gaussian", "noise_param": 0.3},
    "kernel": {"id": "epanechnikov-rescaled"},
    "function_class": {
        "m": 2,
        "members": ["sum", "product"],
        "regime": {"kind": "unbounded", "p": 3.0},
    },
    "regime": {"c": 0.6, "b0": 0.4},
    "grids": {"interval": [0.3, 0.7], "points_per_axis": 3},
    "experiment": {"n_list": [2000], "reps": 1, "seed": 42},
}
cfg = parse_config(doc)

n = cfg.n_list[0]
s = simulate(cfg.dgp, n, child_seed(cfg.seed, n, 0))
hs = bandwidths(cfg, n)
print(f"sample: n={n}, Y = X^2 + N(0, 0.3^2), X ~ U(0, 1)")
print(f"bandwidth sweep (h^2 doubles): {[round(h, 4) for h in hs]}\n")

t = (0.4, 0.6)
print(f"{'phi':>8} {'h':>8} {'estimate':>10} {'centering':>10} {'truth':>8}")
for phi in cfg.fc.members:
    truth = true_regression(cfg.dgp, phi, np.asarray(t))
    for h in hs:
        cell = estimate(phi, h, t, s, cfg.kernel)
        cent = centering(phi, h, t, cfg.dgp, cfg.kernel)
        est = f"{cell.mhat:.4f}" if cell.status == "ok" else cell.status
        print(f"{phi.id:>8} {h:8.4f} {est:>10} {cent:10.4f} {truth:8.4f}")
    print()

print("The estimate tracks the centering at every bandwidth; the gap between")
print("centering and truth is the deterministic smoothing bias, which grows")
print("with h. The rate anchor below which no bandwidth is swept:")
print(f"  a_n = {lower_bandwidth(cfg.regime, n):.4f}  "
      f"(regime: {cfg.regime.kind}, p={cfg.regime.p})")
