"""Weak-type ratio weak_lower / rhs(C=1) for every benchmark instance, and the
held-out slack obtained from different choices of the three fitting instances."""
from itertools import combinations

import numpy as np

from degenlab.experiments import (CoherenceConfig, _multiplier_instance, _riesz_instance, length_grid,
                                  weak_type_ratio)
from degenlab.multiplier import make_multiplier

cfg = CoherenceConfig()
sp, _, _, dec, chi = cfg.plateau.build()
tg = length_grid(sp, cfg.points, cfg.t_max)
instances = {
    "imaginary_power(1)": ("imaginary_power", {"s_im": 1.0}),
    "imaginary_power(2)": ("imaginary_power", {"s_im": 2.0}),
    "imaginary_power(3)": ("imaginary_power", {"s_im": 3.0}),
    "bochner_riesz(1.1,16)": ("bochner_riesz", {"alpha": 1.1, "R": 16.0}),
    "heat(0.01)": ("heat", {"t": 0.01}),
    "schrodinger(1,0.05)": ("schrodinger", {"alpha": 1.0, "t": 0.05}),
    "wave(1.5,0.5)": ("wave", {"alpha": 1.5, "t": 0.5}),
}
ratios = {}
for label, (name, params) in instances.items():
    ratios[label] = weak_type_ratio(_multiplier_instance(sp, dec, chi, make_multiplier(name, **params), tg,
                                                       cfg.delta), cfg)
ratios["riesz"] = weak_type_ratio(_riesz_instance(sp, dec, chi, tg, cfg.delta), cfg)
for k, v in ratios.items():
    print(f"{k:24s} {v:.4f}")
held = ("schrodinger(1,0.05)", "wave(1.5,0.5)", "riesz")
pool = [k for k in ratios if k not in held]
print("\nfit set -> min held-out slack")
for fit in combinations(pool, 3):
    c = max(ratios[k] for k in fit)
    slack = min(1 - ratios[k] / c for k in held)
    print(f"{', '.join(fit):70s} {slack:+.3f}")
