"""Relative error of the lattice heat kernel against the periodised Gaussian
as a function of the comparison radius and of t/h^2 (1D, a = 1, no shift)."""
import math

import numpy as np

from degenlab import assemble_form_operator, build_grid, eigendecompose, make_field
from degenlab.experiments import periodic_heat_kernel

L, N = 32.0, 512
sp = build_grid(1, L, N, "periodic")
dec = eigendecompose(assemble_form_operator(sp, make_field("identity", {}, 1)))
h = sp.spacing[0]
D = sp.node_distance_matrix()
radii = (2.0, 3.0, 4.0, 5.0, 6.0)
print("t/h^2  " + "  ".join(f"r={r:g}sqrt(t)" for r in radii))
for tau in (25.0, 50.0, 100.0, 200.0, 400.0):
    t = tau * h * h
    K = dec.kernel(lambda lam: np.exp(-t * lam))
    ex = periodic_heat_kernel(sp.node_coords[:, 0], L, t)
    rel = np.abs(K - ex) / ex
    errs = [rel[D <= r * math.sqrt(t)].max() for r in radii]
    print(f"{tau:6g} " + "  ".join(f"{e:12.4g}" for e in errs))
