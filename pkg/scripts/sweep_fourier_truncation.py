"""Deviation of the Fourier-integral functional calculus from the spectral
one for smooth bumps on [1/4, 1], against the frequency truncation."""
import numpy as np

from degenlab import assemble_form_operator, build_grid, eigendecompose, make_field, shift_identity
from degenlab.spectral import fourier_calculus_crosscheck


def bump(a, p=1.0):
    def F(lam):
        lam = np.asarray(lam, dtype=float)
        out = np.zeros_like(lam)
        m = (lam > 0.25) & (lam < 1.0)
        out[m] = np.exp(-a / ((lam[m] - 0.25) * (1 - lam[m])) ** p + a / 0.140625**p)
        return out
    return F


sp = build_grid(1, 8.0, 64)
dec = eigendecompose(shift_identity(assemble_form_operator(sp, make_field("identity", {}, 1))))
r = float(dec.eigenvalues.max()) * 1.01
print("shape        xi_max=32     xi_max=64     xi_max=128")
for a, p in ((0.140625, 1.0), (0.5, 1.0), (1.0, 1.0), (2.0, 1.0), (0.1, 2.0)):
    F = lambda lam, a=a, p=p: bump(a, p)(lam / r)
    devs = [fourier_calculus_crosscheck(dec, F, r, xi_max=x, panels=int(256 * x))[1] for x in (32, 64, 128)]
    print(f"a={a:<8g}p={p:g} " + "  ".join(f"{d:12.3e}" for d in devs))
