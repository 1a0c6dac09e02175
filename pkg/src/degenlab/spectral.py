"""Spectral calculus for operators symmetric in the mu-inner product."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .assemble import DiscreteOperator


@dataclass
class SpectralDecomposition:
    """H = V diag(eigenvalues) V^T diag(mu) with V^T diag(mu) V = I."""
    eigenvalues: np.ndarray
    vectors: np.ndarray = field(repr=False)
    measure: np.ndarray = field(repr=False)
    shift: float = 0.0
    residual: float = 0.0
    space: object = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def function_values(self, F) -> np.ndarray:
        vals = np.asarray(F(self.eigenvalues))
        vals = np.broadcast_to(vals, self.eigenvalues.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("F is undefined or non-finite at an eigenvalue")
        return vals

    def kernel(self, F) -> np.ndarray:
        """Kernel of F(H) w.r.t. mu: K(x, y) = sum_i F(l_i) v_i(x) v_i(y)."""
        vals = self.function_values(F)
        return (self.vectors * vals) @ self.vectors.T

    def apply(self, F) -> np.ndarray:
        """Matrix of F(H)."""
        return self.kernel(F) * self.measure[None, :]

    def operator(self, F, tag: str = "F(H)") -> DiscreteOperator:
        return DiscreteOperator(self.apply(F), self.space, tag, meta={"shift": self.shift})


def eigendecompose(H, measure: np.ndarray | None = None) -> SpectralDecomposition:
    """Dense symmetric eigendecomposition (LAPACK) in the mu-inner product."""
    if isinstance(H, DiscreteOperator):
        mat, measure, shift, space = H.matrix, H.measure_in, H.meta.get("shift", 0.0), H.space
    else:
        mat, shift, space = np.asarray(H), 0.0, None
        measure = np.ones(mat.shape[0]) if measure is None else np.asarray(measure)
    sq = np.sqrt(measure)
    B = sq[:, None] * mat / sq[None, :]
    asym = np.max(np.abs(B - B.T)) if B.size else 0.0
    if asym > 1e-9 * max(np.max(np.abs(B)), 1.0):
        raise ValueError("operator is not symmetric in the mu-inner product")
    B = 0.5 * (B + B.T)
    lam, W = sla.eigh(B)
    V = W / sq[:, None]
    recon = (V * lam) @ V.T * measure[None, :]
    scale = max(np.max(np.abs(mat)), 1e-300)
    residual = float(np.max(np.abs(recon - mat)) / scale)
    if residual > 1e-8:
        warnings.warn(f"eigendecomposition residual {residual:.2e}")
    return SpectralDecomposition(lam, V, measure, shift, residual, space)


def apply_function(decomp: SpectralDecomposition, F, tag: str = "F(H)") -> DiscreteOperator:
    return decomp.operator(F, tag)


def propagator(decomp: SpectralDecomposition, z: complex) -> DiscreteOperator:
    """e^{-zH}, complex z allowed with Re z >= 0."""
    if np.real(z) < 0:
        raise ValueError("propagator needs Re z >= 0")
    return decomp.operator(lambda lam: np.exp(-z * lam), f"exp(-{z}H)")


def _operator_inputs(H):
    if isinstance(H, DiscreteOperator):
        return H.matrix, H.meta.get("shift")
    return np.asarray(H), None


def inv_sqrt_subordination(H, epsilon: float | None = None, sigma_max: float | None = None,
                           panels: int = 2000, tol: float = 1e-6) -> DiscreteOperator | np.ndarray:
    """H^{-1/2} = pi^{-1/2} int_0^inf e^{-s H} s^{-1/2} ds with s = sigma^2.

    Trapezoid rule in sigma on [0, sigma_max]; the sigma-nodes' propagators
    E^{k^2} (E = expm(-d^2 H)) are built by repeated multiplication, so no
    eigendecomposition is involved.  ``epsilon`` is a lower spectral bound.
    """
    mat, shift = _operator_inputs(H)
    eps = epsilon if epsilon is not None else shift
    if eps is None or eps <= 0:
        raise ValueError("subordination needs a positive spectral lower bound epsilon")
    if sigma_max is None:
        sigma_max = 12.0 / math.sqrt(eps)
    d = sigma_max / panels
    n = mat.shape[0]
    lam_max = float(np.max(np.sum(np.abs(mat), axis=1)))  # Gershgorin bound
    alias = 2.0 * math.exp(-math.pi**2 / max(lam_max * d * d, 1e-300))
    tail = math.exp(-sigma_max**2 * eps) / (2 * sigma_max * eps)
    E = sla.expm(-d * d * mat)
    E2 = E @ E
    total = 0.5 * np.eye(n)
    Q = np.eye(n)        # E^{k^2}
    P = E.copy()         # E^{2k+1}
    for k in range(1, panels + 1):
        Q = Q @ P
        P = P @ E2
        w = 0.5 if k == panels else 1.0
        total += w * Q
        if math.exp(-(k * d) ** 2 * eps) < 1e-18:
            break
    result = (2.0 * d / math.sqrt(math.pi)) * total
    err = alias + tail
    if err > tol:
        warnings.warn(f"subordination quadrature error estimate {err:.2e} exceeds {tol:.1e}")
    if isinstance(H, DiscreteOperator):
        return DiscreteOperator(result, H.space, "H^-1/2", meta={"error_estimate": err})
    return result


def positive_semigroup(A, tau: float, shift: float = 0.0) -> np.ndarray:
    """e^{-tau (A + shift I)} with entrywise relative accuracy.

    Requires non-positive off-diagonal entries.  Writing A = cI - B with
    B >= 0 entrywise, e^{tau B} is built by a non-negative Taylor series and
    repeated squaring, so no cancellation occurs and far-field entries keep
    their relative accuracy instead of drowning in round-off.
    """
    mat = A.matrix if isinstance(A, DiscreteOperator) else np.asarray(A)
    off = mat - np.diag(np.diag(mat))
    scale = max(np.max(np.abs(mat)), 1e-300)
    if np.max(off) > 1e-12 * scale:
        raise ValueError("positive_semigroup needs non-positive off-diagonal entries")
    c = float(np.max(np.diag(mat)))
    B = c * np.eye(mat.shape[0]) - mat
    B[B < 0] = 0.0
    if tau == 0:
        return np.eye(mat.shape[0])
    norm = max(float(np.max(np.sum(B, axis=1))), c, 1e-300)
    squarings = max(0, math.ceil(math.log2(tau * norm / 0.5))) if tau * norm > 0.5 else 0
    delta = tau / 2**squarings
    X = delta * B
    term = np.eye(mat.shape[0])
    E = term.copy()
    for m in range(1, 40):
        term = term @ X / m
        E += term
        if np.max(term) < 1e-18 * np.max(E):
            break
    E *= math.exp(-delta * (c + shift))
    for _ in range(squarings):
        E = E @ E
    return E


def fourier_calculus_crosscheck(decomp: SpectralDecomposition, F, r: float,
                                xi_max: float = 64.0, panels: int = 2**14,
                                lam_points: int = 4097) -> tuple[np.ndarray, float]:
    """F(H) = int g^(xi) e^{-(1 - i xi) H / r} dxi with g(lam) = F(r lam) e^lam.

    F must vanish beyond r.  Truncated trapezoid in xi; g^ by trapezoid in
    lam.  Returns (matrix of F(H), max-abs deviation from direct calculus).
    """
    lam = np.linspace(0.0, 1.0, lam_points)
    beyond = np.linspace(1.0, 2.0, 257)[1:]
    if np.any(np.abs(F(r * beyond)) > 0):
        raise ValueError("F must be supported in [0, r]")
    g = F(r * lam) * np.exp(lam)
    dl = lam[1] - lam[0]
    wl = np.full(lam.size, dl)
    wl[0] = wl[-1] = dl / 2
    xi = np.linspace(-xi_max, xi_max, panels + 1)
    dxi = xi[1] - xi[0]
    wx = np.full(xi.size, dxi)
    wx[0] = wx[-1] = dxi / 2
    ghat = np.empty(xi.size, dtype=complex)
    chunk = 1024
    for i in range(0, xi.size, chunk):
        ph = np.exp(-1j * np.outer(xi[i:i + chunk], lam))
        ghat[i:i + chunk] = ph @ (wl * g) / (2 * np.pi)
    scaled = decomp.eigenvalues / r
    vals = np.empty(scaled.size, dtype=complex)
    coef = wx * ghat
    for i in range(0, scaled.size, 256):
        s = scaled[i:i + 256]
        vals[i:i + 256] = np.exp(-np.outer(s, 1 - 1j * xi)) @ coef
    mat = (decomp.vectors * vals) @ decomp.vectors.T * decomp.measure[None, :]
    direct = decomp.apply(F)
    return mat, float(np.max(np.abs(mat - direct)))
