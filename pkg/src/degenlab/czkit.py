"""Calderon-Zygmund decomposition, weak-L1 quasi-norms and norm estimators.

Weak-(1,1) lower bounds use normalised delta inputs only.  For a kernel
operator on a finite grid any f in L1 is a non-negative combination of
normalised deltas, f = sum_y (f(y) mu_y) delta_y, so the delta columns
already probe the extreme points of the L1 unit ball; the quasi-norm is not
convex, so this gives a lower bound rather than the exact operator value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assemble import DiscreteOperator
from .media import Region
from .space import GridSpace, ball, volume


# --------------------------------------------------------------------------
# CZ decomposition

@dataclass
class CZDecomposition:
    alpha: float
    f: np.ndarray = field(repr=False)
    good: np.ndarray = field(repr=False)
    bad: list = field(repr=False)          # node functions b_i
    cubes: list = field(repr=False)        # node index arrays Q_i
    centers: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    c_good: float
    c_bad: float
    c_mass: float
    overlap: int
    space: GridSpace = field(repr=False)

    @property
    def n_bad(self) -> int:
        return len(self.bad)

    def reconstruction_error(self) -> float:
        total = self.good + (np.sum(self.bad, axis=0) if self.bad else 0.0)
        return float(np.max(np.abs(total - self.f)))

    def balls(self) -> list[np.ndarray]:
        return [ball(self.space, int(x), r) for x, r in zip(self.centers, self.radii)]

    def invariants(self, tol: float = 1e-12) -> dict:
        """Check the five decomposition properties plus mean-zero bad parts."""
        sp, a = self.space, self.alpha
        mu = sp.node_measure
        d = sp.dim
        scale = max(1.0, float(np.max(np.abs(self.f))))
        norm1 = float(np.sum(np.abs(self.f) * mu))
        balls = self.balls()
        support, size, mean0 = True, True, True
        cover = np.zeros(sp.n_nodes, dtype=int)
        for b, B in zip(self.bad, balls):
            outside = np.ones(sp.n_nodes, dtype=bool)
            outside[B] = False
            support &= bool(np.all(b[outside] == 0))
            size &= bool(np.sum(np.abs(b) * mu) / volume(sp, B) <= 2 ** (d + 1) * a * (1 + tol))
            mean0 &= bool(abs(np.sum(b * mu)) <= tol * scale * mu.sum())
            cover[B] += 1
        vol = sum(volume(sp, B) for B in balls)
        return {
            "reconstruction": self.reconstruction_error() <= tol * scale,
            "good_bounded": bool(np.max(np.abs(self.good)) <= 2 ** d * a * (1 + tol)),
            "bad_supported": support,
            "bad_size": size,
            "mass": bool(vol <= self.c_mass * norm1 / a * (1 + tol)),
            "overlap": bool(cover.max(initial=0) <= self.overlap),
            "mean_zero": mean0,
        }


def _cube_geometry(space: GridSpace, nodes: np.ndarray) -> tuple[int, float]:
    """Node nearest the cube's centroid and the circumscribed radius (+ h/2)."""
    pts = space.node_coords[nodes]
    centre = pts.mean(axis=0)
    x = int(nodes[np.argmin(np.sum((pts - centre) ** 2, axis=1))])
    r = float(space.distances_from(x, pts).max()) + 0.5 * min(space.spacing)
    return x, r


def cz_decompose(space: GridSpace, f, alpha: float) -> CZDecomposition:
    """Maximal dyadic cubes with average |f| > alpha, selected top-down."""
    f = np.asarray(f, dtype=float)
    mu = space.node_measure
    norm1 = float(np.sum(np.abs(f) * mu))
    if not alpha > norm1 / space.total_measure:
        raise ValueError(f"alpha must exceed ||f||_1 / mu(X) = {norm1 / space.total_measure:.6g}")
    top = int(math.ceil(math.log2(max(space.nodes_per_axis))))
    covered = np.zeros(space.n_nodes, dtype=bool)
    cubes = []
    for level in range(top, -1, -1):
        labels = space.dyadic_labels(level)
        free = ~covered
        if not free.any():
            break
        n_lab = labels.max() + 1
        mass = np.bincount(labels, np.abs(f) * mu, n_lab)
        meas = np.bincount(labels, mu, n_lab)
        hit = np.bincount(labels, covered.astype(float), n_lab) > 0
        chosen = np.flatnonzero((mass > alpha * meas) & ~hit)
        for lab in chosen:
            nodes = np.flatnonzero(labels == lab)
            cubes.append(nodes)
            covered[nodes] = True
    good = f.copy()
    bad, centers, radii = [], [], []
    c_mass = 1.0
    for Q in cubes:
        avg = np.sum(f[Q] * mu[Q]) / np.sum(mu[Q])
        b = np.zeros(space.n_nodes)
        b[Q] = f[Q] - avg
        good[Q] = avg
        bad.append(b)
        x, r = _cube_geometry(space, Q)
        centers.append(x)
        radii.append(r)
        c_mass = max(c_mass, volume(space, ball(space, x, r)) / np.sum(mu[Q]))
    cover = np.zeros(space.n_nodes, dtype=int)
    for x, r in zip(centers, radii):
        cover[ball(space, x, r)] += 1
    d = space.dim
    return CZDecomposition(alpha, f, good, bad, cubes, np.array(centers, dtype=int),
                           np.array(radii), float(2**d), float(2 ** (d + 1)), float(c_mass),
                           int(cover.max(initial=0)), space)


# --------------------------------------------------------------------------
# weak L1

def weak_l1_norm(f, measure=None) -> float:
    """sup_a a mu{|f| > a}, attained as a -> v from below at a value v of |f|."""
    a = np.abs(np.asarray(f)).ravel()
    mu = np.ones_like(a) if measure is None else np.asarray(measure, dtype=float).ravel()
    order = np.argsort(-a, kind="stable")
    vals, cum = a[order], np.cumsum(mu[order])
    if vals.size == 0:
        return 0.0
    # include every node tied with v in mu{|f| >= v}
    last = np.searchsorted(-vals, -vals, side="right") - 1
    return float(np.max(vals * cum[last]))


@dataclass
class NormEstimate:
    kind: str
    value: float
    witness: np.ndarray = field(repr=False)
    method: dict = field(default_factory=dict)

    def reproduce(self, T) -> float:
        """Recompute the estimate by applying ``T`` to the stored witness."""
        mat, mu_in, mu_out = _matrix_and_measures(T)
        out = mat @ self.witness
        if self.kind == "weak11_lower":
            return weak_l1_norm(out, mu_out) / _lp(self.witness, 1.0, mu_in)
        p = self.method["p"]
        return _lp(out, p, mu_out) / _lp(self.witness, p, mu_in)


def _matrix_and_measures(T):
    if isinstance(T, DiscreteOperator):
        return T.matrix, T.measure_in, T.measure_out
    if hasattr(T, "values") and hasattr(T, "in_measure"):     # KernelMatrix
        return T.values * T.in_measure[None, :], T.in_measure, T.out_measure
    mat = np.asarray(T)
    return mat, np.ones(mat.shape[1]), np.ones(mat.shape[0])


def _lp(u, p: float, mu) -> float:
    a = np.abs(u)
    if math.isinf(p):
        return float(a.max())
    return float(np.sum(a**p * mu) ** (1.0 / p))


def weak_operator_lower(K) -> NormEstimate:
    """sup_y ||K(., y)||_{1,w}: weak-(1,1) lower bound from delta inputs."""
    mat, mu_in, mu_out = _matrix_and_measures(K)
    vals = mat / mu_in[None, :]
    per_col = np.array([weak_l1_norm(vals[:, y], mu_out) for y in range(vals.shape[1])])
    y = int(np.argmax(per_col))
    witness = np.zeros(vals.shape[1])
    witness[y] = 1.0 / mu_in[y]
    return NormEstimate("weak11_lower", float(per_col[y]), witness,
                        {"column": y, "per_column": per_col})


def _dual(y, p: float):
    a = np.abs(y)
    phase = np.where(a > 0, y / np.where(a > 0, a, 1.0), 0.0)
    return a ** (p - 1) * phase


def lp_norm_estimate(T, p: float, restarts: int = 8, seed: int = 0,
                     iterations: int = 200) -> NormEstimate:
    """||T||_{L^p(mu) -> L^p(mu)}: exact for p in {1, 2, inf}, otherwise the
    best of several dual power iterations (a certified lower bound)."""
    if not 1 <= p <= math.inf:
        raise ValueError("p must lie in [1, inf]")
    mat, mu_in, mu_out = _matrix_and_measures(T)
    n = mat.shape[1]
    if p == 1:
        cols = np.abs(mat).T @ mu_out / mu_in
        y = int(np.argmax(cols))
        w = np.zeros(n)
        w[y] = 1.0 / mu_in[y]
        return NormEstimate("p_to_p_lower", float(cols[y]), w, {"p": 1.0, "method": "exact"})
    if math.isinf(p):
        rows = np.abs(mat).sum(axis=1)
        x = int(np.argmax(rows))
        w = np.conj(_dual(mat[x], 1.0)) if np.iscomplexobj(mat) else np.sign(mat[x])
        return NormEstimate("p_to_p_lower", float(rows[x]), w.astype(mat.dtype),
                            {"p": math.inf, "method": "exact"})
    din, dout = mu_in ** (1.0 / p), mu_out ** (1.0 / p)
    B = dout[:, None] * mat / din[None, :]
    if p == 2:
        U, S, Vh = np.linalg.svd(B)
        w = np.conj(Vh[0]) / din
        return NormEstimate("two_norm_exact", float(S[0]), w, {"p": 2.0, "method": "svd"})
    q = p / (p - 1)
    rng = np.random.default_rng(seed)
    cplx = np.iscomplexobj(B)
    starts = [np.ones(n)]
    col_norms = np.sum(np.abs(B) ** p, axis=0)
    starts.append(np.eye(n)[int(np.argmax(col_norms))])
    for _ in range(restarts):
        x = rng.standard_normal(n)
        if cplx:
            x = x + 1j * rng.standard_normal(n)
        starts.append(x)
    best, best_x = -1.0, None
    for x in starts:
        x = x / np.sum(np.abs(x) ** p) ** (1 / p)
        val = 0.0
        for _ in range(iterations):
            y = B @ x
            new = float(np.sum(np.abs(y) ** p) ** (1 / p))
            z = B.conj().T @ _dual(y, p)
            x_next = _dual(z, q)
            nrm = np.sum(np.abs(x_next) ** p) ** (1 / p)
            if nrm == 0:
                break
            x = x_next / nrm
            if new <= val * (1 + 1e-12):
                val = max(val, new)
                break
            val = new
        y = B @ x
        val = float(np.sum(np.abs(y) ** p) ** (1 / p))
        if val > best:
            best, best_x = val, x
    return NormEstimate("p_to_p_lower", best, best_x / din,
                        {"p": float(p), "method": "dual_power", "restarts": restarts, "seed": seed})


# --------------------------------------------------------------------------
# bound arithmetic and restriction

def theorem1_rhs(W: float, delta: float, T_p0_norm: float, S_q0_norm: float, p0: float, q0: float,
                 C_fit: float = 1.0, dim: int = 1) -> float:
    """C_fit (1+delta)^d (W + ||T|| + ||S||^q0 ||T||^(1-q0))."""
    vals = (W, delta, T_p0_norm, S_q0_norm, C_fit)
    if any(v < 0 for v in vals):
        raise ValueError("all inputs must be non-negative")
    if not (1 < p0 < math.inf and 1 < q0 < math.inf):
        raise ValueError("p0 and q0 must lie in (1, inf)")
    mixed = 0.0 if S_q0_norm == 0 else S_q0_norm**q0 * T_p0_norm ** (1 - q0)
    return C_fit * (1 + delta) ** dim * (W + T_p0_norm + mixed)


def restrict_extend(T: DiscreteOperator, region: Region) -> DiscreteOperator:
    """1_Omega T (1_Omega f), as an operator on the whole grid."""
    m_out = region.node_mask if T.codomain == "node" else region.cell_mask()
    m_in = region.node_mask if T.domain == "node" else region.cell_mask()
    mat = T.matrix * m_out[:, None] * m_in[None, :]
    return DiscreteOperator(mat, T.space, f"P*{T.tag}*P", T.domain, T.codomain, dict(T.meta))
