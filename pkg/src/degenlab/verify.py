"""Kernel extraction and measurement of the kernel/operator inequalities.

Conventions: a kernel K of an operator T satisfies
``Tu(x) = sum_y K(x, y) u(y) mu_y``.  Length-scale parameters ``t`` of the
families ``e^{-t^2 H} M_chi`` are lengths; time parameters of ``e^{-tH}``
are times.  Measurements outside their validity window are flagged, not
treated as violations.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .assemble import DiscreteOperator, GradientMaps, discrete_gradient
from .media import CoefficientField, Cutoff, Region, ellipticity_check
from .multiplier import DyadicPartition, holder_norm, mihlin_sup
from .space import GridSpace, annulus, ball, volume
from .spectral import SpectralDecomposition, positive_semigroup
from .tables import Row

C_REF = 0.125
NOISE_FLOOR = 1e-10
EXP_GUARD = 700.0


def weights_on(space: GridSpace, where, on: str = "node") -> np.ndarray:
    """Multiplier values of a cutoff, region, constant or array on nodes/cells."""
    size = space.n_nodes if on == "node" else space.n_cells
    if where is None:
        return np.ones(size)
    if isinstance(where, Cutoff):
        return where.nodes(space) if on == "node" else where.cells(space)
    if isinstance(where, Region):
        return where.node_mask.astype(float) if on == "node" else where.cell_mask().astype(float)
    if np.isscalar(where):
        return np.full(size, float(where))
    arr = np.asarray(where, dtype=float)
    if arr.shape != (size,):
        raise ValueError(f"weights have shape {arr.shape}, expected ({size},)")
    return arr


def time_window(space: GridSpace) -> tuple[float, float]:
    h, L = max(space.spacing), min(space.extent)
    return 4.0 * h * h, (L / 4.0) ** 2


def default_t_grid(space: GridSpace, points: int = 25) -> np.ndarray:
    lo, hi = time_window(space)
    return np.geomspace(lo, hi, points)


def default_x_samples(space: GridSpace, where, count: int = 16, seed: int = 0) -> np.ndarray:
    """Up to ``count`` nodes inside {chi = 1}, drawn by a seeded permutation."""
    w = weights_on(space, where)
    inside = np.flatnonzero(np.abs(w - 1.0) < 1e-12)
    if inside.size == 0:
        inside = np.flatnonzero(w == w.max())
    if inside.size <= count:
        return inside
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(inside, size=count, replace=False))


# --------------------------------------------------------------------------
# kernels

@dataclass
class KernelMatrix:
    values: np.ndarray = field(repr=False)
    space: GridSpace = field(repr=False)
    domain: str = "node"
    codomain: str = "node"
    tags: dict = field(default_factory=dict)

    @property
    def in_measure(self) -> np.ndarray:
        return self.space.node_measure if self.domain == "node" else self.space.cell_measure

    @property
    def out_measure(self) -> np.ndarray:
        return self.space.node_measure if self.codomain == "node" else self.space.cell_measure

    @property
    def in_coords(self) -> np.ndarray:
        return self.space.node_coords if self.domain == "node" else self.space.cell_coords

    @property
    def out_coords(self) -> np.ndarray:
        return self.space.node_coords if self.codomain == "node" else self.space.cell_coords

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.values @ (np.asarray(u) * self.in_measure)

    def distances(self) -> np.ndarray:
        return self.space.distance(self.out_coords, self.in_coords)

    def column_l1(self) -> np.ndarray:
        return np.abs(self.values).T @ self.out_measure

    def asymmetry(self) -> float:
        K = self.values
        return float(np.max(np.abs(K - K.T)))


def kernel_of(op: DiscreteOperator, **tags) -> KernelMatrix:
    """K(x, y) = (T e_y)(x) / mu_y."""
    K = op.matrix / op.measure_in[None, :]
    return KernelMatrix(K, op.space, op.domain, op.codomain, {"tag": op.tag, **tags})


def _multiplied_kernel(decomp: SpectralDecomposition, F, left: np.ndarray,
                       right: np.ndarray) -> np.ndarray:
    """Kernel of M_left F(H) M_right, restricted to the eigenvectors where F != 0."""
    vals = decomp.function_values(F)
    keep = np.flatnonzero(vals != 0)
    V = decomp.vectors[:, keep]
    K = (left[:, None] * V * vals[keep]) @ (right[:, None] * V).T
    return K


# --------------------------------------------------------------------------
# Gaussian fits

@dataclass
class GaussianFit:
    t_grid: np.ndarray
    c_grid: np.ndarray
    per_t: np.ndarray = field(repr=False)      # (len t, len c)
    with_growth_factor: bool
    window: tuple
    flagged: np.ndarray = field(repr=False)
    c_ref: float = C_REF
    dim: int = 1

    @property
    def C(self) -> np.ndarray:
        """C(c): max over in-window t (all t if none is in the window)."""
        use = ~self.flagged if np.any(~self.flagged) else np.ones_like(self.flagged)
        return self.per_t[use].max(axis=0)

    def at(self, c: float) -> float:
        i = int(np.argmin(np.abs(self.c_grid - c)))
        if abs(self.c_grid[i] - c) > 1e-12:
            raise KeyError(f"c = {c} is not on the c-grid")
        return float(self.C[i])

    @property
    def reference(self) -> float:
        return self.at(self.c_ref)

    def running_max(self, c: float | None = None) -> np.ndarray:
        """max over t' <= t of the per-t constant at ``c`` (default c_ref)."""
        c = self.c_ref if c is None else c
        i = int(np.argmin(np.abs(self.c_grid - c)))
        return np.maximum.accumulate(self.per_t[:, i])

    def rows(self, experiment: str, params: dict | None = None) -> list[Row]:
        params = dict(params or {})
        params["growth_factor"] = self.with_growth_factor
        out = [Row(experiment, {**params, "c": float(c)}, "C(c)", float(v))
               for c, v in zip(self.c_grid, self.C)]
        i = int(np.argmin(np.abs(self.c_grid - self.c_ref)))
        for t, v, fl in zip(self.t_grid, self.per_t[:, i], self.flagged):
            out.append(Row(experiment, {**params, "c": self.c_ref, "t": float(t),
                                        "flagged": bool(fl)}, "C_t(c_ref)", float(v)))
        return out


def default_c_grid() -> np.ndarray:
    return np.unique(np.concatenate([np.linspace(0.0, 0.3, 25), [C_REF, 0.24, 0.245, 0.25]]))


def gaussian_fit(space: GridSpace, kernels, t_grid, c_grid=None, with_growth_factor: bool = True,
                 c_ref: float = C_REF, noise_floor: float = NOISE_FLOOR,
                 window: tuple | None = None) -> GaussianFit:
    """C(c) = max over (t, x, y) of |K_t| t^{d/2} (1+t)^{-d/2} e^{c|x-y|^2/t}.

    Entries below ``noise_floor`` times the per-t kernel maximum are ignored:
    they carry round-off, not the kernel's decay.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ValueError("empty t_grid")
    kernels = list(kernels)
    if len(kernels) != t_grid.size:
        raise ValueError("one kernel per t is required")
    c_grid = default_c_grid() if c_grid is None else np.asarray(c_grid, dtype=float)
    if not np.any(np.abs(c_grid - c_ref) < 1e-12):
        c_grid = np.unique(np.append(c_grid, c_ref))
    d = space.dim
    window = time_window(space) if window is None else window
    rho2 = None
    per_t = np.zeros((t_grid.size, c_grid.size))
    for i, (t, K) in enumerate(zip(t_grid, kernels)):
        if isinstance(K, KernelMatrix):
            if rho2 is None:
                rho2 = K.distances() ** 2
            K = K.values
        elif rho2 is None:
            rho2 = space.node_distance_matrix() ** 2
        absK = np.abs(K)
        peak = absK.max()
        if peak == 0:
            continue
        keep = absK >= noise_floor * peak
        a = absK[keep]
        r2 = rho2[keep] / t
        norm = t ** (d / 2) * ((1 + t) ** (-d / 2) if with_growth_factor else 1.0)
        logs = np.log(a)[None, :] + c_grid[:, None] * r2[None, :]
        with np.errstate(over="ignore"):
            per_t[i] = norm * np.exp(np.max(logs, axis=1))
    lo, hi = window
    flagged = (t_grid < lo * (1 - 1e-9)) | (t_grid > hi * (1 + 1e-9))
    return GaussianFit(t_grid, c_grid, per_t, with_growth_factor, tuple(window), flagged, c_ref, d)


def semigroup_kernels(decomp: SpectralDecomposition, t_grid, left=None, right=None):
    """Kernels of M_left e^{-tH} M_right for t in ``t_grid``."""
    space = decomp.space
    lw, rw = weights_on(space, left), weights_on(space, right)
    for t in t_grid:
        K = _multiplied_kernel(decomp, lambda lam, t=t: np.exp(-t * lam), lw, rw)
        yield KernelMatrix(K, space, tags={"t": float(t)})


def sup_stability(t_grid, values) -> float:
    """sup over the whole t-grid divided by the sup once the smallest octave is dropped."""
    t_grid, values = np.asarray(t_grid), np.asarray(values)
    k = int(np.searchsorted(t_grid, 2 * t_grid[0] * (1 - 1e-9)))
    rest = values[k:].max() if k < values.size else values[-1]
    return math.inf if rest == 0 else float(values.max() / rest)


def log_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


# --------------------------------------------------------------------------
# sup bounds and complex time

@dataclass
class SupBounds:
    t_grid: np.ndarray
    two_inf: np.ndarray
    one_inf: np.ndarray
    two_inf_normalized: np.ndarray
    one_inf_normalized: np.ndarray

    @property
    def sup_two_inf(self) -> float:
        return float(self.two_inf_normalized.max())

    @property
    def sup_one_inf(self) -> float:
        return float(self.one_inf_normalized.max())

    def rows(self, experiment: str, params: dict | None = None) -> list[Row]:
        out = []
        for i, t in enumerate(self.t_grid):
            p = {**(params or {}), "t": float(t)}
            out.append(Row(experiment, p, "two_inf_normalized", float(self.two_inf_normalized[i])))
            out.append(Row(experiment, p, "one_inf_normalized", float(self.one_inf_normalized[i])))
        return out


def sup_bounds(decomp: SpectralDecomposition, where, t_grid) -> SupBounds:
    """||M_chi e^{-tH}||_{2->inf} and ||M_chi e^{-tH} M_chi||_{1->inf} with
    normalisers t^{-d/4}(1+t)^{d/4} and t^{-d/2}(1+t)^{d/2}."""
    space = decomp.space
    d = space.dim
    w = weights_on(space, where)
    t_grid = np.asarray(t_grid, dtype=float)
    two, one = np.zeros(t_grid.size), np.zeros(t_grid.size)
    mu = decomp.measure
    for i, t in enumerate(t_grid):
        K = decomp.kernel(lambda lam: np.exp(-t * lam))
        two[i] = np.max(np.abs(w) * np.sqrt((K * K) @ mu))
        one[i] = np.max(np.abs(w[:, None] * K * w[None, :]))
    g2 = t_grid ** (d / 4) * (1 + t_grid) ** (-d / 4)
    g1 = t_grid ** (d / 2) * (1 + t_grid) ** (-d / 2)
    return SupBounds(t_grid, two, one, two * g2, one * g1)


@dataclass
class ComplexTimeTable:
    z_grid: np.ndarray
    per_z: np.ndarray
    c: float

    @property
    def value(self) -> float:
        return float(self.per_z.max()) if self.per_z.size else 0.0

    def rows(self, experiment: str, params: dict | None = None) -> list[Row]:
        return [Row(experiment, {**(params or {}), "z_re": float(z.real), "z_im": float(z.imag),
                                 "c": self.c}, "C_z", float(v))
                for z, v in zip(self.z_grid, self.per_z)]


def complex_time_check(decomp: SpectralDecomposition, where, z_grid, epsilon_damp: float | None = None,
                       c: float = 1.0 / 16, noise_floor: float = NOISE_FLOOR) -> ComplexTimeTable:
    """max over (x, y) of |p_z(x,y) e^{-eps z}| (Re z)^{d/2} e^{c|x-y|^2 cos(arg z)/|z|}
    where p_z is the kernel of M_chi e^{-zA} M_chi and A = H - shift."""
    space = decomp.space
    d = space.dim
    w = weights_on(space, where)
    eps = decomp.shift if epsilon_damp is None else epsilon_damp
    z_grid = np.asarray(z_grid, dtype=complex)
    if np.any(z_grid.real <= 0):
        raise ValueError("complex_time_check needs Re z > 0")
    rho2 = space.node_distance_matrix() ** 2
    per_z = np.zeros(z_grid.size)
    for i, z in enumerate(z_grid):
        K = decomp.kernel(lambda lam: np.exp(-z * (lam - decomp.shift) - eps * z))
        absK = np.abs(w[:, None] * K * w[None, :])
        peak = absK.max()
        if peak == 0:
            continue
        keep = absK >= noise_floor * peak
        expo = c * rho2[keep] * math.cos(np.angle(z)) / abs(z)
        per_z[i] = z.real ** (d / 2) * np.exp(np.max(np.log(absK[keep]) + expo))
    return ComplexTimeTable(z_grid, per_z, c)


# --------------------------------------------------------------------------
# off-diagonal profile

@dataclass
class OffDiagonalProfile:
    g: np.ndarray                  # g[j-1] for j = 1..j_max
    q0: float
    dim: int
    notes: list = field(default_factory=list)

    @property
    def j(self) -> np.ndarray:
        return np.arange(1, self.g.size + 1)

    @property
    def weighted_terms(self) -> np.ndarray:
        return 2.0 ** (self.j * self.dim) * self.g

    @property
    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.weighted_terms)

    @property
    def weighted_sum(self) -> float:
        return float(self.partial_sums[-1])

    def saturation_ratio(self, j: int = 5) -> float:
        """(total - partial sum up to j) / total."""
        tot = self.weighted_sum
        return 0.0 if tot == 0 else float((tot - self.partial_sums[j - 1]) / tot)

    def rows(self, experiment: str, params: dict | None = None) -> list[Row]:
        out = [Row(experiment, {**(params or {}), "j": int(j), "q0": self.q0}, "g", float(v))
               for j, v in zip(self.j, self.g)]
        out.append(Row(experiment, {**(params or {}), "q0": self.q0}, "weighted_sum", self.weighted_sum))
        return out


def _test_functions(space: GridSpace, x: int, t: float, family, rng) -> list[np.ndarray]:
    mu = space.node_measure
    B = ball(space, x, t)
    out = []
    for kind in family:
        f = np.zeros(space.n_nodes)
        if kind == "indicator":
            f[B] = 1.0
        elif kind == "delta":
            f[x] = 1.0 / mu[x]
        elif kind == "random":
            f[B] = rng.random(B.size)
        else:
            raise ValueError(f"unknown test function {kind!r}")
        out.append(f)
    return out


def off_diagonal_profile(H: DiscreteOperator, where, t_grid, x_samples=None, q0: float = 2.0,
                         j_max: int = 6, test_family=("indicator", "delta", "random"),
                         seed: int = 0, decomp: SpectralDecomposition | None = None,
                         method: str = "positive") -> OffDiagonalProfile:
    """g(j) for A_t = e^{-t^2 H} M_chi (t a length).

    ``method="positive"`` builds e^{-t^2 H} with the entrywise-accurate
    positive series so that far-annulus averages are resolved; "spectral"
    uses ``decomp``.
    """
    space = H.space
    mu = space.node_measure
    w = weights_on(space, where)
    x_samples = default_x_samples(space, where) if x_samples is None else np.asarray(x_samples)
    rng = np.random.default_rng(seed)
    g = np.zeros(j_max)
    notes = []
    for t in np.asarray(t_grid, dtype=float):
        if method == "positive":
            E = positive_semigroup(H.matrix, t * t)
        else:
            E = decomp.apply(lambda lam: np.exp(-t * t * lam))
        At = E * w[None, :]
        for x in x_samples:
            fs = _test_functions(space, int(x), t, test_family, rng)
            B = ball(space, int(x), t)
            vB = volume(space, B)
            outs = [At @ f for f in fs]
            dens = [np.sum(np.abs(f[B]) * mu[B]) / vB for f in fs]
            for j in range(1, j_max + 1):
                Cj = annulus(space, int(x), j, t)
                if Cj.size == 0:
                    notes.append(f"empty annulus j={j} at x={int(x)}, t={t:.4g}")
                    continue
                vbig = volume(space, ball(space, int(x), 2 ** (j + 1) * t))
                for out, den in zip(outs, dens):
                    if den == 0:
                        continue
                    num = (np.sum(np.abs(out[Cj]) ** q0 * mu[Cj]) / vbig) ** (1.0 / q0)
                    g[j - 1] = max(g[j - 1], num / den)
    return OffDiagonalProfile(g, q0, space.dim, notes)


# --------------------------------------------------------------------------
# DM condition

@dataclass
class DMReport:
    delta: float
    t_grid: np.ndarray
    per_t: np.ndarray              # sup_y of the kernel-form integral
    operator_per_t: np.ndarray     # sup over normalised delta/indicator inputs

    @property
    def W(self) -> float:
        return float(self.per_t.max())

    @property
    def operator_W(self) -> float:
        return float(self.operator_per_t.max())

    @property
    def variation(self) -> float:
        lo = self.per_t.min()
        return math.inf if lo == 0 else float(self.per_t.max() / lo)

    def rows(self, experiment: str, params: dict | None = None) -> list[Row]:
        out = []
        for t, k, o in zip(self.t_grid, self.per_t, self.operator_per_t):
            p = {**(params or {}), "t": float(t), "delta": self.delta}
            out.append(Row(experiment, p, "W_kernel", float(k)))
            out.append(Row(experiment, p, "W_operator", float(o), float(k)))
        return out


def _as_kernel(obj) -> KernelMatrix:
    return obj if isinstance(obj, KernelMatrix) else kernel_of(obj)


def dm_condition(T, SA, t_grid, delta: float = 4.0, y_samples=None) -> DMReport:
    """Kernel form sup_y int_{rho >= delta t} |K - K_t| and the operator form
    with normalised delta and B(y, t)-indicator inputs.

    ``T`` is an operator or kernel; ``SA`` maps t to the operator S A_t (or
    is a sequence aligned with ``t_grid``).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    KT = _as_kernel(T)
    space = KT.space
    mu_out, mu_in = KT.out_measure, KT.in_measure
    rho = KT.distances()
    t_grid = np.asarray(t_grid, dtype=float)
    family = SA if callable(SA) else (lambda t, _it=iter(SA): next(_it))
    cols = np.arange(KT.values.shape[1]) if y_samples is None else np.asarray(y_samples)
    per_t, op_t = np.zeros(t_grid.size), np.zeros(t_grid.size)
    for i, t in enumerate(t_grid):
        D = KT.values - _as_kernel(family(t)).values
        far = rho[:, cols] >= delta * t * (1 - 1e-12)
        per_t[i] = np.max((np.abs(D[:, cols]) * far).T @ mu_out)
        # delta inputs: (T - SA) u = D[:, y]; outside B(y, (1 + delta) t)
        outside = rho[:, cols] >= (1 + delta) * t * (1 - 1e-12)
        best = np.max((np.abs(D[:, cols]) * outside).T @ mu_out)
        # indicator of B(y, t), normalised in L^1
        rin = space.distance(KT.in_coords[cols], KT.in_coords)
        U = (rin < t).astype(float)
        U /= (U @ mu_in)[:, None]
        out = D @ (U * mu_in[None, :]).T
        best = max(best, float(np.max((np.abs(out) * outside).T @ mu_out)))
        op_t[i] = best
    return DMReport(delta, t_grid, per_t, op_t)


def multiplier_dm(decomp: SpectralDecomposition, F, where, t_grid, delta: float = 4.0) -> DMReport:
    """DM report for T = M_chi F(H) M_chi, S = M_chi F(H), A_t = e^{-t^2 H} M_chi."""
    space = decomp.space
    w = weights_on(space, where)
    T = KernelMatrix(_multiplied_kernel(decomp, F, w, w), space)

    def SA(t):
        G = lambda lam: F(lam) * np.exp(-t * t * lam)
        return KernelMatrix(_multiplied_kernel(decomp, G, w, w), space)
    return dm_condition(T, SA, t_grid, delta)


# --------------------------------------------------------------------------
# weighted moments

@dataclass
class KernelMoment:
    r: float
    s: float
    lhs: np.ndarray
    norm: float
    y_samples: np.ndarray
    dim: int = 1

    @property
    def ratios(self) -> np.ndarray:
        return self.lhs / (self.r ** (self.dim / 2) * self.norm ** 2) if self.norm > 0 else self.lhs * 0

    @property
    def ratio(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0


def weighted_kernel_moment(decomp: SpectralDecomposition, where, F, r: float, s: float,
                           eps_s: float = 0.01, y_samples=None,
                           holder_points: int = 4001) -> KernelMoment:
    """sum_x |K(x,y)|^2 (1 + sqrt(r)|x-y|)^s mu_x for K of M_chi F(H) M_chi,
    against r^{d/2} ||delta_r F||^2_{C^{s/2 + eps_s}}."""
    space = decomp.space
    vals = decomp.function_values(F)
    if np.any((decomp.eigenvalues > r * (1 + 1e-12)) & (vals != 0)):
        raise ValueError("F is not supported in [0, r] on the spectrum")
    w = weights_on(space, where)
    K = _multiplied_kernel(decomp, F, w, w)
    ys = np.arange(space.n_nodes) if y_samples is None else np.asarray(y_samples)
    rho = space.distance(space.node_coords, space.node_coords[ys])
    lhs = np.sum(np.abs(K[:, ys]) ** 2 * (1 + math.sqrt(r) * rho) ** s
                 * space.node_measure[:, None], axis=0)
    lam = np.linspace(0.0, 2.0, holder_points)
    order = s / 2 + eps_s
    norm = holder_norm(lam, F(r * lam), order) if order > 0 else float(np.max(np.abs(F(r * lam))))
    return KernelMoment(r, s, lhs, norm, ys, space.dim)


@dataclass
class OscillationTable:
    n_values: np.ndarray
    t_grid: np.ndarray
    I: np.ndarray = field(repr=False)          # (len n, len t)
    s: float
    dim: int
    mihlin: float
    sums_ascending: np.ndarray = field(repr=False)
    sums_descending: np.ndarray = field(repr=False)

    @property
    def row_sums(self) -> np.ndarray:
        return self.sums_ascending

    def reference(self) -> np.ndarray:
        n = self.n_values[:, None].astype(float)
        t = self.t_grid[None, :]
        a = np.minimum(1.0, t * t * 2.0 ** n)
        b = np.minimum(1.0, (t * 2.0 ** (n / 2)) ** (self.dim / 2 - self.s))
        return a * b * self.mihlin

    @property
    def C_star(self) -> float:
        ref = self.reference()
        mask = ref > 0
        return float(np.max(self.I[mask] / ref[mask])) if np.any(mask) else 0.0

    @property
    def variation(self) -> float:
        lo = self.row_sums.min()
        return math.inf if lo == 0 else float(self.row_sums.max() / lo)

    def rows(self, experiment: str, params: dict | None = None) -> list[Row]:
        out = []
        ref = self.reference()
        for a, n in enumerate(self.n_values):
            for b, t in enumerate(self.t_grid):
                out.append(Row(experiment, {**(params or {}), "n": int(n), "t": float(t)},
                               "I_nt", float(self.I[a, b]), float(ref[a, b])))
        for b, t in enumerate(self.t_grid):
            out.append(Row(experiment, {**(params or {}), "t": float(t)}, "sum_n_I", float(self.row_sums[b])))
        return out


def dyadic_oscillation(F, partition: DyadicPartition, s: float, decomp: SpectralDecomposition,
                       where, t_grid, n_range=None, mihlin: float | None = None) -> OscillationTable:
    """I_{n,t} = max_y sum_{|x-y| >= t} |K of M_chi G_{n,t}(H) M_chi| mu_x with
    G_{n,t}(lam) = phi(2^-n lam) F(lam) (1 - e^{-t^2 lam})."""
    space = decomp.space
    w = weights_on(space, where)
    lam = decomp.eigenvalues
    if n_range is None:
        n_range = partition.covering_range(max(lam.min(), 1e-12), lam.max())
    n_values = np.asarray(list(n_range), dtype=int)
    t_grid = np.asarray(t_grid, dtype=float)
    if mihlin is None:
        scales = 2.0 ** n_values.astype(float)
        mihlin = mihlin_sup(F, partition, s, scales).value
    rho = space.node_distance_matrix()
    mu = space.node_measure
    I = np.zeros((n_values.size, t_grid.size))
    for b, t in enumerate(t_grid):
        far = rho >= t * (1 - 1e-12)
        for a, n in enumerate(n_values):
            G = lambda l, n=n: partition(2.0 ** (-n) * l) * F(l) * -np.expm1(-t * t * l)
            K = _multiplied_kernel(decomp, G, w, w)
            I[a, b] = np.max((np.abs(K) * far).T @ mu)
    asc = np.array([math.fsum(I[:, b]) for b in range(t_grid.size)])
    desc = np.array([math.fsum(I[::-1, b]) for b in range(t_grid.size)])
    return OscillationTable(n_values, t_grid, I, s, space.dim, float(mihlin), asc, desc)


@dataclass
class SemigroupMoment:
    value: float
    envelope: float
    out_of_range: bool = False

    @property
    def ratio(self) -> float:
        if self.out_of_range or self.envelope == 0:
            return math.nan
        return self.value / self.envelope


def _moment_input(space: GridSpace, x: int, t: float, kind: str) -> np.ndarray:
    u = np.zeros(space.n_nodes)
    if kind == "delta":
        u[x] = 1.0 / space.node_measure[x]
    elif kind == "indicator":
        B = ball(space, x, t)
        u[B] = 1.0 / volume(space, B)
    else:
        raise ValueError(f"unknown input {kind!r}")
    return u


def semigroup_moment_value(space: GridSpace, Es: np.ndarray, left, right, x: int, t: float,
                           s: float, beta: float, kind: str = "delta", gradient_flag: bool = False,
                           grad: GradientMaps | None = None) -> SemigroupMoment:
    """Moment for a precomputed propagator ``Es`` = matrix of e^{-sH}."""
    d = space.dim
    u = _moment_input(space, x, t, kind)
    v = Es @ (weights_on(space, right) * u)
    if gradient_flag:
        grad = grad or discrete_gradient(space)
        chi = weights_on(space, left, "cell")
        sq = sum((chi * (grad.axes[k] @ v)) ** 2 for k in range(d))
        pts, mu = space.cell_coords, space.cell_measure
        log_env = (-d / 2 - 1) * math.log(s) + 6 * beta * t * t / s
    else:
        sq = (weights_on(space, left) * v) ** 2
        pts, mu = space.node_coords, space.node_measure
        log_env = (-d / 2) * math.log(s) + 2 * beta * t * t / s - s
    rho2 = space.distance(space.node_coords[x], pts)[0] ** 2
    expo = beta * rho2 / s
    if expo.max() > EXP_GUARD or abs(log_env) > EXP_GUARD:
        return SemigroupMoment(math.nan, math.nan, True)
    return SemigroupMoment(float(np.sum(sq * np.exp(expo) * mu)), math.exp(log_env))


def weighted_semigroup_moment(H: DiscreteOperator, left, right, x: int, t: float, s: float,
                              beta: float, kind: str = "delta", gradient_flag: bool = False,
                              decomp: SpectralDecomposition | None = None) -> SemigroupMoment:
    """sum_y |(M_left e^{-sH} M_right u)(y)|^2 e^{beta|x-y|^2/s} mu_y, or with the
    cell gradient in front when ``gradient_flag``; u is delta at x or the
    normalised indicator of B(x, t)."""
    if decomp is not None:
        Es = decomp.apply(lambda lam: np.exp(-s * lam))
    else:
        Es = positive_semigroup(H.matrix, s)
    return semigroup_moment_value(H.space, Es, left, right, x, t, s, beta, kind, gradient_flag)


@dataclass
class MomentScan:
    s_grid: np.ndarray
    per_s: np.ndarray              # max ratio over (t, x, input) per s
    beta: float
    gradient_flag: bool
    out_of_range: int

    @property
    def C_fit(self) -> float:
        return float(np.nanmax(self.per_s))

    @property
    def spread(self) -> float:
        """max/min of the per-s constants; large when the envelope is loose at large s."""
        return float(np.nanmax(self.per_s) / np.nanmin(self.per_s))

    @property
    def stability(self) -> float:
        """Sup-stability of the fitted constant under dropping the smallest octave of s."""
        ok = ~np.isnan(self.per_s)
        return sup_stability(self.s_grid[ok], self.per_s[ok])


def semigroup_moment_scan(H: DiscreteOperator, left, right, s_grid, t_grid, x_samples, beta: float,
                          gradient_flag: bool = False, kinds=("delta", "indicator")) -> MomentScan:
    space = H.space
    grad = discrete_gradient(space) if gradient_flag else None
    per_s = np.full(len(s_grid), np.nan)
    skipped = 0
    for i, s in enumerate(s_grid):
        Es = positive_semigroup(H.matrix, s)
        for t in t_grid:
            for x in x_samples:
                for kind in kinds:
                    m = semigroup_moment_value(space, Es, left, right, int(x), t, s, beta, kind,
                                               gradient_flag, grad)
                    if m.out_of_range:
                        skipped += 1
                    elif np.isnan(per_s[i]) or m.ratio > per_s[i]:
                        per_s[i] = m.ratio
    return MomentScan(np.asarray(s_grid, float), per_s, beta, gradient_flag, skipped)


# --------------------------------------------------------------------------
# Davies-Gaffney

def set_distance(space: GridSpace, E, F) -> float:
    E, F = np.asarray(E), np.asarray(F)
    return float(space.distance(space.node_coords[E], space.node_coords[F]).min())


def davies_gaffney(H: DiscreteOperator, where, E, F, t: float,
                   decomp: SpectralDecomposition | None = None) -> float:
    """||P_F M_chi e^{-tH} P_E||_{2->inf}."""
    space = H.space
    w = weights_on(space, where)
    if decomp is not None:
        K = decomp.kernel(lambda lam: np.exp(-t * lam))
    else:
        K = positive_semigroup(H.matrix, t) / space.node_measure[None, :]
    E, F = np.asarray(E), np.asarray(F)
    sub = K[np.ix_(F, E)]
    return float(np.max(np.abs(w[F]) * np.sqrt((sub * sub) @ space.node_measure[E])))


@dataclass
class DaviesGaffneyFit:
    omega: float
    slope: float
    intercept: float
    x: np.ndarray
    y: np.ndarray


def davies_gaffney_fit(H: DiscreteOperator, where, pairs, t_grid) -> DaviesGaffneyFit:
    """Regress log(value t^{d/4}) on d(E,F)^2/t; omega = -1/(4 slope)."""
    d = H.space.dim
    xs, ys = [], []
    for t in t_grid:
        for E, F in pairs:
            dist = set_distance(H.space, E, F)
            if dist == 0:
                continue
            v = davies_gaffney(H, where, E, F, t)
            if v > 0:
                xs.append(dist * dist / t)
                ys.append(math.log(v * t ** (d / 4)))
    if len(xs) < 2:
        raise ValueError("need at least two separated (E, F, t) samples to fit omega")
    xs, ys = np.array(xs), np.array(ys)
    slope, intercept = np.polyfit(xs, ys, 1)
    omega = -1.0 / (4 * slope) if slope < 0 else math.inf
    return DaviesGaffneyFit(float(omega), float(slope), float(intercept), xs, ys)


# --------------------------------------------------------------------------
# Riesz L2 bound

@dataclass
class RieszL2Report:
    norms: np.ndarray              # per axis k
    gradient_norm: float           # stacked gradient
    bound: float
    ellipticity_passed: bool

    @property
    def passed(self) -> bool:
        return bool(np.all(self.norms <= self.bound * (1 + 1e-8)))

    @property
    def margin(self) -> float:
        return float(self.bound - self.norms.max()) if self.norms.size else self.bound


def riesz_l2_check(decomp: SpectralDecomposition, field_: CoefficientField, cutoff: Cutoff,
                   mu: float, grad: GradientMaps | None = None) -> RieszL2Report:
    """||M_chi(cells) G_k H^{-1/2}||_{2->2} <= ||chi||_inf / sqrt(mu) for each k.

    The squared form ||M_chi G u||^2 <= ||chi||^2/mu a0(u, u) is what holds;
    with u = H^{-1/2} f it gives the stated operator bound.
    """
    space = decomp.space
    chi_cells = cutoff.cells(space)
    rep = ellipticity_check(field_, space, np.flatnonzero(chi_cells != 0), mu)
    if not rep.passed:
        raise ValueError(f"ellipticity gate fails: min eigenvalue {rep.min_eigenvalue_found:.3g} < mu={mu}")
    grad = grad or discrete_gradient(space)
    inv_sqrt = decomp.apply(lambda lam: lam ** -0.5)
    sq_in = np.sqrt(space.node_measure)
    sq_out = np.sqrt(space.cell_measure)
    blocks = []
    norms = []
    for k in range(space.dim):
        R = chi_cells[:, None] * (grad.axes[k] @ inv_sqrt)
        B = sq_out[:, None] * R / sq_in[None, :]
        blocks.append(B)
        norms.append(np.linalg.norm(B, 2))
    full = float(np.linalg.norm(np.vstack(blocks), 2))
    chi_inf = max(float(np.max(np.abs(cutoff.nodes(space)))), float(np.max(np.abs(chi_cells))))
    return RieszL2Report(np.array(norms), full, chi_inf / math.sqrt(mu), True)
