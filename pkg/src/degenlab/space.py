"""Finite metric measure spaces: uniform grids on boxes and tori.

Nodes carry the measure; cells (the boxes spanned by 2**dim neighbouring
nodes) carry gradient-valued quantities.  Periodic grids place nodes at
``i*h`` and wrap distances; Neumann grids place nodes at ``(i + 1/2)*h`` so
that every node owns a control volume of measure ``h**dim``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

BOUNDARIES = ("periodic", "neumann")


@dataclass(frozen=True)
class GridSpace:
    dim: int
    extent: tuple[float, ...]
    nodes_per_axis: tuple[int, ...]
    boundary: str
    spacing: tuple[float, ...]
    node_coords: np.ndarray = field(repr=False)
    node_measure: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.node_coords.shape[0]

    @property
    def total_measure(self) -> float:
        return float(np.prod(self.extent))

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def cells_per_axis(self) -> tuple[int, ...]:
        if self.periodic:
            return self.nodes_per_axis
        return tuple(n - 1 for n in self.nodes_per_axis)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells_per_axis))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def cell_measure(self) -> np.ndarray:
        return np.full(self.n_cells, self.cell_volume)

    @property
    def cell_coords(self) -> np.ndarray:
        axes = []
        for k in range(self.dim):
            h = self.spacing[k]
            first = self.node_coords_1d(k)[0]
            c = first + h * (np.arange(self.cells_per_axis[k]) + 0.5)
            if self.periodic:
                c = np.mod(c, self.extent[k])
            axes.append(c)
        return _tensor_points(axes)

    def node_coords_1d(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        offset = 0.0 if self.periodic else 0.5
        return h * (np.arange(self.nodes_per_axis[axis]) + offset)

    def node_multi_index(self) -> np.ndarray:
        """(n, dim) integer lattice position of each node, lexicographic."""
        return _tensor_points([np.arange(n) for n in self.nodes_per_axis]).astype(int)

    def node_index(self, multi: np.ndarray) -> np.ndarray:
        multi = np.atleast_2d(multi)
        return np.ravel_multi_index(tuple(multi.T), self.nodes_per_axis)

    def cell_corners(self) -> np.ndarray:
        """(n_cells, 2**dim) node indices; column ``c`` is the corner with
        offset bits ``itertools.product((0, 1), repeat=dim)[c]``."""
        cells = _tensor_points([np.arange(m) for m in self.cells_per_axis]).astype(int)
        cols = []
        for offs in itertools.product((0, 1), repeat=self.dim):
            idx = cells + np.asarray(offs)
            if self.periodic:
                idx = np.mod(idx, self.nodes_per_axis)
            cols.append(self.node_index(idx))
        return np.stack(cols, axis=1)

    def distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pairwise metric between point sets ``a`` (m, dim) and ``b`` (k, dim)."""
        a = np.atleast_2d(a)[:, None, :]
        b = np.atleast_2d(b)[None, :, :]
        diff = np.abs(a - b)
        if self.periodic:
            ext = np.asarray(self.extent)
            diff = np.minimum(diff, ext - diff)
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def distances_from(self, index: int, points: np.ndarray | None = None) -> np.ndarray:
        pts = self.node_coords if points is None else points
        return self.distance(self.node_coords[index], pts)[0]

    def node_distance_matrix(self) -> np.ndarray:
        return self.distance(self.node_coords, self.node_coords)

    def dyadic_labels(self, level: int) -> np.ndarray:
        """Label of the level-``level`` dyadic cube (side 2**level nodes) holding
        each node.  Level 0 cubes are single nodes."""
        multi = self.node_multi_index() >> level
        counts = tuple(max(n >> level, 1) for n in self.nodes_per_axis)
        return np.ravel_multi_index(tuple(multi.T), counts)

    @property
    def max_level(self) -> int:
        return int(np.log2(min(self.nodes_per_axis)))


def _tensor_points(axes: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _per_axis(value, dim: int, cast):
    if np.isscalar(value):
        return tuple(cast(value) for _ in range(dim))
    value = tuple(cast(v) for v in value)
    if len(value) != dim:
        raise ValueError(f"expected {dim} per-axis values, got {len(value)}")
    return value


def build_grid(dim: int, extent, nodes_per_axis, boundary: str = "periodic") -> GridSpace:
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    ext = _per_axis(extent, dim, float)
    nodes = _per_axis(nodes_per_axis, dim, int)
    if any(L <= 0 for L in ext):
        raise ValueError("extent must be positive")
    for n in nodes:
        if n < 1 or n & (n - 1):
            raise ValueError(f"nodes_per_axis must be a power of 2, got {n}")
    spacing = tuple(L / n for L, n in zip(ext, nodes))
    offset = 0.0 if boundary == "periodic" else 0.5
    axes = [h * (np.arange(n) + offset) for h, n in zip(spacing, nodes)]
    coords = _tensor_points(axes)
    measure = np.full(coords.shape[0], float(np.prod(spacing)))
    return GridSpace(dim, ext, nodes, boundary, spacing, coords, measure)


def ball(space: GridSpace, center_index: int, r: float) -> np.ndarray:
    if r <= 0:
        raise ValueError("ball radius must be positive")
    return np.flatnonzero(space.distances_from(center_index) < r)


def annulus(space: GridSpace, center_index: int, j: int, r: float) -> np.ndarray:
    """C_1 = B(x, 4r); C_j = B(x, 2**(j+1) r) minus B(x, 2**j r) for j >= 2."""
    if j < 1 or r <= 0:
        raise ValueError("annulus needs j >= 1 and r > 0")
    dist = space.distances_from(center_index)
    outer = dist < 2.0 ** (j + 1) * r
    if j == 1:
        return np.flatnonzero(outer)
    return np.flatnonzero(outer & (dist >= 2.0**j * r))


def volume(space: GridSpace, index_set) -> float:
    idx = np.asarray(index_set, dtype=int)
    return float(np.sum(space.node_measure[idx]))


@dataclass
class DoublingReport:
    C0: float
    C1: float
    d_eff: float
    r_window: tuple[float, float]
    samples: int


def doubling_report(space: GridSpace, sample_count: int = 200, rng_seed: int = 0,
                    r_window: tuple[float, float] | None = None,
                    lambda_max: float = 8.0) -> DoublingReport:
    """Doubling constant C0 and volume-growth fit v(x, lam r) <= C1 lam**d v(x, r).

    Radii are drawn log-uniformly from ``r_window`` (default [2h, L/4]); C1 is
    inflated after the least-squares fit so the inequality holds on every
    sample.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    h = min(space.spacing)
    if r_window is None:
        r_window = (2 * h, min(space.extent) / 4)
    lo, hi = r_window
    if space.n_nodes == 1 or lo >= hi:
        lo, hi = h / 4, h / 2
    centers = rng.integers(0, space.n_nodes, size=sample_count)
    radii = np.exp(rng.uniform(np.log(lo), np.log(hi), size=sample_count))
    # keep lam * r inside the window too, so the fit never sees the box scale
    lam_cap = np.clip(hi / radii, 1.0, lambda_max)
    lams = np.exp(rng.uniform(0.0, 1.0, size=sample_count) * np.log(lam_cap))
    mu = space.node_measure
    c0 = 1.0
    log_ratio, log_lam = [], []
    for x, r, lam in zip(centers, radii, lams):
        dist = space.distances_from(int(x))
        v1 = mu[dist < r].sum()
        c0 = max(c0, mu[dist < 2 * r].sum() / v1)
        log_ratio.append(np.log(mu[dist < lam * r].sum() / v1))
        log_lam.append(np.log(lam))
    log_ratio, log_lam = np.asarray(log_ratio), np.asarray(log_lam)
    if np.ptp(log_lam) > 0 and np.ptp(log_ratio) > 0:
        d_eff, _ = np.polyfit(log_lam, log_ratio, 1)
    else:
        d_eff = 0.0
    c1 = float(np.exp(np.max(log_ratio - d_eff * log_lam)))
    return DoublingReport(float(c0), max(c1, 1.0), float(d_eff), (lo, hi), sample_count)
