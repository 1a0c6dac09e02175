"""Coefficient fields, cutoff functions and regions.

All profiles are closed-form C-infinity functions built from the standard
smooth step ``S(x) = f(x) / (f(x) + f(1 - x))`` with ``f(x) = exp(-1/x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .space import GridSpace


def _f(x):
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _df(x):
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos]) / x[pos] ** 2
    return out


def smooth_step(x):
    """0 for x <= 0, 1 for x >= 1, C-infinity in between."""
    x = np.asarray(x, dtype=float)
    a, b = _f(x), _f(1.0 - x)
    return a / (a + b)


def smooth_step_derivative(x):
    x = np.asarray(x, dtype=float)
    a, b = _f(x), _f(1.0 - x)
    da, db = _df(x), _df(1.0 - x)
    return (da * b + a * db) / (a + b) ** 2


def _radial(points, center):
    pts = np.atleast_2d(points)
    c = np.broadcast_to(np.asarray(center, dtype=float), (pts.shape[1],))
    return np.sqrt(np.sum((pts - c) ** 2, axis=1))


def _plateau_profile(rho, inner, outer):
    return smooth_step((outer - rho) / (outer - inner))


def _plateau_slope(rho, inner, outer):
    return smooth_step_derivative((outer - rho) / (outer - inner)) / (outer - inner)


# --------------------------------------------------------------------------
# coefficient fields

@dataclass
class CoefficientField:
    preset_id: str
    params: dict
    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    bound: float = 1.0

    def __call__(self, points) -> np.ndarray:
        """(m, dim, dim) coefficient matrices at ``points``."""
        return self.evaluator(np.atleast_2d(np.asarray(points, dtype=float)))


FIELD_PRESETS = {
    "identity": {"scale": "float > 0 (default 1)"},
    "indicator_region": {"lo": "per-axis lower corner of the box", "hi": "per-axis upper corner"},
    "plateau_bump": {"center": "point", "radius": "plateau radius", "width": "transition width",
                     "floor": "value outside (default 0)"},
    "anisotropic_plateau": {"center": "point", "radius": "plateau radius", "width": "transition width",
                            "eigenvalues": "two values >= 0", "angle": "rotation (radians, default 0)"},
}


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def make_field(preset_id: str, params: dict | None = None, dim: int = 1) -> CoefficientField:
    params = dict(params or {})
    eye = np.eye(dim)
    if preset_id == "identity":
        scale = float(params.get("scale", 1.0))
        if scale < 0:
            raise ValueError("identity scale must be >= 0")

        def ev(p):
            return np.broadcast_to(scale * eye, (p.shape[0], dim, dim)).copy()
        return CoefficientField(preset_id, params, dim, ev, scale)

    if preset_id == "indicator_region":
        lo = np.broadcast_to(np.asarray(params["lo"], dtype=float), (dim,))
        hi = np.broadcast_to(np.asarray(params["hi"], dtype=float), (dim,))

        def ev(p):
            inside = np.all((p >= lo) & (p <= hi), axis=1).astype(float)
            return inside[:, None, None] * eye
        return CoefficientField(preset_id, params, dim, ev, 1.0)

    if preset_id in ("plateau_bump", "anisotropic_plateau"):
        center = params.get("center", 0.0)
        radius = float(params["radius"])
        width = float(params.get("width", radius))
        floor = float(params.get("floor", 0.0))
        if radius < 0 or width <= 0 or floor < 0:
            raise ValueError("plateau needs radius >= 0, width > 0, floor >= 0")
        if preset_id == "plateau_bump":
            base = eye
        else:
            ev_ = np.asarray(params["eigenvalues"], dtype=float)
            if ev_.shape != (dim,):
                raise ValueError(f"anisotropic_plateau needs {dim} eigenvalues")
            if np.any(ev_ < 0):
                raise ValueError("anisotropic_plateau eigenvalues must be >= 0 (PSD)")
            if dim == 2:
                rot = _rotation(float(params.get("angle", 0.0)))
                base = rot @ np.diag(ev_) @ rot.T
                base = 0.5 * (base + base.T)
            else:
                base = np.diag(ev_)

        def ev(p):
            psi = _plateau_profile(_radial(p, center), radius, radius + width)
            psi = floor + (1.0 - floor) * psi
            return psi[:, None, None] * base
        bound = float(np.max(np.linalg.eigvalsh(base))) * max(1.0, floor)
        return CoefficientField(preset_id, params, dim, ev, bound)

    raise ValueError(f"unknown coefficient preset {preset_id!r}")


# --------------------------------------------------------------------------
# cutoffs

@dataclass
class Cutoff:
    preset_id: str
    params: dict
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sup_norm: float
    grad_sup: float
    support_radius: float | None = None
    center: np.ndarray | None = None

    def __call__(self, points) -> np.ndarray:
        return self.evaluator(np.atleast_2d(np.asarray(points, dtype=float)))

    def nodes(self, space: GridSpace) -> np.ndarray:
        return self(space.node_coords)

    def cells(self, space: GridSpace) -> np.ndarray:
        return self(space.cell_coords)


CUTOFF_PRESETS = {
    "smooth_bump": {"center": "point", "radius": "support radius"},
    "plateau": {"center": "point", "inner": "radius where the cutoff is 1", "outer": "support radius"},
    "constant": {"value": "float (default 1)"},
}


def make_cutoff(preset_id: str, params: dict | None = None, space: GridSpace | None = None,
                margin: float | None = None) -> Cutoff:
    """Build a cutoff; with ``space`` given, reject supports that reach within
    ``margin`` (default 2h) of the box boundary."""
    params = dict(params or {})
    if preset_id == "constant":
        value = float(params.get("value", 1.0))

        def ev(p):
            return np.full(p.shape[0], value)
        return Cutoff(preset_id, params, ev, abs(value), 0.0)

    center = params.get("center", 0.0)
    if preset_id == "smooth_bump":
        R = float(params["radius"])
        if R <= 0:
            raise ValueError("smooth_bump radius must be positive")

        def ev(p):
            q = (_radial(p, center) / R) ** 2
            out = np.zeros_like(q)
            inside = q < 1
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - q[inside]))
            return out
        rho = np.linspace(0, R, 20001)[:-1]
        q = (rho / R) ** 2
        slope = np.exp(1.0 - 1.0 / (1.0 - q)) * 2 * rho / (R**2 * (1.0 - q) ** 2)
        cut = Cutoff(preset_id, params, ev, 1.0, float(slope.max()), R)
    elif preset_id == "plateau":
        inner, outer = float(params["inner"]), float(params["outer"])
        if not 0 <= inner < outer:
            raise ValueError("plateau cutoff needs 0 <= inner < outer")

        def ev(p):
            return _plateau_profile(_radial(p, center), inner, outer)
        rho = np.linspace(inner, outer, 20001)
        cut = Cutoff(preset_id, params, ev, 1.0,
                     float(np.max(np.abs(_plateau_slope(rho, inner, outer)))), outer)
    else:
        raise ValueError(f"unknown cutoff preset {preset_id!r}")

    if space is not None:
        c = np.broadcast_to(np.asarray(center, dtype=float), (space.dim,))
        cut.center = c
        m = 2 * max(space.spacing) if margin is None else margin
        ext = np.asarray(space.extent)
        if np.any(c - cut.support_radius < m) or np.any(c + cut.support_radius > ext - m):
            raise ValueError("cutoff support exceeds the box interior margin")
    return cut


# --------------------------------------------------------------------------
# regions

@dataclass
class Region:
    space: GridSpace = field(repr=False)
    cells: np.ndarray
    node_mask: np.ndarray = field(repr=False)

    @property
    def nodes(self) -> np.ndarray:
        return np.flatnonzero(self.node_mask)

    def projection(self) -> np.ndarray:
        """P_Omega on node functions (diagonal 0/1 matrix)."""
        return np.diag(self.node_mask.astype(float))

    def cell_mask(self) -> np.ndarray:
        mask = np.zeros(self.space.n_cells, dtype=bool)
        mask[self.cells] = True
        return mask


def make_region(space: GridSpace, lo, hi) -> Region:
    """Box region [lo, hi]: cells with centre inside and nodes inside."""
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (space.dim,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (space.dim,))
    cc = space.cell_coords
    cells = np.flatnonzero(np.all((cc >= lo) & (cc <= hi), axis=1))
    nodes = np.all((space.node_coords >= lo) & (space.node_coords <= hi), axis=1)
    return Region(space, cells, nodes)


def region_from_mask(space: GridSpace, node_mask) -> Region:
    node_mask = np.asarray(node_mask, dtype=bool)
    corners = space.cell_corners()
    cells = np.flatnonzero(np.all(node_mask[corners], axis=1))
    return Region(space, cells, node_mask)


# --------------------------------------------------------------------------
# ellipticity

@dataclass
class EllipticityReport:
    region: str
    mu_required: float
    min_eigenvalue_found: float
    passed: bool
    violating_points: np.ndarray = field(repr=False)


def _sample_points(space: GridSpace, cells: np.ndarray, density: int) -> np.ndarray:
    centers = space.cell_coords[cells]
    if density <= 1:
        return centers
    offs = (np.arange(density) + 0.5) / density - 0.5
    grid = np.stack(np.meshgrid(*([offs] * space.dim), indexing="ij"), -1).reshape(-1, space.dim)
    pts = centers[:, None, :] + grid[None, :, :] * np.asarray(space.spacing)
    return pts.reshape(-1, space.dim)


def support_cells(space: GridSpace, *cutoffs: Cutoff) -> np.ndarray:
    """Cells where any of the cutoffs is non-zero at the cell centre."""
    mask = np.zeros(space.n_cells, dtype=bool)
    for c in cutoffs:
        mask |= c.cells(space) != 0
    return np.flatnonzero(mask)


def ellipticity_check(field_: CoefficientField, space: GridSpace, where, mu: float,
                      sample_density: int = 1) -> EllipticityReport:
    """Check a(x) >= mu I at the cell centres of ``where``.

    ``where`` may be a Region, a Cutoff, a tuple of Cutoffs (their union of
    supports) or an array of cell indices.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if isinstance(where, Region):
        cells, label = where.cells, "region"
    elif isinstance(where, Cutoff):
        cells, label = support_cells(space, where), f"supp {where.preset_id}"
    elif isinstance(where, tuple) and all(isinstance(c, Cutoff) for c in where):
        cells, label = support_cells(space, *where), "union of cutoff supports"
    else:
        cells, label = np.asarray(where, dtype=int), "cells"
    pts = _sample_points(space, cells, sample_density)
    if pts.shape[0] == 0:
        return EllipticityReport(label, mu, np.inf, True, np.empty((0, space.dim)))
    eig = np.linalg.eigvalsh(field_(pts))[:, 0]
    bad = eig < mu * (1 - 1e-12)  # round-off in rotated fields
    return EllipticityReport(label, mu, float(eig.min()), not bool(bad.any()), pts[bad])
