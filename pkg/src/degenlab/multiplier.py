"""Multiplier functions, the dyadic partition of unity and Hoelder norms."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class MultiplierFunction:
    preset_id: str
    params: dict
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, lam):
        return self.func(np.asarray(lam, dtype=float))

    def is_bounded(self, lo: float = 1e-8, hi: float = 1e8, points: int = 4001) -> bool:
        grid = np.geomspace(lo, hi, points)
        vals = np.abs(self(grid))
        return bool(np.all(np.isfinite(vals)) and vals.max() < 1e12)


def _imag_power(s_im):
    def F(lam):
        lam = np.asarray(lam, dtype=float)
        out = np.zeros(lam.shape, dtype=complex)
        pos = lam > 0
        out[pos] = np.exp(1j * s_im * np.log(lam[pos]))
        return out
    return F


def _bochner_riesz(alpha, R):
    def F(lam):
        x = np.clip(1.0 - np.asarray(lam, dtype=float) / R, 0.0, None)
        return x**alpha
    return F


MULTIPLIER_PRESETS = {
    "constant": {"value": "complex constant (default 1)"},
    "heat": {"t": "time > 0"},
    "imaginary_power": {"s_im": "real exponent of lam^(i s_im)"},
    "schrodinger": {"alpha": "decay order", "t": "time"},
    "wave": {"alpha": "decay order", "t": "time"},
    "bochner_riesz": {"alpha": "order > 0", "R": "radius > 0"},
}


def make_multiplier(preset_id: str, **params) -> MultiplierFunction:
    if preset_id == "constant":
        value = complex(params.get("value", 1.0))
        value = value.real if value.imag == 0 else value
        return MultiplierFunction(preset_id, params,
                                  lambda lam: np.full(np.shape(lam), value))
    if preset_id == "heat":
        t = float(params["t"])
        return MultiplierFunction(preset_id, params, lambda lam: np.exp(-t * lam))
    if preset_id == "imaginary_power":
        return MultiplierFunction(preset_id, params, _imag_power(float(params["s_im"])))
    if preset_id == "schrodinger":
        a, t = float(params["alpha"]), float(params["t"])
        return MultiplierFunction(preset_id, params,
                                  lambda lam: (1 + lam) ** (-a) * np.exp(1j * t * lam))
    if preset_id == "wave":
        a, t = float(params["alpha"]), float(params["t"])
        return MultiplierFunction(
            preset_id, params,
            lambda lam: (1 + lam) ** (-a / 2) * np.exp(1j * t * np.sqrt(np.clip(lam, 0, None))))
    if preset_id == "bochner_riesz":
        alpha, R = float(params["alpha"]), float(params["R"])
        if alpha <= 0 or R <= 0:
            raise ValueError("bochner_riesz needs alpha > 0 and R > 0")
        return MultiplierFunction(preset_id, params, _bochner_riesz(alpha, R))
    raise ValueError(f"unknown multiplier preset {preset_id!r}")


def from_callable(func, name: str = "custom") -> MultiplierFunction:
    return MultiplierFunction(name, {}, func)


def scale(F: MultiplierFunction, r: float) -> MultiplierFunction:
    """delta_r F: lam -> F(r lam)."""
    if r <= 0:
        raise ValueError("scale factor must be positive")
    return MultiplierFunction(F.preset_id, {**F.params, "scaled_by": r},
                              lambda lam: F(r * np.asarray(lam, dtype=float)))


# --------------------------------------------------------------------------
# dyadic partition

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


def _bump(x):
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (xi * (1.0 - xi)))
    return out


def _bump_integral(x):
    """int_0^x exp(-1/(u(1-u))) du for x in [0, 1], Gauss-Legendre on [0, x]."""
    x = np.asarray(x, dtype=float)
    u = 0.5 * x[..., None] * (_GL_NODES + 1.0)
    return 0.5 * x * np.sum(_GL_WEIGHTS * _bump(u), axis=-1)


_BUMP_TOTAL = float(_bump_integral(np.array(1.0)))


@dataclass
class DyadicPartition:
    """phi(lam) = eta(lam) - eta(2 lam), with eta a smooth step that is 1 on
    (-inf, 1/2] and 0 on [1/2 + 1/(2 sharpness), inf)."""
    sharpness: float = 1.0
    n_min: int = -40
    n_max: int = 40

    def eta(self, lam):
        lam = np.asarray(lam, dtype=float)
        x = np.clip((lam - 0.5) * 2.0 * self.sharpness, 0.0, 1.0)
        return 1.0 - _bump_integral(x) / _BUMP_TOTAL

    def phi(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.eta(lam) - self.eta(2.0 * lam)

    __call__ = phi

    def partition_sum(self, lam, n_min: int | None = None, n_max: int | None = None):
        n_min = self.n_min if n_min is None else n_min
        n_max = self.n_max if n_max is None else n_max
        lam = np.asarray(lam, dtype=float)
        return sum(self.phi(2.0 ** (-n) * lam) for n in range(n_min, n_max + 1))

    def covering_range(self, lam_min: float, lam_max: float) -> range:
        """Indices n whose pieces phi(2^-n .) meet [lam_min, lam_max]."""
        lo = math.floor(math.log2(lam_min)) - 1
        hi = math.ceil(math.log2(lam_max)) + 2
        return range(lo, hi + 1)


def dyadic_partition(step_sharpness: float = 1.0) -> DyadicPartition:
    if step_sharpness < 1:
        raise ValueError("step_sharpness must be >= 1 to keep supp phi in [1/4, 1]")
    return DyadicPartition(step_sharpness)


# --------------------------------------------------------------------------
# Hoelder norms

def _check_order(s: float) -> tuple[int, float]:
    if s <= 0 or float(s).is_integer():
        raise ValueError(f"Hoelder order must be positive and non-integer, got {s}")
    k = int(math.floor(s))
    return k, s - k


def holder_norm(x: np.ndarray, values: np.ndarray, s: float) -> float:
    """C^s norm of sampled values on the uniform grid ``x``.

    sum_{k <= [s]} sup |F^(k)| plus the (s - [s])-Hoelder seminorm of
    F^([s]); derivatives by second-order finite differences, seminorm over
    sample pairs at least two grid steps apart.
    """
    k, theta = _check_order(s)
    x = np.asarray(x, dtype=float)
    vals = np.asarray(values)
    if x.size < 16 * (k + 2):
        raise ValueError("grid too coarse for the requested order")
    dx = x[1] - x[0]
    total = 0.0
    deriv = vals
    for order in range(k + 1):
        if order > 0:
            deriv = np.gradient(deriv, dx, edge_order=2)
        total += float(np.max(np.abs(deriv)))
    return total + holder_seminorm(x, deriv, theta)


def holder_seminorm(x: np.ndarray, values: np.ndarray, theta: float, min_sep: int = 2) -> float:
    m = x.size
    best = 0.0
    step = 512
    for i in range(0, m, step):
        xi = x[i:i + step, None]
        vi = values[i:i + step, None]
        dist = np.abs(xi - x[None, :])
        ok = dist >= min_sep * abs(x[1] - x[0]) * (1 - 1e-12)
        if not ok.any():
            continue
        ratio = np.abs(vi - values[None, :])[ok] / dist[ok] ** theta
        best = max(best, float(ratio.max()))
    return best


@dataclass
class MihlinTable:
    value: float
    t_grid: np.ndarray
    per_t: np.ndarray
    edge_flag: bool


def mihlin_sup(F, partition: DyadicPartition, s: float, t_grid, interval=(0.125, 2.0),
               points: int = 1601) -> MihlinTable:
    """max over t of || phi(.) F(t .) ||_{C^s} on ``interval``.

    ``edge_flag`` is set when the maximum sits at an end of the t-grid, which
    signals growth the grid has not resolved.
    """
    _check_order(s)
    t_grid = np.asarray(t_grid, dtype=float)
    lam = np.linspace(interval[0], interval[1], points)
    ph = partition(lam)
    per_t = np.array([holder_norm(lam, ph * F(t * lam), s) for t in t_grid])
    i = int(np.argmax(per_t))
    # flag only a maximum that is still climbing at the grid edge
    nb = 1 if i == 0 else t_grid.size - 2
    edge = t_grid.size > 2 and i in (0, t_grid.size - 1) and per_t[i] > 1.05 * per_t[nb]
    if edge:
        warnings.warn("mihlin_sup maximum at the edge of the t-grid")
    return MihlinTable(float(per_t[i]), t_grid, per_t, bool(edge))
