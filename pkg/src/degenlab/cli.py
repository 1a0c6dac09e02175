"""Command line runner: ``degenlab run <config.json>`` and ``degenlab presets``.

Exit status 0 when every check passes, 1 when a check fails, 2 on a
configuration or resource error.
"""
from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import czkit, verify
from .assemble import MAX_NODES, DiscreteOperator, assemble_form_operator, riesz_matrix, shift_identity
from .media import CUTOFF_PRESETS, FIELD_PRESETS, make_cutoff, make_field, make_region
from .multiplier import MULTIPLIER_PRESETS, dyadic_partition, make_multiplier, mihlin_sup
from .space import build_grid
from .spectral import eigendecompose
from .tables import Row, to_csv

SCHEMA_VERSION = 1
KINDS = ("gaussian", "supbounds", "complex_time", "offdiag", "dm", "multiplier_osc", "mihlin",
         "riesz", "cz", "weak11", "full")

_GRID = {"oneOf": [{"type": "array", "items": {"type": "number"}, "minItems": 1},
                   {"type": "object", "required": ["lo", "hi"],
                    "properties": {"lo": {"type": "number"}, "hi": {"type": "number"},
                                   "points": {"type": "integer", "minimum": 1}}}]}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "space", "coefficients", "experiments"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer"},
        "output_dir": {"type": "string"},
        "shift": {"type": "number", "exclusiveMinimum": 0},
        "mu": {"type": "number", "exclusiveMinimum": 0},
        "override_validity": {"type": "boolean"},
        "space": {"type": "object", "required": ["dim", "extent", "N"],
                  "properties": {"dim": {"enum": [1, 2]},
                                 "extent": {"oneOf": [{"type": "number"}, {"type": "array"}]},
                                 "N": {"oneOf": [{"type": "integer"}, {"type": "array"}]},
                                 "boundary": {"enum": ["periodic", "neumann"]}}},
        "coefficients": {"type": "object", "required": ["preset"],
                         "properties": {"preset": {"type": "string"}, "params": {"type": "object"}}},
        "cutoff": {"type": "object", "required": ["preset"],
                   "properties": {"preset": {"type": "string"}, "params": {"type": "object"}}},
        "region": {"type": "object", "required": ["lo", "hi"]},
        "experiments": {"type": "array", "minItems": 1, "items": {
            "type": "object", "required": ["kind"],
            "properties": {"kind": {"enum": list(KINDS)}, "name": {"type": "string"},
                           "t_grid": _GRID, "s": {"type": "number"},
                           "delta": {"type": "number"}, "F": {"type": "object"},
                           "beta_grid": {"type": "array"}, "p_list": {"type": "array"},
                           "seed": {"type": "integer"}}}},
    },
}

_NUM = {"type": ["number", "null"]}
REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "status", "config", "environment", "experiments"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "status": {"enum": ["pass", "fail"]},
        "config": {"type": "object"},
        "environment": {"type": "object", "required": ["python", "numpy", "scipy", "platform"]},
        "experiments": {"type": "array", "items": {
            "type": "object",
            "required": ["index", "kind", "name", "status", "summary", "checks", "table", "wall_time"],
            "properties": {
                "index": {"type": "integer"}, "kind": {"enum": list(KINDS)},
                "name": {"type": "string"}, "status": {"enum": ["pass", "fail", "flagged"]},
                "summary": {"type": "object", "additionalProperties": _NUM},
                "checks": {"type": "array", "items": {
                    "type": "object", "required": ["name", "passed", "value", "reference"],
                    "properties": {"name": {"type": "string"}, "passed": {"type": "boolean"},
                                   "value": _NUM, "reference": _NUM}}},
                "table": {"type": "string"}, "wall_time": {"type": "number"},
                "flags": {"type": "array", "items": {"type": "string"}}}}},
    },
}


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# context

@dataclass
class Context:
    config: dict
    space: object
    field_: object
    A: DiscreteOperator
    H: DiscreteOperator
    cutoff: object
    region: object
    seed: int
    override: bool
    _decomp: object = field(default=None, repr=False)

    @property
    def decomp(self):
        if self._decomp is None:
            self._decomp = eigendecompose(self.H)
        return self._decomp

    @property
    def h(self) -> float:
        return max(self.space.spacing)

    @property
    def L(self) -> float:
        return min(self.space.extent)


@dataclass
class Result:
    rows: list
    summary: dict
    checks: list
    flags: list = field(default_factory=list)


def _check(name, passed, value=None, reference=None) -> dict:
    return {"name": name, "passed": bool(passed), "value": _num(value), "reference": _num(reference)}


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _grid(spec, default) -> np.ndarray:
    if spec is None:
        return np.asarray(default, dtype=float)
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    return np.geomspace(spec["lo"], spec["hi"], spec.get("points", 25))


def _windowed(ctx: Context, grid, window, label: str) -> list[str]:
    lo, hi = window
    out = (grid < lo * (1 - 1e-9)) | (grid > hi * (1 + 1e-9))
    if out.any():
        if not ctx.override:
            raise ConfigError(f"{label}: t_grid leaves the validity window [{lo:.4g}, {hi:.4g}]; "
                              "pass --override-validity to run it flagged")
        return [f"{label}: {int(out.sum())} t values outside the validity window (flagged)"]
    return []


def _length_window(ctx: Context) -> tuple[float, float]:
    return 2 * ctx.h, ctx.L / 4


def _multiplier(spec: dict | None, default: dict):
    spec = dict(default if spec is None else spec)
    preset = spec.pop("preset")
    return make_multiplier(preset, **spec), {"F": preset, **spec}


def _s_value(exp: dict, default: float) -> float:
    s = float(exp.get("s", default))
    return s


# --------------------------------------------------------------------------
# experiment kinds

def run_gaussian(ctx: Context, exp: dict) -> Result:
    sp = ctx.space
    t_grid = _grid(exp.get("t_grid"), verify.default_t_grid(sp))
    flags = _windowed(ctx, t_grid, verify.time_window(sp), "gaussian")
    op = exp.get("operator", "H")
    loc = exp.get("localize", "region" if ctx.region is not None else "cutoff")
    where = {"region": ctx.region, "cutoff": ctx.cutoff, "none": None}[loc]
    decomp = ctx.decomp if op == "H" else eigendecompose(ctx.A)
    kernels = list(verify.semigroup_kernels(decomp, t_grid, where, where))
    c_ref = float(exp.get("c_ref", verify.C_REF))
    # flagged t stay out of C(c) unless no t is inside the window
    fits = {gf: verify.gaussian_fit(sp, kernels, t_grid, with_growth_factor=gf, c_ref=c_ref)
            for gf in (True, False)}
    params = {"operator": op, "localize": loc}
    rows = fits[True].rows("gaussian", params) + fits[False].rows("gaussian", params)
    with_f, without = fits[True].running_max(), fits[False].running_max()
    slope = verify.log_slope(t_grid, without)
    half = np.searchsorted(t_grid, t_grid[-1] / 2 * (1 + 1e-9), side="right") - 1
    base = with_f[max(half, 0)]
    change = abs(with_f[-1] / base - 1) if 0 < base < math.inf else math.inf
    rows += [Row("gaussian", params, "no_factor_slope", slope, sp.dim / 2),
             Row("gaussian", params, "factor_tmax_doubling_change", change)]
    C = fits[True].C
    summary = {"C_ref_factor": fits[True].reference, "C_ref_no_factor": fits[False].reference,
               "no_factor_slope": slope, "factor_tmax_doubling_change": change}
    checks = [_check("C(c_ref) finite", math.isfinite(fits[True].reference), fits[True].reference),
              _check("C(c) nondecreasing", bool(np.all(np.diff(C) >= -1e-12 * C.max())))]
    return Result(rows, summary, checks, flags)


def run_supbounds(ctx: Context, exp: dict) -> Result:
    t_grid = _grid(exp.get("t_grid"), verify.default_t_grid(ctx.space))
    flags = _windowed(ctx, t_grid, verify.time_window(ctx.space), "supbounds")
    where = ctx.region if exp.get("localize") == "region" else ctx.cutoff
    sb = verify.sup_bounds(ctx.decomp, where, t_grid)
    summary = {"sup_two_inf": sb.sup_two_inf, "sup_one_inf": sb.sup_one_inf}
    rows = sb.rows("supbounds") + [Row("supbounds", {}, k, v) for k, v in summary.items()]
    checks = [_check("normalized sup finite", math.isfinite(sb.sup_one_inf), sb.sup_one_inf)]
    return Result(rows, summary, checks, flags)


def run_complex_time(ctx: Context, exp: dict) -> Result:
    moduli = _grid(exp.get("t_grid"), verify.default_t_grid(ctx.space, 9))
    flags = _windowed(ctx, moduli, verify.time_window(ctx.space), "complex_time")
    args = [float(a) for a in exp.get("args", [0.0, math.pi / 3, -math.pi / 3])]
    if any(abs(a) >= math.pi / 2 for a in args):
        raise ConfigError("complex_time.args must satisfy |arg z| < pi/2")
    z = np.array([r * np.exp(1j * a) for a in args for r in moduli])
    tab = verify.complex_time_check(ctx.decomp, ctx.cutoff, z)
    real = tab.per_z[: moduli.size].max() if args[0] == 0.0 else math.nan
    value = tab.value
    summary = {"C_complex": value, "C_real_axis": real}
    rows = tab.rows("complex_time") + [Row("complex_time", {}, "C_complex", value, real)]
    checks = [_check("complex-time constant finite", math.isfinite(value), value)]
    if math.isfinite(real) and real > 0:
        checks.append(_check("complex constant <= 10x real axis", value <= 10 * real, value, 10 * real))
    return Result(rows, summary, checks, flags)


def run_offdiag(ctx: Context, exp: dict) -> Result:
    j_max = int(exp.get("j_max", 6))
    hi = max(2 * ctx.h, ctx.L / 2 ** (j_max + 2))
    t_grid = _grid(exp.get("t_grid"), np.geomspace(2 * ctx.h, hi, 2) if hi > 2 * ctx.h else [2 * ctx.h])
    flags = _windowed(ctx, t_grid, _length_window(ctx), "offdiag")
    prof = verify.off_diagonal_profile(ctx.H, ctx.cutoff, t_grid, q0=float(exp.get("q0", 2.0)),
                                       j_max=j_max, seed=int(exp.get("seed", ctx.seed)))
    g = prof.g
    dec = bool(np.all(g[2:] < g[1:-1])) if g.size > 2 else True
    sat = prof.saturation_ratio(min(5, j_max))
    summary = {"weighted_sum": prof.weighted_sum, "saturation_beyond_j5": sat}
    rows = prof.rows("offdiag") + [Row("offdiag", {}, "saturation_beyond_j5", sat, 0.01)]
    checks = [_check("g decreasing for j >= 2", dec),
              _check("weighted sum saturates", sat < 0.01, sat, 0.01)]
    return Result(rows, summary, checks, flags + prof.notes[:5])


_DEFAULT_F = {"preset": "imaginary_power", "s_im": 2.0}


def _length_grid(ctx: Context, exp: dict) -> np.ndarray:
    return _grid(exp.get("t_grid"), np.geomspace(2 * ctx.h, min(2.0, ctx.L / 4), 13))


def run_dm(ctx: Context, exp: dict) -> Result:
    F, fp = _multiplier(exp.get("F"), _DEFAULT_F)
    delta = float(exp.get("delta", 4.0))
    t_grid = _length_grid(ctx, exp)
    flags = _windowed(ctx, t_grid, _length_window(ctx), "dm")
    rep = verify.multiplier_dm(ctx.decomp, F, ctx.cutoff, t_grid, delta)
    stab = verify.sup_stability(t_grid, rep.per_t)
    summary = {"W": rep.W, "W_operator": rep.operator_W, "sup_stability": stab}
    rows = rep.rows("dm", fp) + [Row("dm", fp, "W", rep.W), Row("dm", fp, "sup_stability", stab, 2.0)]
    checks = [_check("operator form <= kernel form", rep.operator_W <= rep.W + 1e-9, rep.operator_W, rep.W),
              _check("W sup-stable (< 2x)", stab < 2.0, stab, 2.0)]
    return Result(rows, summary, checks, flags)


def run_multiplier_osc(ctx: Context, exp: dict) -> Result:
    F, fp = _multiplier(exp.get("F"), _DEFAULT_F)
    s = _s_value(exp, ctx.space.dim / 2 + 0.51)
    t_grid = _length_grid(ctx, exp)
    flags = _windowed(ctx, t_grid, _length_window(ctx), "multiplier_osc")
    tab = verify.dyadic_oscillation(F, dyadic_partition(), s, ctx.decomp, ctx.cutoff, t_grid)
    stab = verify.sup_stability(t_grid, tab.row_sums)
    order_gap = float(np.max(np.abs(tab.sums_ascending - tab.sums_descending)))
    summary = {"sup_sum": float(tab.row_sums.max()), "C_star": tab.C_star, "mihlin": tab.mihlin,
               "sup_stability": stab}
    rows = tab.rows("multiplier_osc", {**fp, "s": s})
    rows += [Row("multiplier_osc", fp, k, v) for k, v in summary.items()]
    checks = [_check("I_nt >= 0", bool(np.all(tab.I >= 0))),
              _check("summation orders agree", order_gap <= 1e-10, order_gap, 1e-10),
              _check("sum_n I sup-stable (< 2x)", stab < 2.0, stab, 2.0)]
    return Result(rows, summary, checks, flags)


def run_mihlin(ctx: Context, exp: dict) -> Result:
    F, fp = _multiplier(exp.get("F"), _DEFAULT_F)
    s = _s_value(exp, ctx.space.dim / 2 + 0.51)
    t_grid = _grid(exp.get("t_grid"), np.geomspace(2.0**-6, 2.0**12, 37))
    tab = mihlin_sup(F, dyadic_partition(), s, t_grid)
    rows = [Row("mihlin", {**fp, "s": s, "t": float(t)}, "phiF_Cs", float(v))
            for t, v in zip(tab.t_grid, tab.per_t)]
    rows.append(Row("mihlin", {**fp, "s": s}, "mihlin_sup", tab.value))
    checks = [_check("Mihlin sup finite", math.isfinite(tab.value), tab.value)]
    flags = ["maximum at the t-grid edge"] if tab.edge_flag else []
    return Result(rows, {"mihlin_sup": tab.value}, checks, flags)


def run_riesz(ctx: Context, exp: dict) -> Result:
    mu = float(exp.get("mu", ctx.config.get("mu", 1.0)))
    rep = verify.riesz_l2_check(ctx.decomp, ctx.field_, ctx.cutoff, mu)
    rows = [Row("riesz", {"k": k, "mu": mu}, "norm_2to2", float(v), rep.bound)
            for k, v in enumerate(rep.norms)]
    rows.append(Row("riesz", {"mu": mu}, "gradient_norm", rep.gradient_norm, rep.bound))
    summary = {"max_norm": float(rep.norms.max()), "bound": rep.bound, "margin": rep.margin}
    rows += [Row("riesz", {"mu": mu}, k, v) for k, v in summary.items()]
    return Result(rows, summary, [_check("Riesz L2 bound", rep.passed, rep.norms.max(), rep.bound)])


def run_cz(ctx: Context, exp: dict) -> Result:
    sp = ctx.space
    trials = int(exp.get("trials", 100))
    rng = np.random.default_rng(int(exp.get("seed", ctx.seed)))
    mu = sp.node_measure
    failures, worst_err, max_n, max_mass = 0, 0.0, 0, 0.0
    rows = []
    for i in range(trials):
        f = rng.standard_normal(sp.n_nodes) * rng.exponential(1.0, sp.n_nodes) ** 3
        alpha = np.sum(np.abs(f) * mu) / sp.total_measure * (1.0 + rng.exponential(3.0))
        cz = czkit.cz_decompose(sp, f, alpha)
        inv = cz.invariants()
        failures += not all(inv.values())
        worst_err = max(worst_err, cz.reconstruction_error())
        max_n, max_mass = max(max_n, cz.overlap), max(max_mass, cz.c_mass)
        rows.append(Row("cz", {"trial": i, "alpha": float(alpha)}, "n_bad", cz.n_bad))
    summary = {"failures": failures, "max_reconstruction_error": worst_err,
               "max_overlap": max_n, "max_c_mass": max_mass}
    rows += [Row("cz", {"trials": trials}, k, v) for k, v in summary.items()]
    checks = [_check("all invariants", failures == 0, failures, 0),
              _check("reconstruction", worst_err <= 1e-12, worst_err, 1e-12)]
    return Result(rows, summary, checks)


def run_weak11(ctx: Context, exp: dict) -> Result:
    sp = ctx.space
    kind = exp.get("operator", "riesz")
    if kind == "riesz":
        T = riesz_matrix(sp, ctx.decomp, ctx.cutoff, int(exp.get("k", 0)))
        params = {"operator": "riesz"}
    else:
        F, params = _multiplier(exp.get("F"), _DEFAULT_F)
        w = ctx.cutoff.nodes(sp)
        T = DiscreteOperator(w[:, None] * ctx.decomp.apply(F) * w[None, :], sp, "MFM")
    K = verify.kernel_of(T)
    est = czkit.weak_operator_lower(K)
    l1 = float(K.column_l1().max())
    p_list = [float(p) for p in exp.get("p_list", [2.0])]
    summary = {"weak11_lower": est.value, "column_l1_max": l1}
    for p in p_list:
        summary[f"norm_p{p:g}"] = czkit.lp_norm_estimate(T, p, seed=ctx.seed).value
    rows = [Row("weak11", params, k, v) for k, v in summary.items()]
    checks = [_check("weak <= strong column norm", est.value <= l1 * (1 + 1e-12), est.value, l1)]
    return Result(rows, summary, checks)


RUNNERS = {"gaussian": run_gaussian, "supbounds": run_supbounds, "complex_time": run_complex_time,
           "offdiag": run_offdiag, "dm": run_dm, "multiplier_osc": run_multiplier_osc,
           "mihlin": run_mihlin, "riesz": run_riesz, "cz": run_cz, "weak11": run_weak11}


# --------------------------------------------------------------------------
# config handling

def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {where}: {exc.message}") from exc
    if cfg["coefficients"]["preset"] not in FIELD_PRESETS:
        raise ConfigError(f"coefficients.preset: unknown preset {cfg['coefficients']['preset']!r}")
    if "cutoff" in cfg and cfg["cutoff"]["preset"] not in CUTOFF_PRESETS:
        raise ConfigError(f"cutoff.preset: unknown preset {cfg['cutoff']['preset']!r}")
    for i, exp in enumerate(cfg["experiments"]):
        if "s" in exp and (float(exp["s"]) <= 0 or float(exp["s"]).is_integer()):
            raise ConfigError(f"experiments[{i}].s must be positive and non-integer, got {exp['s']}")
        if "delta" in exp and float(exp["delta"]) <= 0:
            raise ConfigError(f"experiments[{i}].delta must be positive")
        if "F" in exp and exp["F"].get("preset") not in MULTIPLIER_PRESETS:
            raise ConfigError(f"experiments[{i}].F.preset: unknown multiplier preset")
    dim = cfg["space"]["dim"]
    N = cfg["space"]["N"]
    n = int(np.prod(np.broadcast_to(np.asarray(N), (dim,))))
    if n > MAX_NODES:
        raise ConfigError(f"space.N: {n} nodes exceeds the resource bound {MAX_NODES}")


def build_context(cfg: dict, override: bool = False) -> Context:
    s = cfg["space"]
    try:
        space = build_grid(s["dim"], s["extent"], s["N"], s.get("boundary", "periodic"))
        fld = make_field(cfg["coefficients"]["preset"], cfg["coefficients"].get("params", {}), s["dim"])
        cut_spec = cfg.get("cutoff", {"preset": "constant", "params": {"value": 1.0}})
        cutoff = make_cutoff(cut_spec["preset"], cut_spec.get("params", {}), space)
        region = make_region(space, cfg["region"]["lo"], cfg["region"]["hi"]) if "region" in cfg else None
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    A = assemble_form_operator(space, fld)
    H = shift_identity(A, float(cfg.get("shift", 1.0)))
    return Context(cfg, space, fld, A, H, cutoff, region, int(cfg.get("seed", 0)),
                   override or bool(cfg.get("override_validity", False)))


def expand(experiments: list) -> list:
    out = []
    for exp in experiments:
        if exp["kind"] == "full":
            out += [{"kind": k, "name": f"{exp.get('name', 'full')}/{k}"} for k in RUNNERS]
        else:
            out.append(exp)
    return out


def run(config_path, output_dir=None, workers: int = 1, override_validity: bool = False) -> int:
    cfg = load_config(config_path)
    ctx = build_context(cfg, override_validity)
    out = Path(output_dir or cfg.get("output_dir", "degenlab_out"))
    (out / "tables").mkdir(parents=True, exist_ok=True)
    exps = expand(cfg["experiments"])
    if any(e["kind"] in ("supbounds", "complex_time", "dm", "multiplier_osc", "riesz", "weak11",
                         "gaussian") for e in exps):
        ctx.decomp  # build once, before the worker threads share it

    def task(i):
        exp = exps[i]
        t0 = time.perf_counter()
        try:
            res = RUNNERS[exp["kind"]](ctx, exp)
        except ValueError as exc:
            raise ConfigError(f"experiments[{i}] ({exp['kind']}): {exc}") from exc
        return res, time.perf_counter() - t0

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(task, range(len(exps))))

    entries = []
    for i, (exp, (res, wall)) in enumerate(zip(exps, results)):
        name = exp.get("name", exp["kind"])
        table = f"tables/{i:02d}_{exp['kind']}.csv"
        with open(out / table, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(res.rows))
        ok = all(c["passed"] for c in res.checks)
        status = "fail" if not ok else ("flagged" if res.flags else "pass")
        entries.append({"index": i, "kind": exp["kind"], "name": name, "status": status,
                        "summary": {k: _num(v) for k, v in res.summary.items()},
                        "checks": res.checks, "table": table, "wall_time": round(wall, 4),
                        "flags": res.flags})
    overall = "fail" if any(e["status"] == "fail" for e in entries) else "pass"
    report = {"schema_version": SCHEMA_VERSION, "status": overall, "config": cfg,
              "environment": {"python": platform.python_version(), "numpy": np.__version__,
                              "scipy": scipy.__version__, "platform": platform.platform()},
              "experiments": entries}
    jsonschema.validate(report, REPORT_SCHEMA)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    (out / "plot_tables.py").write_text(PLOT_SCRIPT, encoding="utf-8")
    return 0 if overall == "pass" else 1


PLOT_SCRIPT = '''"""Plot every tables/*.csv next to this file (value against row index)."""
import csv
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = pathlib.Path(__file__).parent
for path in sorted((here / "tables").glob("*.csv")):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    series = {}
    for r in rows:
        if r["value"] not in ("", "nan", "inf", "-inf"):
            series.setdefault(r["value_name"], []).append(float(r["value"]))
    fig, ax = plt.subplots()
    for name, vals in sorted(series.items()):
        if len(vals) > 1:
            ax.plot(vals, marker=".", label=name)
    ax.set_yscale("symlog", linthresh=1e-12)
    ax.set_title(path.stem)
    ax.legend(fontsize=6)
    fig.savefig(path.with_suffix(".png"), dpi=120)
    plt.close(fig)
'''


def list_presets() -> str:
    lines = []
    for title, table in (("coefficient fields", FIELD_PRESETS), ("cutoffs", CUTOFF_PRESETS),
                         ("multipliers", MULTIPLIER_PRESETS)):
        lines.append(f"{title}:")
        for name in sorted(table):
            params = ", ".join(f"{k}: {v}" for k, v in sorted(table[name].items()))
            lines.append(f"  {name}({params})")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="degenlab")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiments of a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--override-validity", action="store_true")
    sub.add_parser("presets", help="list field, cutoff and multiplier presets")
    args = parser.parse_args(argv)
    if args.command == "presets":
        sys.stdout.write(list_presets())
        return 0
    try:
        return run(args.config, args.output_dir, args.workers, args.override_validity)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
