import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from degenlab.multiplier import (MULTIPLIER_PRESETS, dyadic_partition, holder_norm, holder_seminorm,
                                 make_multiplier, mihlin_sup, scale)


def test_presets_closed_forms():
    lam = np.array([0.0, 0.5, 2.0, 10.0])
    assert np.allclose(make_multiplier("heat", t=0.3)(lam), np.exp(-0.3 * lam))
    ip = make_multiplier("imaginary_power", s_im=2.0)(lam)
    assert ip[0] == 0 and np.allclose(ip[1:], lam[1:] ** 2j)
    assert np.allclose(make_multiplier("schrodinger", alpha=1.0, t=2.0)(lam),
                       np.exp(2j * lam) / (1 + lam))
    assert np.allclose(make_multiplier("wave", alpha=2.0, t=1.0)(lam),
                       np.exp(1j * np.sqrt(lam)) / (1 + lam))
    assert np.allclose(make_multiplier("bochner_riesz", alpha=1.5, R=4.0)(lam),
                       np.clip(1 - lam / 4, 0, None) ** 1.5)
    for name in MULTIPLIER_PRESETS:
        params = {"constant": {}, "heat": {"t": 1.0}, "imaginary_power": {"s_im": 1.0},
                  "schrodinger": {"alpha": 1.0, "t": 1.0}, "wave": {"alpha": 1.0, "t": 1.0},
                  "bochner_riesz": {"alpha": 1.0, "R": 2.0}}[name]
        assert make_multiplier(name, **params).is_bounded()


def test_partition_examples():
    part = dyadic_partition()
    assert math.fsum(part(2.0 ** (-n) * 0.7) for n in range(-30, 31)) == pytest.approx(1.0, abs=1e-10)
    assert part(0.1) == 0 and part(1.0) == 0
    lam = np.linspace(0.01, 3, 500)
    assert np.allclose(part(2 * lam) + part(lam), part.eta(lam) - part.eta(4 * lam), atol=1e-14)
    assert part(lam).min() >= 0


@given(st.floats(1e-6, 1e6))
def test_partition_of_unity(lam):
    part = dyadic_partition(2.0)
    assert float(part.partition_sum(np.array(lam))) == pytest.approx(1.0, abs=1e-10)


def test_holder_examples():
    x = np.linspace(0, 1, 2001)
    assert holder_norm(x, np.ones_like(x), 0.5) == pytest.approx(1.0)
    assert holder_norm(x, x, 1.5) == pytest.approx(2.0, abs=1e-9)
    vals = [holder_norm(np.linspace(0, 1, n), np.linspace(0, 1, n) ** 2, 1.5) for n in (501, 2001, 8001)]
    assert abs(vals[-1] - 5.0) < abs(vals[0] - 5.0) + 1e-12 and vals[-1] == pytest.approx(5.0, abs=2e-2)
    with pytest.raises(ValueError):
        holder_norm(x, x, 1.0)
    with pytest.raises(ValueError):
        holder_norm(x[:10], x[:10], 0.5)


@given(st.integers(0, 2**31), st.floats(-3, 3))
def test_holder_is_a_norm(seed, c):
    rng = np.random.default_rng(seed)
    x = np.linspace(0, 1, 401)
    f = np.cumsum(rng.standard_normal(x.size)) / 20
    g = np.sin(5 * x + rng.uniform(0, 3))
    nf, ng = holder_norm(x, f, 0.7), holder_norm(x, g, 0.7)
    assert holder_norm(x, f + g, 0.7) <= nf + ng + 1e-9
    assert holder_norm(x, c * f, 0.7) == pytest.approx(abs(c) * nf, rel=1e-9, abs=1e-12)


def test_mihlin_examples():
    part = dyadic_partition()
    ts = np.geomspace(1e-2, 1e3, 11)
    one = mihlin_sup(make_multiplier("constant"), part, 1.5, ts)
    assert np.ptp(one.per_t) == 0
    ip = mihlin_sup(make_multiplier("imaginary_power", s_im=2.0), part, 1.5, ts)
    assert np.ptp(ip.per_t) <= 1e-9 * ip.value
    with pytest.warns(UserWarning):
        osc = mihlin_sup(lambda l: np.exp(1j * l), part, 1.5, np.geomspace(1, 256, 9))
    lam = np.linspace(0.125, 2, 1601)
    phi_sup = np.max(np.abs(part(lam)))
    assert np.all(osc.per_t[-3:] >= ts[0] * 0 + np.geomspace(1, 256, 9)[-3:] * phi_sup * 0.5)
    assert osc.edge_flag


@pytest.mark.parametrize("preset,params", [("schrodinger", {"alpha": 0.8, "t": 1.0}),
                                           ("wave", {"alpha": 0.8, "t": 1.0}),
                                           ("bochner_riesz", {"alpha": 2.5, "R": 1.0})])
def test_mihlin_stable_under_grid_extension(preset, params):
    F = make_multiplier(preset, **params)
    part = dyadic_partition()
    base = mihlin_sup(F, part, 1.51, np.geomspace(1e-3, 1e3, 49)).value
    wide = mihlin_sup(F, part, 1.51, np.geomspace(1e-4, 1e4, 65)).value
    assert abs(wide / base - 1) < 0.05


def test_mihlin_imaginary_power_polynomial_growth():
    part = dyadic_partition()
    s = 1.51
    xs = 2.0 ** np.arange(7)
    vals = [mihlin_sup(make_multiplier("imaginary_power", s_im=v), part, s, [1.0]).value for v in xs]
    slope = np.polyfit(np.log(xs), np.log(vals), 1)[0]
    assert slope <= s + 1


def test_scale():
    F = make_multiplier("heat", t=1.0)
    lam = np.linspace(0, 5, 11)
    assert np.allclose(scale(F, 1.0)(lam), F(lam))
    assert np.allclose(scale(scale(F, 3.0), 1 / 3.0)(lam), F(lam))
    br = make_multiplier("bochner_riesz", alpha=1.0, R=4.0)
    assert np.all(scale(br, 4.0)(np.linspace(1.0, 3.0, 5)) == 0)
