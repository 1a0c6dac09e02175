import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from degenlab.assemble import DiscreteOperator
from degenlab.czkit import (cz_decompose, lp_norm_estimate, restrict_extend, theorem1_rhs,
                            weak_l1_norm, weak_operator_lower)
from degenlab.experiments import random_cz_input
from degenlab.media import make_region
from degenlab.space import build_grid
from degenlab.verify import kernel_of


def test_cz_constant_has_no_bad_cubes():
    sp = build_grid(1, 8.0, 64)
    f = np.ones(sp.n_nodes)
    cz = cz_decompose(sp, f, 2.0)
    assert cz.n_bad == 0 and np.array_equal(cz.good, f)
    with pytest.raises(ValueError):
        cz_decompose(sp, f, 0.5)


def test_cz_single_spike():
    sp = build_grid(1, 8.0, 64)
    f = np.zeros(sp.n_nodes)
    y = 21
    f[y] = sp.total_measure / sp.node_measure[y]
    cz = cz_decompose(sp, f, 2.0)
    assert cz.n_bad == 1
    Q = cz.cubes[0]
    assert y in Q
    # averages mu(X)/|Q| over the halving chain: 1, 2, 4; the first one above alpha = 2 stops
    assert np.sum(sp.node_measure[Q]) == pytest.approx(sp.total_measure / 4)
    avg = sp.total_measure / np.sum(sp.node_measure[Q])
    assert np.allclose(cz.good[Q], avg)
    assert all(cz.invariants().values())


@pytest.mark.parametrize("dim,N,bc", [(1, 64, "periodic"), (1, 64, "neumann"), (2, 16, "periodic"),
                                      (2, 16, "neumann")])
def test_cz_invariants_random(dim, N, bc):
    sp = build_grid(dim, 8.0, N, bc)
    rng = np.random.default_rng(dim * 10 + len(bc))
    for _ in range(100):
        f, alpha = random_cz_input(sp, rng)
        cz = cz_decompose(sp, f, alpha)
        inv = cz.invariants()
        assert all(inv.values()), inv
        assert cz.reconstruction_error() <= 1e-12 * max(1.0, np.abs(f).max())
        norm1 = np.sum(np.abs(f) * sp.node_measure)
        assert np.sum(np.abs(cz.good) * sp.node_measure) <= (1 + cz.c_bad) * norm1 * (1 + 1e-12)


def test_weak_l1_examples():
    mu = np.full(10, 0.5)
    f = np.zeros(10)
    f[:4] = 3.0
    assert weak_l1_norm(f, mu) == pytest.approx(3.0 * 2.0)
    n = 50
    g = 1.0 / np.arange(1, n + 1)
    assert weak_l1_norm(g) == pytest.approx(1.0)
    assert weak_l1_norm(np.zeros(0)) == 0.0


@given(st.integers(0, 2**31))
def test_weak_l1_properties(seed):
    rng = np.random.default_rng(seed)
    mu = rng.uniform(0.1, 1.0, 40)
    f = rng.standard_normal(40) * rng.exponential(1, 40) ** 2
    g = rng.standard_normal(40)
    nf, ng = weak_l1_norm(f, mu), weak_l1_norm(g, mu)
    assert nf <= np.sum(np.abs(f) * mu) * (1 + 1e-12)
    assert weak_l1_norm(f + g, mu) <= 2 * (nf + ng) * (1 + 1e-12)
    assert weak_l1_norm(3 * f, mu) == pytest.approx(3 * nf)


def test_weak_operator_lower_examples():
    sp = build_grid(1, 8.0, 32)
    est = weak_operator_lower(kernel_of(DiscreteOperator(np.eye(32), sp, "I")))
    assert est.value == pytest.approx(1.0)
    ones = DiscreteOperator(np.ones((32, 32)) * sp.node_measure[None, :], sp, "1")
    est = weak_operator_lower(kernel_of(ones))
    assert est.value == pytest.approx(sp.total_measure)
    assert est.reproduce(ones) == pytest.approx(est.value)


def test_lp_examples():
    D = np.diag([3.0, 1.0])
    for p in (1.0, 1.5, 2.0, 3.0, math.inf):
        assert lp_norm_estimate(D, p).value == pytest.approx(3.0, rel=1e-9)
    sp = build_grid(1, 8.0, 16)
    rng = np.random.default_rng(0)
    T = DiscreteOperator(rng.standard_normal((16, 16)), sp, "R")
    K = kernel_of(T)
    exact = np.max(np.abs(K.values).T @ sp.node_measure)
    assert lp_norm_estimate(T, 1).value == pytest.approx(exact, rel=1e-12)


def test_lp_interpolation_and_reproduce():
    sp = build_grid(1, 8.0, 32)
    rng = np.random.default_rng(1)
    T = DiscreteOperator(rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32)), sp, "R")
    n1, n2, ninf = (lp_norm_estimate(T, p).value for p in (1, 2, math.inf))
    assert n2 <= math.sqrt(n1 * ninf) * (1 + 1e-9)
    for p in (1, 1.5, 2, 4, math.inf):
        est = lp_norm_estimate(T, p)
        assert est.reproduce(T) == pytest.approx(est.value, rel=1e-9)
    with pytest.raises(ValueError):
        lp_norm_estimate(T, 0.5)


def test_lp_estimate_beats_sampling():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((50, 50))
    p = 1.5
    est = lp_norm_estimate(M, p).value
    X = rng.standard_normal((50, 20000))
    S = np.sign(rng.standard_normal((50, 20000)))
    best = 0.0
    for Y in (X, S, X**3, X * (np.abs(X) > 1.5)):
        Y = Y[:, np.any(Y != 0, axis=0)]
        best = max(best, float(np.max(np.sum(np.abs(M @ Y) ** p, 0) ** (1 / p) / np.sum(np.abs(Y) ** p, 0) ** (1 / p))))
    assert est >= 0.95 * best
    # a lower bound: never above the Riesz-Thorin interpolation bound
    n1, ninf = lp_norm_estimate(M, 1).value, lp_norm_estimate(M, math.inf).value
    assert est <= n1 ** (1 / p) * ninf ** (1 - 1 / p) * (1 + 1e-9)


def test_bound_arithmetic():
    assert theorem1_rhs(1, 0, 1, 1, 2, 2) == pytest.approx(3.0)
    assert theorem1_rhs(1, 4, 1, 1, 2, 2, dim=1) == pytest.approx(15.0)
    assert theorem1_rhs(1, 4, 1, 1, 2, 2, dim=2) == pytest.approx(75.0)
    # scaling T and S by lam scales the bracket terms homogeneously
    lam, q0 = 3.0, 1.7
    a = theorem1_rhs(0, 0, 2.0, 1.5, 2, q0)
    b = theorem1_rhs(0, 0, lam * 2.0, lam * 1.5, 2, q0)
    assert b == pytest.approx(lam * a)
    with pytest.raises(ValueError):
        theorem1_rhs(-1, 0, 1, 1, 2, 2)
    with pytest.raises(ValueError):
        theorem1_rhs(1, 0, 1, 1, 1, 2)


def test_restrict_extend():
    sp = build_grid(1, 8.0, 32)
    rng = np.random.default_rng(3)
    T = DiscreteOperator(rng.standard_normal((32, 32)), sp, "R")
    assert np.array_equal(restrict_extend(T, make_region(sp, 0.0, 8.0)).matrix, T.matrix)
    empty = restrict_extend(T, make_region(sp, 3.01, 3.02))
    assert np.all(empty.matrix == 0)
    reg = make_region(sp, 2.0, 5.0)
    Tt = restrict_extend(T, reg)
    per = weak_operator_lower(kernel_of(Tt)).method["per_column"]
    inside = reg.node_mask
    assert np.all(per[~inside] == 0)
    sub = weak_operator_lower(kernel_of(Tt)).value
    assert sub == pytest.approx(per[inside].max())
