import numpy as np
import pytest
from hypothesis import given, strategies as st

from degenlab.space import annulus, ball, build_grid, doubling_report, volume


def test_build_grid_examples():
    sp = build_grid(1, 8.0, 8, "periodic")
    assert sp.n_nodes == 8 and sp.spacing == (1.0,)
    assert np.allclose(sp.node_measure, 1.0) and sp.total_measure == 8.0
    sp2 = build_grid(2, 4.0, 4, "neumann")
    assert sp2.n_nodes == 16 and sp2.total_measure == pytest.approx(16.0)
    with pytest.raises(ValueError):
        build_grid(1, 8.0, 6)
    with pytest.raises(ValueError):
        build_grid(3, 8.0, 8)


def test_ball_examples():
    sp = build_grid(1, 8.0, 8, "periodic")
    assert sorted(ball(sp, 0, 2.5)) == [0, 1, 2, 6, 7]
    assert list(ball(sp, 3, 0.5)) == [3]
    with pytest.raises(ValueError):
        ball(sp, 0, 0.0)
    sq = build_grid(2, 8.0, 8, "periodic")
    assert ball(sq, 0, 1.2).size == 5
    # diagonal neighbours sit at sqrt(2) < 1.5
    assert ball(sq, 0, 1.5).size == 9


def test_annulus_examples():
    sp = build_grid(1, 64.0, 64, "periodic")
    assert annulus(sp, 32, 1, 1.0).size == 7
    C2 = annulus(sp, 32, 2, 1.0)
    d = sp.distances_from(32)[C2]
    assert np.all((d >= 4) & (d < 8)) and C2.size == 8


@given(st.integers(0, 63), st.floats(0.3, 10.0))
def test_annuli_disjoint_and_cover(x, r):
    sp = build_grid(1, 64.0, 64, "periodic")
    seen = set(ball(sp, x, 2 * r))
    for j in range(1, 9):
        C = set(annulus(sp, x, j, r))
        if j >= 2:
            assert not (C & seen - set(ball(sp, x, 2**j * r)))
        seen |= C
    assert seen == set(range(64))
    for j in range(2, 8):
        for k in range(j + 1, 9):
            assert not set(annulus(sp, x, j, r)) & set(annulus(sp, x, k, r))


def test_volume_examples():
    sp = build_grid(1, 4.0, 8, "periodic")
    assert volume(sp, [0, 1, 2, 3, 4]) == pytest.approx(2.5)
    assert volume(sp, []) == 0
    assert volume(sp, range(8)) == pytest.approx(sp.total_measure)


@given(st.integers(0, 255), st.integers(0, 255))
def test_metric_properties(a, b):
    sp = build_grid(2, 8.0, 16, "periodic")
    D = sp.distance(sp.node_coords[[a, b]], sp.node_coords)
    assert D[0, b] == pytest.approx(D[1, a])
    assert np.all(D[0] <= D[1] + D[0, b] + 1e-12)
    assert D.max() <= 8.0 * np.sqrt(2) / 2 + 1e-12


def test_doubling_report():
    sp = build_grid(1, 256.0, 256, "periodic")
    rep = doubling_report(sp, 200, 0, r_window=(20.0, 60.0))
    assert rep.C0 == pytest.approx(2.0, rel=0.1)
    sq = build_grid(2, 64.0, 64, "periodic")
    rep2 = doubling_report(sq, 300, 0)
    assert abs(rep2.d_eff - 2.0) <= 0.2
    one = build_grid(1, 1.0, 1, "periodic")
    assert doubling_report(one, 5).C0 == 1.0


def test_doubling_rechecked_on_fresh_samples():
    sp = build_grid(2, 32.0, 32, "periodic")
    rep = doubling_report(sp, 200, 0)
    rng = np.random.default_rng(9)
    lo, hi = rep.r_window
    for _ in range(100):
        x = int(rng.integers(sp.n_nodes))
        r = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        lam = float(np.exp(rng.uniform(0, np.log(8))))
        v1, v2 = volume(sp, ball(sp, x, r)), volume(sp, ball(sp, x, 2 * r))
        assert v2 <= rep.C0 * v1 * 1.5
        assert volume(sp, ball(sp, x, lam * r)) <= rep.C1 * lam ** rep.d_eff * v1 * 1.5


def test_dyadic_labels_nest():
    sp = build_grid(2, 8.0, 8, "periodic")
    fine, coarse = sp.dyadic_labels(1), sp.dyadic_labels(2)
    for lab in np.unique(fine):
        assert np.unique(coarse[fine == lab]).size == 1
