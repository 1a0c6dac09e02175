import numpy as np
import pytest
from hypothesis import given, strategies as st

from degenlab.assemble import (DiscreteOperator, assemble_form_operator, compose, derivative,
                               discrete_gradient, form_value, multiplication, riesz_matrix,
                               shift_identity, stiffness)
from degenlab.media import ellipticity_check, make_cutoff, make_field
from degenlab.space import build_grid
from degenlab.spectral import eigendecompose, positive_semigroup


def test_gradient_annihilates_constants_and_affine():
    for dim, N in [(1, 16), (2, 8)]:
        sp = build_grid(dim, 8.0, N, "periodic")
        g = discrete_gradient(sp)
        for k in range(dim):
            assert np.allclose(g[k] @ np.ones(sp.n_nodes), 0)
            u = sp.node_coords[:, k]
            Gu = g[k] @ u
            h = sp.spacing[k]
            wrap = np.abs(Gu - 1) > 1e-9
            # only cells straddling the periodic seam differ
            assert np.all(sp.cell_coords[wrap, k] > 8.0 - h)


def test_gradient_converges_on_sine():
    errs = []
    for N in (32, 64, 128):
        sp = build_grid(1, 1.0, N, "periodic")
        g = discrete_gradient(sp)
        u = np.sin(2 * np.pi * sp.node_coords[:, 0])
        exact = 2 * np.pi * np.cos(2 * np.pi * sp.cell_coords[:, 0])
        errs.append(np.max(np.abs(g[0] @ u - exact)))
    assert errs[1] <= errs[0] / 2 and errs[2] <= errs[1] / 2


def test_circulant_spectrum():
    sp = build_grid(1, 8.0, 32, "periodic")
    A = assemble_form_operator(sp, make_field("identity", {}, 1))
    h = sp.spacing[0]
    expected = np.sort((2 - 2 * np.cos(2 * np.pi * np.arange(32) / 32)) / h**2)
    assert np.allclose(np.sort(np.linalg.eigvals(A.matrix).real), expected, atol=1e-9)
    zero = assemble_form_operator(sp, make_field("identity", {"scale": 0.0}, 1))
    assert np.all(zero.matrix == 0)


@pytest.mark.parametrize("preset,params", [
    ("identity", {}),
    ("plateau_bump", {"center": [4.0, 4.0], "radius": 1.5, "width": 1.0}),
    ("anisotropic_plateau", {"center": [4.0, 4.0], "radius": 1.5, "width": 1.0,
                             "eigenvalues": [1.0, 0.1], "angle": 0.6}),
])
def test_form_psd_symmetric_consistent(preset, params):
    sp = build_grid(2, 8.0, 16, "periodic")
    fld = make_field(preset, params, 2)
    A = assemble_form_operator(sp, fld)
    S = stiffness(sp, fld).toarray()
    mu = sp.node_measure
    rng = np.random.default_rng(0)
    U = rng.standard_normal((sp.n_nodes, 1000))
    quad = np.einsum("ij,ij->j", U, (A.matrix @ U) * mu[:, None])
    assert quad.min() >= -1e-10 * np.abs(quad).max()
    u, v = U[:, 0], U[:, 1]
    lhs, rhs = (A.matrix @ u) @ (v * mu), u @ ((A.matrix @ v) * mu)
    assert lhs == pytest.approx(rhs, rel=1e-10)
    assert u @ S @ u == pytest.approx(form_value(sp, fld, u, u), rel=1e-12)


def test_constants_only_kernel_in_2d():
    sp = build_grid(2, 8.0, 8, "periodic")
    A = assemble_form_operator(sp, make_field("identity", {}, 2))
    ev = np.sort(np.linalg.eigvals(A.matrix).real)
    assert abs(ev[0]) < 1e-10 and ev[1] > 1e-3


def test_indicator_decoupling():
    sp = build_grid(1, 16.0, 64, "neumann")
    fld = make_field("indicator_region", {"lo": 4.0, "hi": 12.0}, 1)
    A = assemble_form_operator(sp, fld)
    far = np.flatnonzero((sp.node_coords[:, 0] < 3.0) | (sp.node_coords[:, 0] > 13.0))
    assert np.all(A.matrix[np.ix_(far, far)] == 0)
    E = positive_semigroup(A.matrix, 5.0)
    assert np.allclose(E[np.ix_(far, far)], np.eye(far.size))


def test_shift_identity():
    sp = build_grid(1, 8.0, 16)
    A = assemble_form_operator(sp, make_field("identity", {"scale": 0.0}, 1))
    H = shift_identity(A)
    assert np.array_equal(H.matrix, np.eye(16)) and H.meta["shift"] == 1.0
    A1 = assemble_form_operator(sp, make_field("identity", {}, 1))
    d0 = eigendecompose(A1).eigenvalues
    d1 = eigendecompose(shift_identity(A1, 0.5)).eigenvalues
    assert np.allclose(d1 - d0, 0.5)
    with pytest.raises(ValueError):
        shift_identity(A1, 0.0)


def test_compose_rules():
    sp = build_grid(1, 8.0, 16)
    chi = np.linspace(0, 1, 16)
    M = multiplication(sp, chi)
    assert np.allclose(compose(M, M).matrix, np.diag(chi**2))
    g = discrete_gradient(sp)
    D = derivative(g, 0)
    Mc = multiplication(sp, np.ones(sp.n_cells), on="cell")
    T = compose(Mc, D, M)
    assert T.domain == "node" and T.codomain == "cell"
    with pytest.raises(ValueError):
        compose(M, D)
    one = multiplication(sp, np.ones(16))
    assert np.array_equal(compose(one, one).matrix, np.eye(16))


def test_riesz_matrix_zero_cutoff():
    sp = build_grid(1, 16.0, 64)
    H = shift_identity(assemble_form_operator(sp, make_field("identity", {}, 1)))
    dec = eigendecompose(H)
    zero = make_cutoff("constant", {"value": 0.0})
    assert np.all(riesz_matrix(sp, dec, zero, 0).matrix == 0)


@given(st.integers(0, 2**31))
def test_discrete_energy_inequality(seed):
    sp = build_grid(2, 8.0, 16, "periodic")
    fld = make_field("anisotropic_plateau", {"center": [4.0, 4.0], "radius": 2.0, "width": 1.5,
                                             "eigenvalues": [1.0, 0.4], "angle": 0.3}, 2)
    chi = make_cutoff("plateau", {"center": [4.0, 4.0], "inner": 0.5, "outer": 1.8}, sp)
    mu = 0.4
    assert ellipticity_check(fld, sp, np.flatnonzero(chi.cells(sp) != 0), mu).passed
    u = np.random.default_rng(seed).standard_normal(sp.n_nodes)
    g = discrete_gradient(sp)
    lhs = sum(np.sum((chi.cells(sp) * (g[k] @ u)) ** 2 * sp.cell_measure) for k in range(2))
    assert lhs <= chi.sup_norm**2 / mu * form_value(sp, fld, u, u) * (1 + 1e-10)
