import numpy as np
import pytest
from hypothesis import given, strategies as st

from degenlab.assemble import DiscreteOperator, assemble_form_operator, shift_identity
from degenlab.media import make_field
from degenlab.multiplier import make_multiplier
from degenlab.space import build_grid
from degenlab.spectral import (apply_function, eigendecompose, fourier_calculus_crosscheck,
                               inv_sqrt_subordination, positive_semigroup, propagator)


def test_identity_decomposition():
    dec = eigendecompose(np.eye(5))
    assert np.allclose(dec.eigenvalues, 1)


def test_circulant_eigenvalues_and_orthonormality(free1d):
    sp, dec = free1d.space, free1d.decomp
    h, N = sp.spacing[0], sp.n_nodes
    ref = np.sort((2 - 2 * np.cos(2 * np.pi * np.arange(N) / N)) / h**2 + 1.0)
    assert np.max(np.abs(dec.eigenvalues - ref) / ref) <= 1e-9
    G = dec.vectors.T @ (dec.vectors * sp.node_measure[:, None])
    assert np.max(np.abs(G - np.eye(N))) <= 1e-10
    assert dec.residual <= 1e-9
    assert dec.eigenvalues.min() >= 1.0 - 1e-10


def test_apply_function_basics(plateau1d):
    dec, H = plateau1d.decomp, plateau1d.H
    assert np.allclose(dec.apply(lambda l: l), H.matrix, atol=1e-9 * np.abs(H.matrix).max())
    t = 0.3
    assert np.allclose(apply_function(dec, lambda l: np.exp(-t * l)).matrix,
                       propagator(dec, t).matrix, atol=1e-10)
    U = dec.apply(make_multiplier("imaginary_power", s_im=3.0))
    sq = np.sqrt(dec.measure)
    B = sq[:, None] * U / sq[None, :]
    assert np.allclose(B.conj().T @ B, np.eye(B.shape[0]), atol=1e-9)
    with pytest.raises(ValueError):
        dec.apply(lambda l: np.where(l > 2, np.nan, 1.0))


def test_functional_calculus_invariants(plateau1d):
    dec, H = plateau1d.decomp, plateau1d.H.matrix
    for F in (make_multiplier("heat", t=0.05), make_multiplier("bochner_riesz", alpha=1.1, R=40.0),
              make_multiplier("schrodinger", alpha=1.0, t=0.2)):
        M = dec.apply(F)
        scale = np.linalg.norm(H, 2) * np.linalg.norm(M, 2)
        assert np.max(np.abs(H @ M - M @ H)) <= 1e-9 * scale
        sq = np.sqrt(dec.measure)
        B = sq[:, None] * M / sq[None, :]
        assert np.linalg.norm(B, 2) <= np.max(np.abs(F(dec.eigenvalues))) + 1e-9


def test_propagator_laws(free1d):
    dec = free1d.decomp
    assert np.allclose(propagator(dec, 0).matrix, np.eye(dec.n), atol=1e-10)
    a, b = propagator(dec, 0.2).matrix, propagator(dec, 0.5).matrix
    assert np.allclose(a @ b, propagator(dec, 0.7).matrix, atol=1e-9)
    U = propagator(dec, 1j * 0.8).matrix
    sq = np.sqrt(dec.measure)
    assert np.linalg.norm(sq[:, None] * U / sq[None, :], 2) == pytest.approx(1.0, abs=1e-9)
    K = dec.kernel(lambda l: np.exp(-0.1 * l))
    assert K.min() >= -1e-12
    with pytest.raises(ValueError):
        propagator(dec, -1.0)


def test_positive_semigroup_matches_spectral(plateau1d):
    dec, H = plateau1d.decomp, plateau1d.H
    E1 = positive_semigroup(H.matrix, 0.5)
    E2 = dec.apply(lambda l: np.exp(-0.5 * l))
    assert np.max(np.abs(E1 - E2)) <= 1e-12
    assert E1.min() >= 0


def test_subordination_small_examples():
    assert np.allclose(inv_sqrt_subordination(np.eye(4), epsilon=1.0), np.eye(4), atol=1e-6)
    assert np.allclose(inv_sqrt_subordination(4 * np.eye(4), epsilon=4.0), 0.5 * np.eye(4), atol=1e-6)
    with pytest.raises(ValueError):
        inv_sqrt_subordination(np.eye(3), epsilon=0.0)


def test_subordination_square_is_inverse():
    sp = build_grid(1, 8.0, 64)
    H = shift_identity(assemble_form_operator(sp, make_field("identity", {}, 1)))
    R = inv_sqrt_subordination(H).matrix
    Hinv = np.linalg.inv(H.matrix)
    assert np.max(np.abs(R @ R - Hinv)) <= 1e-5 * np.max(np.abs(Hinv))


@given(st.integers(0, 2**31), st.integers(4, 40))
def test_subordination_random_psd(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    H = X @ X.T / n + np.eye(n)
    lam, V = np.linalg.eigh(H)
    ref = (V / np.sqrt(lam)) @ V.T
    out = inv_sqrt_subordination(H, epsilon=1.0, panels=600)
    assert np.max(np.abs(out - ref)) <= 1e-6 * np.max(np.abs(ref))


def _bump(a=1.0):
    def F(l):
        l = np.asarray(l, dtype=float)
        out = np.zeros_like(l)
        m = (l > 0.25) & (l < 1.0)
        out[m] = np.exp(-a / ((l[m] - 0.25) * (1 - l[m])) + a / 0.140625)
        return out
    return F


def test_fourier_crosscheck():
    sp = build_grid(1, 8.0, 64)
    H = shift_identity(assemble_form_operator(sp, make_field("identity", {}, 1)))
    dec = eigendecompose(H)
    r = float(dec.eigenvalues.max()) * 1.01
    F = lambda l: _bump()(l / r)
    _, dev = fourier_calculus_crosscheck(dec, F, r)
    # truncation-limited at the default |xi| <= 64: measured 1.04e-5
    assert dev <= 1e-5
    devs = [fourier_calculus_crosscheck(dec, F, r, xi_max=x)[1] for x in (8.0, 16.0, 32.0, 64.0)]
    assert all(b <= a for a, b in zip(devs, devs[1:]))
    zero, dz = fourier_calculus_crosscheck(dec, lambda l: 0 * l, r)
    assert np.max(np.abs(zero)) == 0 and dz == 0
    with pytest.raises(ValueError):
        fourier_calculus_crosscheck(dec, lambda l: np.ones_like(l), r)


def test_fourier_crosscheck_wide_window():
    sp = build_grid(1, 8.0, 64)
    dec = eigendecompose(shift_identity(assemble_form_operator(sp, make_field("identity", {}, 1))))
    r = float(dec.eigenvalues.max()) * 1.01
    _, dev = fourier_calculus_crosscheck(dec, lambda l: _bump()(l / r), r, xi_max=128.0, panels=2**15)
    assert dev <= 1e-7
