"""Discretisation of the form a0(u, v) = sum_kj int a_kj (d_j u)(d_k v).

Each cell carries its coefficient matrix a(cell centre).  The form is the
average over the 2**dim cell corners of ``g_c^T a g_c`` where the corner
gradient ``g_c`` takes, along each axis, the forward difference of the cell
edge through that corner.  Every corner term is a PSD quadratic form, so the
stiffness is PSD for any PSD field including cross terms, and (unlike the
single centre-point rule) its kernel is only the constants in 2D.  The
averaged corner gradient is the cell-centred gradient ``G_k``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .media import CoefficientField
from .space import GridSpace

MAX_NODES = 4096


@dataclass
class GradientMaps:
    """Node-to-cell difference maps.

    ``axes[k]`` is the averaged (cell-centred) derivative along axis k;
    ``corners[c][k]`` is the corner-c derivative used by the quadrature.
    """
    space: GridSpace = field(repr=False)
    axes: list
    corners: list

    def __getitem__(self, k: int):
        return self.axes[k]


def discrete_gradient(space: GridSpace) -> GradientMaps:
    corners = space.cell_corners()
    offsets = list(itertools.product((0, 1), repeat=space.dim))
    pos = {o: c for c, o in enumerate(offsets)}
    n_cells, n_nodes = space.n_cells, space.n_nodes
    rows = np.arange(n_cells)
    corner_maps = []
    for o in offsets:
        per_axis = []
        for k in range(space.dim):
            lo = list(o)
            hi = list(o)
            lo[k], hi[k] = 0, 1
            i_hi, i_lo = corners[:, pos[tuple(hi)]], corners[:, pos[tuple(lo)]]
            h = space.spacing[k]
            data = np.concatenate([np.full(n_cells, 1.0 / h), np.full(n_cells, -1.0 / h)])
            m = sp.csr_matrix((data, (np.concatenate([rows, rows]), np.concatenate([i_hi, i_lo]))),
                              shape=(n_cells, n_nodes))
            per_axis.append(m)
        corner_maps.append(per_axis)
    ncorner = len(offsets)
    axes = [sum(corner_maps[c][k] for c in range(ncorner)) / ncorner for k in range(space.dim)]
    return GradientMaps(space, [sp.csr_matrix(a) for a in axes], corner_maps)


@dataclass
class DiscreteOperator:
    """Dense matrix acting on node (or cell) functions.

    ``domain``/``codomain`` are "node" or "cell"; the measures used for
    inner products and kernels follow from them.
    """
    matrix: np.ndarray = field(repr=False)
    space: GridSpace = field(repr=False)
    tag: str = "op"
    domain: str = "node"
    codomain: str = "node"
    meta: dict = field(default_factory=dict)

    def measure(self, which: str) -> np.ndarray:
        return self.space.node_measure if which == "node" else self.space.cell_measure

    @property
    def measure_in(self) -> np.ndarray:
        return self.measure(self.domain)

    @property
    def measure_out(self) -> np.ndarray:
        return self.measure(self.codomain)

    def coords(self, which: str) -> np.ndarray:
        return self.space.node_coords if which == "node" else self.space.cell_coords

    def __matmul__(self, other):
        if isinstance(other, DiscreteOperator):
            return compose(self, other)
        return self.matrix @ other

    @property
    def shape(self):
        return self.matrix.shape


def stiffness(space: GridSpace, field_: CoefficientField,
              grad: GradientMaps | None = None) -> sp.csr_matrix:
    if field_.dim != space.dim:
        raise ValueError("coefficient field and space dimensions differ")
    grad = grad or discrete_gradient(space)
    a = field_(space.cell_coords) * space.cell_volume
    ncorner = len(grad.corners)
    S = sp.csr_matrix((space.n_nodes, space.n_nodes))
    for gc in grad.corners:
        for k in range(space.dim):
            for j in range(space.dim):
                w = a[:, k, j] / ncorner
                if np.any(w):
                    S = S + gc[k].T @ sp.diags(w) @ gc[j]
    S = sp.csr_matrix(S)
    return sp.csr_matrix(0.5 * (S + S.T))


def form_value(space: GridSpace, field_: CoefficientField, u: np.ndarray, v: np.ndarray,
               grad: GradientMaps | None = None) -> float:
    """Direct quadrature of a0(u, v) with the corner rule."""
    grad = grad or discrete_gradient(space)
    a = field_(space.cell_coords)
    total = 0.0
    for gc in grad.corners:
        gu = np.stack([gc[k] @ u for k in range(space.dim)], axis=1)
        gv = np.stack([gc[k] @ v for k in range(space.dim)], axis=1)
        total += np.sum(np.einsum("ckj,cj,ck->c", a, gu, gv)) * space.cell_volume / len(grad.corners)
    return float(total)


def assemble_form_operator(space: GridSpace, field_: CoefficientField,
                           grad: GradientMaps | None = None) -> DiscreteOperator:
    """A = diag(mu)^-1 S so that <Au, v>_mu = a0(u, v)."""
    if space.n_nodes > MAX_NODES:
        raise ValueError(f"{space.n_nodes} nodes exceeds the dense limit {MAX_NODES}")
    S = stiffness(space, field_, grad).toarray()
    A = S / space.node_measure[:, None]
    return DiscreteOperator(A, space, "A", meta={"shift": 0.0, "field": field_.preset_id})


def shift_identity(A: DiscreteOperator, epsilon: float = 1.0) -> DiscreteOperator:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    H = A.matrix + epsilon * np.eye(A.shape[0])
    meta = dict(A.meta)
    meta["shift"] = meta.get("shift", 0.0) + epsilon
    return DiscreteOperator(H, A.space, "H", meta=meta)


def multiplication(space: GridSpace, values, on: str = "node", tag: str = "M") -> DiscreteOperator:
    values = np.asarray(values)
    return DiscreteOperator(np.diag(values), space, tag, on, on)


def derivative(grad: GradientMaps, k: int) -> DiscreteOperator:
    return DiscreteOperator(grad.axes[k].toarray(), grad.space, f"d{k}", "node", "cell")


def compose(*factors: DiscreteOperator) -> DiscreteOperator:
    """Product in written order (rightmost factor acts first)."""
    if not factors:
        raise ValueError("nothing to compose")
    out = factors[-1]
    mat = out.matrix
    for left in reversed(factors[:-1]):
        if left.space is not out.space:
            raise ValueError("factors live on different spaces")
        if left.domain != out.codomain:
            raise ValueError(f"stagger mismatch: {left.tag} expects {left.domain} values, "
                             f"{out.tag} produces {out.codomain} values")
        mat = left.matrix @ mat
        out = DiscreteOperator(mat, out.space, f"{left.tag}*{out.tag}", out.domain, left.codomain)
    return DiscreteOperator(mat, factors[-1].space, "*".join(f.tag for f in factors),
                            factors[-1].domain, factors[0].codomain)


def riesz_matrix(space: GridSpace, decomp, cutoff, k: int,
                 grad: GradientMaps | None = None) -> DiscreteOperator:
    """M_chi(cells) G_k H^{-1/2} M_chi(nodes)."""
    grad = grad or discrete_gradient(space)
    inv_sqrt = decomp.apply(lambda lam: lam ** -0.5)
    left = cutoff.cells(space)[:, None] * (grad.axes[k] @ inv_sqrt)
    mat = left * cutoff.nodes(space)[None, :]
    return DiscreteOperator(mat, space, f"Mchi*d{k}*H^-1/2*Mchi", "node", "cell")
