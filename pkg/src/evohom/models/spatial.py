"""Discrete spatial operators: the 1-D Dirichlet gradient/divergence pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import AmbiguousRank
from ..linalg import DEFAULT_RANK_TOL, opnorm


@dataclass(frozen=True)
class SpatialOperatorPair:
    """Staggered-grid ``grad0`` (nodes -> cells) and ``div = -grad0^T``.

    Temperatures live on the ``cells - 1`` interior nodes, fluxes on the
    ``cells`` cells. ``A_block = [[0, div], [grad0, 0]]`` is skew-symmetric
    by construction.
    """

    grad0: sp.csr_matrix
    div: sp.csr_matrix
    A_block: sp.csr_matrix
    h: float

    @property
    def n_nodes(self):
        return self.grad0.shape[1]

    @property
    def n_cells(self):
        return self.grad0.shape[0]

    @property
    def nodes(self):
        return self.h * np.arange(1, self.n_nodes + 1)

    @property
    def midpoints(self):
        return self.h * (np.arange(self.n_cells) + 0.5)


def build_grad_div_1d(cells, length=1.0):
    """Forward-difference gradient with zero Dirichlet values at both ends."""
    if cells < 2:
        raise ValueError("need at least 2 cells")
    h = length / cells
    m = cells
    # (grad0 theta)_j = (theta_j - theta_{j-1}) / h with theta_0 = theta_m = 0
    grad0 = sp.diags([np.full(m - 1, 1.0 / h), np.full(m - 1, -1.0 / h)], [0, -1],
                     shape=(m, m - 1), format="csr")
    div = (-grad0.T).tocsr()
    a = sp.bmat([[None, div], [grad0, None]], format="csr")
    return SpatialOperatorPair(grad0, div, a, h)


@dataclass(frozen=True)
class ProjectionPair:
    """Orthonormal bases ``P`` of ``N(A)^perp`` and ``Q`` of ``N(A)`` (as columns)."""

    P: np.ndarray
    Q: np.ndarray
    rank_tol: float
    singular_values: np.ndarray


def nullspace_projections(a, rank_tol=DEFAULT_RANK_TOL, gap=10.0):
    """Split ``C^n`` into ``N(A)^perp`` and ``N(A)`` via the SVD of ``A``.

    Raises :class:`AmbiguousRank` when a singular value lies within a factor
    ``gap`` of the threshold ``rank_tol * max(||A||, 1)``.
    """
    a = a.toarray() if sp.issparse(a) else np.asarray(a)
    a = a.astype(complex)
    n = a.shape[0]
    if n == 0:
        e = np.zeros((0, 0), complex)
        return ProjectionPair(e, e, rank_tol, np.zeros(0))
    _, s, vh = np.linalg.svd(a)
    thr = rank_tol * max(opnorm(a), 1.0)
    big = s > thr
    near = s[(s >= thr / gap) & (s <= thr * gap)]
    if near.size:
        raise AmbiguousRank(f"singular value {near[0]:.3e} within a factor {gap:g} of {thr:.3e}")
    v = vh.conj().T
    return ProjectionPair(v[:, big], v[:, ~big], rank_tol, s)
