"""Small dense linear-algebra helpers shared across modules."""

import numpy as np
from scipy.linalg import subspace_angles

DEFAULT_RANK_TOL = 1e-9


def as_operator(x, dim=None):
    """Return ``x`` as a 2-D complex array, checking for non-finite entries."""
    a = np.array(x, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"operator must be 2-D, got shape {a.shape}")
    if dim is not None and a.shape != (dim, dim):
        raise ValueError(f"expected shape {(dim, dim)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    return a


def hermitian_part(x):
    x = np.asarray(x)
    return 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))


def adjoint(x):
    return np.conj(np.swapaxes(np.asarray(x), -1, -2))


def opnorm(x):
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    return float(np.linalg.norm(x, 2))


def threshold(x, rank_tol=DEFAULT_RANK_TOL):
    """Absolute eigen/singular value cut-off relative to ``||x||``."""
    return rank_tol * max(opnorm(x), 1.0)


def hermitian_split(h, rank_tol=DEFAULT_RANK_TOL):
    """Eigen-split a Hermitian matrix into range and nullspace bases.

    Returns ``(w, range_basis, null_basis, tol)`` where ``w`` holds the
    eigenvalues (ascending) and the bases are orthonormal column sets.
    """
    h = hermitian_part(h)
    n = h.shape[0]
    if n == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return np.zeros(0), empty, empty, 0.0
    w, v = np.linalg.eigh(h)
    tol = threshold(h, rank_tol)
    big = np.abs(w) > tol
    return w, v[:, big], v[:, ~big], tol


def range_basis(x, rank_tol=DEFAULT_RANK_TOL):
    """Orthonormal basis of the column space of ``x`` via SVD."""
    x = np.asarray(x, dtype=complex)
    if x.size == 0:
        return np.zeros((x.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(x)
    tol = threshold(x, rank_tol)
    return u[:, : int(np.sum(s > tol))]


def complement(basis, dim):
    """Orthonormal basis of the orthogonal complement of ``basis`` in C^dim."""
    if basis.shape[1] == 0:
        return np.eye(dim, dtype=complex)
    if basis.shape[1] == dim:
        return np.zeros((dim, 0), dtype=complex)
    q, _ = np.linalg.qr(basis, mode="complete")
    return q[:, basis.shape[1]:]


def max_principal_angle(a, b):
    """Largest principal angle between the column spans of ``a`` and ``b``.

    Returns ``pi/2`` when the dimensions differ, ``0`` when both are empty.
    """
    if a.shape[1] != b.shape[1]:
        return float(np.pi / 2)
    if a.shape[1] == 0:
        return 0.0
    return float(np.max(subspace_angles(a, b)))


def same_range(x, y, rank_tol=DEFAULT_RANK_TOL, angle_tol=1e-8):
    return max_principal_angle(range_basis(x, rank_tol), range_basis(y, rank_tol)) <= angle_tol


def min_eig(h):
    """Smallest eigenvalue of the Hermitian part; ``inf`` for empty input."""
    h = np.asarray(h)
    if h.size == 0:
        return float("inf")
    return float(np.linalg.eigvalsh(hermitian_part(h))[0])
