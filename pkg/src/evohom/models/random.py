"""Seeded generators of admissible random laws for tests and sweeps."""

import numpy as np
from scipy.stats import unitary_group

from ..decomp import GaussFactors
from ..linalg import adjoint
from ..mlaw.law import MaterialLaw


def _cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _unitary(rng, n):
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if n == 1:
        return np.exp(2j * np.pi * rng.uniform()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


def random_spd(rng, n, d=1.0, spread=1.0):
    """Hermitian matrix with spectrum in ``[d, d + spread]``."""
    u = _unitary(rng, n)
    w = d + spread * rng.uniform(size=n)
    return (u * w) @ adjoint(u)


def random_block_law(rng, sizes, order=4, eps=1.0, d=1.0, c=1.0, coupling=0.3, tail=0.1,
                     hermitian_null=True, u=None):
    """Random law in four-block form on ``C^(k1+k2) (+) C^(k3+k4)``.

    ``M(0)`` is positive definite (``>= d``) on ``G1 (+) G3`` and vanishes on
    ``G2 (+) G4``; ``Re M'(0) >= c`` on ``G2 (+) G4``. With ``hermitian_null``
    the ``G2``/``G4`` part of ``M'(0)`` is Hermitian, so the compatibility
    condition holds. The bases ``G1 .. G4`` are random within each factor.

    Returns ``(law, split, u)`` where ``u`` maps G-coordinates to the
    original ones. Passing ``u`` reuses given bases.
    """
    k1, k2, k3, k4 = sizes
    n = sum(sizes)
    r_idx = np.r_[0:k1, k1 + k2:k1 + k2 + k3]
    z_idx = np.r_[k1:k1 + k2, k1 + k2 + k3:n]
    m0 = np.zeros((n, n), dtype=complex)
    m0[np.ix_(r_idx, r_idx)] = random_spd(rng, len(r_idx), d)
    m1 = coupling * _cplx(rng, n, n)
    nz = len(z_idx)
    if hermitian_null:
        m1[np.ix_(z_idx, z_idx)] = random_spd(rng, nz, c)
    else:
        m1[np.ix_(z_idx, z_idx)] = random_spd(rng, nz, c) + coupling * _cplx(rng, nz, nz)
        h = 0.5 * (m1[np.ix_(z_idx, z_idx)] + adjoint(m1[np.ix_(z_idx, z_idx)]))
        shift = max(0.0, c - np.linalg.eigvalsh(h)[0]) if nz else 0.0
        m1[np.ix_(z_idx, z_idx)] += shift * np.eye(nz)
    coeffs = [m0, m1] + [tail * _cplx(rng, n, n) for _ in range(order - 1)]
    s = k1 + k2
    if u is None:
        u = np.zeros((n, n), dtype=complex)
        u[:s, :s] = _unitary(rng, s)
        u[s:, s:] = _unitary(rng, n - s)
    law = MaterialLaw.from_list(coeffs, eps, order=order).conjugate_by(adjoint(u))
    return law, s, u


def random_periodic_sequence(rng, sizes, length, period=2, **kwargs):
    """``length`` laws cycling through ``period`` random laws with common G-bases.

    All members share ``R(M(0))`` and the four-block structure, so the
    sequence satisfies the range and compatibility conditions but has
    ``period`` cluster points. Returns ``(laws, split)``.
    """
    first, split, u = random_block_law(rng, sizes, **kwargs)
    members = [first] + [random_block_law(rng, sizes, u=u, **kwargs)[0]
                         for _ in range(period - 1)]
    return [members[i % period] for i in range(length)], split


def random_gauss_factors(rng, dec, order=2, scale=0.5, sign=1):
    """Factors satisfying the zeroth-order pattern for the decomposition ``dec``."""
    k1, k2, k3, k4 = dec.sizes
    s, t = k1 + k2, k3 + k4
    n1g = np.zeros((s, t), dtype=complex)
    n1g[:k1, :k3] = scale * _cplx(rng, k1, k3)
    n1g[:k1, k3:] = scale * _cplx(rng, k1, k4)
    n1g[k1:, k3:] = scale * _cplx(rng, k2, k4)
    n1pg = np.zeros((t, s), dtype=complex)
    n1pg[:k3, :k1] = adjoint(n1g[:k1, :k3])
    n1pg[k3:, :k1] = scale * _cplx(rng, k4, k1)
    n1pg[k3:, k1:] = adjoint(n1g[k1:, k3:])
    a, b = dec.h1_basis, dec.h2_basis
    n1 = np.zeros((order + 1, s, t), dtype=complex)
    n1p = np.zeros((order + 1, t, s), dtype=complex)
    n1[0] = a @ n1g @ adjoint(b)
    n1p[0] = b @ n1pg @ adjoint(a)
    for j in range(1, order + 1):
        n1[j] = scale * _cplx(rng, s, t)
        n1p[j] = scale * _cplx(rng, t, s)
    return GaussFactors(n1, n1p, sign=sign)
