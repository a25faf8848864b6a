"""Block decompositions, Schur-complement inversion and Gauss transformations.

A law on ``H1 (+) H2`` (first ``split`` coordinates form ``H1``) is rotated
into the four-block coordinates ``G1 (+) G2 (+) G3 (+) G4`` where ``G1``/``G2``
are range and nullspace of the ``H1`` diagonal block of ``M(0)`` and
``G3``/``G4`` those of the ``H2`` block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import block_diag

from .errors import (CompatibilityViolated, DegenerateBlock, RangeChanged, SingularBlock,
                     StructureViolation)
from .linalg import (DEFAULT_RANK_TOL, adjoint, hermitian_part, max_principal_angle, min_eig,
                     opnorm, range_basis)
from .mlaw.law import MaterialLaw, cauchy_product, multiply, multiply_arrays, series_inverse
from .mlaw.limits import joint_series_limit
from .mlaw.positivity import PositivityCertificate, certify, check_zero_order


def _pad(c, n):
    """Coefficient stack with exactly ``n`` entries (zero-padded or cut)."""
    out = np.zeros((n,) + c.shape[1:], dtype=complex)
    m = min(n, c.shape[0])
    out[:m] = c[:m]
    return out


def reduced_radius(eps, sup_bound, c, d):
    """Radius on which the Schur-complement Neumann series converge.

    ``min{eps/4, c eps^2 / (16 S), d / (2 (4S/eps + 32 S^2 / (c eps^2)))}``.
    The second term keeps ``Re B22(z) >= c/2`` and the third keeps the
    perturbation of ``M11^(0)`` below ``d/2``. Infinite ``c`` or ``d`` mean
    the corresponding block is empty.
    """
    s = sup_bound
    t1 = eps / 4
    t2 = c * eps ** 2 / (16 * s) if np.isfinite(c) else np.inf
    coupling = 32 * s ** 2 / (c * eps ** 2) if np.isfinite(c) else 0.0
    t3 = d / (2 * (4 * s / eps + coupling)) if np.isfinite(d) else np.inf
    return float(min(t1, t2, t3))


# -- four-block form ---------------------------------------------------------

@dataclass
class BlockDecomposition:
    """Orthonormal bases of ``G1 .. G4`` for a split ``H1 (+) H2``.

    ``g1``/``g2`` live in ``C^split``, ``g3``/``g4`` in ``C^(dim - split)``.
    ``d`` is the definiteness constant of ``M(0)`` on ``G1 (+) G3`` and
    ``c_prime`` that of ``Re M'(0)`` on the nullspace of ``M(0)``.
    """

    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    g4: np.ndarray
    split: int
    rank_tol: float
    d: float = np.inf
    c_prime: float = np.inf

    @property
    def sizes(self):
        return tuple(g.shape[1] for g in (self.g1, self.g2, self.g3, self.g4))

    @property
    def dim(self):
        return self.g1.shape[0] + self.g3.shape[0]

    @property
    def h1_basis(self):
        return np.hstack([self.g1, self.g2])

    @property
    def h2_basis(self):
        return np.hstack([self.g3, self.g4])

    @property
    def unitary(self):
        """Columns ``[G1 G2 G3 G4]`` embedded in ``H1 (+) H2``."""
        return block_diag(self.h1_basis, self.h2_basis).astype(complex)

    def slices(self):
        k = np.cumsum((0,) + self.sizes)
        return [slice(int(k[i]), int(k[i + 1])) for i in range(4)]

    def to_g(self, x):
        """Matrix or law in G-coordinates."""
        u = self.unitary
        if isinstance(x, MaterialLaw):
            return x.conjugate_by(u)
        return adjoint(u) @ x @ u

    def from_g(self, x):
        u = self.unitary
        if isinstance(x, MaterialLaw):
            return x.conjugate_by(adjoint(u))
        return u @ x @ adjoint(u)

    def block(self, x_g, i, j):
        """Block ``(i, j)`` (1-based) of a matrix given in G-coordinates."""
        s = self.slices()
        return x_g[..., s[i - 1], s[j - 1]]


def _split_psd(h, thr):
    w, v = np.linalg.eigh(hermitian_part(h)) if h.size else (np.zeros(0), np.zeros((0, 0)))
    big = np.abs(w) > thr
    return v[:, big].astype(complex), v[:, ~big].astype(complex)


def four_block(m, split, rank_tol=DEFAULT_RANK_TOL, tol=1e-10):
    """Four-block decomposition of a law with selfadjoint nonnegative ``M(0)``.

    Raises :class:`StructureViolation` if ``M(0)`` has a nonzero block
    touching ``G2`` or ``G4``.
    """
    if not 0 <= split <= m.dim:
        raise ValueError(f"split {split} outside 0..{m.dim}")
    chk = check_zero_order(m, tol=tol, rank_tol=rank_tol)
    m0 = m.coeffs[0]
    thr = chk.rank_threshold
    g1, g2 = _split_psd(m0[:split, :split], thr)
    g3, g4 = _split_psd(m0[split:, split:], thr)
    if split == 0:
        g1, g2 = np.zeros((0, 0), complex), np.zeros((0, 0), complex)
    if split == m.dim:
        g3, g4 = np.zeros((0, 0), complex), np.zeros((0, 0), complex)
    dec = BlockDecomposition(g1, g2, g3, g4, split, rank_tol, c_prime=chk.c_prime)
    m0g = dec.to_g(m0)
    lim = tol + 10 * np.sqrt(thr * max(opnorm(m0), 1.0))
    for i in range(1, 5):
        for j in range(1, 5):
            if (i in (2, 4) or j in (2, 4)):
                n = opnorm(dec.block(m0g, i, j))
                if n > lim:
                    raise StructureViolation(
                        f"M(0) block ({i},{j}) has norm {n:.3e}; expected 0", block=(i, j), norm=n)
    s = dec.slices()
    idx = np.r_[np.arange(s[0].start, s[0].stop), np.arange(s[2].start, s[2].stop)]
    dec.d = min_eig(m0g[np.ix_(idx, idx)])
    return dec


# -- Schur-complement inverses -----------------------------------------------

def _check_block_zero(m0, k, scale, tol):
    for name, blk in (("(1,2)", m0[:k, k:]), ("(2,1)", m0[k:, :k]), ("(2,2)", m0[k:, k:])):
        n = opnorm(blk)
        if n > tol * scale:
            raise StructureViolation(f"zeroth-order block {name} has norm {n:.3e}; expected 0",
                                     block=name, norm=n)


def _assemble(b11, b12, b21, b22):
    top = np.concatenate([b11, b12], axis=2)
    bot = np.concatenate([b21, b22], axis=2)
    return np.concatenate([top, bot], axis=1)


def invert_regular(m, split=None, order=None, tol=1e-10, rank_tol=DEFAULT_RANK_TOL):
    """Laurent series of ``M(z)^-1`` for ``M = diag(A, 0) + z B(z)``.

    Parameters
    ----------
    m : MaterialLaw
        Pole-free law whose zeroth coefficient vanishes outside the leading
        ``split x split`` block ``A`` (selfadjoint, ``A >= d > 0``), and with
        ``Re B22(0) >= c > 0``. The stored polynomial is treated as exact.
    split : int, optional
        Size of the ``A`` block; defaults to the numerical rank of ``M(0)``.
    order : int, optional
        Truncation order of the result (default: that of ``m``).

    Returns
    -------
    MaterialLaw
        Inverse with pole ``diag(0, B22(0)^-1)`` on the reduced disc
        ``B(0, eps')``; ``meta`` records ``eps_prime``, ``c`` and ``d``.
    """
    if m.has_pole:
        raise ValueError("invert_regular needs a pole-free law")
    order = m.order if order is None else order
    W = order + 2
    c = _pad(m.coeffs, W + 2)
    m0 = c[0]
    scale = max(opnorm(m0), 1.0)
    if split is None:
        split = int(np.sum(np.linalg.svd(m0, compute_uv=False) > rank_tol * scale)) if m0.size else 0
    k = split
    _check_block_zero(m0, k, scale, max(tol, rank_tol))
    a0 = m0[:k, :k]
    if opnorm(a0 - adjoint(a0)) > tol * scale:
        raise StructureViolation("leading block of M(0) is not selfadjoint", block="(1,1)")
    b = c[1:]
    b11, b12, b21, b22 = b[:, :k, :k], b[:, :k, k:], b[:, k:, :k], b[:, k:, k:]
    d = min_eig(a0)
    cc = min_eig(b22[0])
    if d <= tol:
        raise DegenerateBlock(f"M11(0) has definiteness {d:.3e} <= {tol:.1e}")
    if cc <= tol:
        raise DegenerateBlock(f"Re M22'(0) has definiteness {cc:.3e} <= {tol:.1e}")

    b22inv = series_inverse(b22, W)
    x = cauchy_product(b12, b22inv, W)
    y = cauchy_product(b22inv, b21, W)
    s = np.zeros((W + 1, k, k), dtype=complex)
    s[0] = a0
    s[1:] = (b11[: W + 1] - cauchy_product(x, b21, W))[:W]
    m121 = series_inverse(s, W)
    i11 = m121
    i12 = -cauchy_product(m121, x, W)
    i21 = -cauchy_product(y, m121, W)
    i22 = cauchy_product(cauchy_product(y, m121, W), x, W)
    i22[:-1] += b22inv[1:]
    out = _assemble(i11, i12, i21, i22)[: order + 1]
    pole = np.zeros((m.dim, m.dim), dtype=complex)
    pole[k:, k:] = b22inv[0]
    eps_p = reduced_radius(m.eps, m.sup_bound, cc, d)
    return MaterialLaw(out, eps_p, pole=pole,
                       meta={"eps_prime": eps_p, "c": cc, "d": d, "split": k, "source_eps": m.eps})


def invert_degenerate_hat(m, split, order=None, tol=1e-10):
    """Pole-free inverse of ``[[A + z M11(z), M12(z)], [M21(z), z^-1 M22(z)]]``.

    ``A`` must be selfadjoint with ``A >= d > 0`` and ``Re M22(0) >= c > 0``;
    the pole of ``m`` must be confined to the trailing block. The stored
    Laurent polynomial is treated as exact.
    """
    order = m.order if order is None else order
    W = order + 1
    k = split
    pole = m.coeff(-1)
    scale = max(opnorm(pole), opnorm(m.coeffs[0]), 1.0)
    for name, blk in (("(1,1)", pole[:k, :k]), ("(1,2)", pole[:k, k:]), ("(2,1)", pole[k:, :k])):
        n = opnorm(blk)
        if n > tol * scale:
            raise StructureViolation(f"pole block {name} has norm {n:.3e}; expected 0",
                                     block=name, norm=n)
    c = _pad(m.coeffs, W + 2)
    n11, n12, n21, n22 = c[:, :k, :k], c[:, :k, k:], c[:, k:, :k], c[:, k:, k:]
    p = np.zeros((W + 2,) + n22.shape[1:], dtype=complex)
    p[0] = pole[k:, k:]
    p[1:] = n22[: W + 1]
    d = min_eig(n11[0])
    cc = min_eig(p[0])
    if d <= tol:
        raise DegenerateBlock(f"M11(0) has definiteness {d:.3e} <= {tol:.1e}")
    if cc <= tol:
        raise DegenerateBlock(f"Re of the pole block has definiteness {cc:.3e} <= {tol:.1e}")

    pinv = series_inverse(p, W)
    x = cauchy_product(n12, pinv, W)
    y = cauchy_product(pinv, n21, W)
    t = n11[: W + 1].copy()
    t[1:] -= cauchy_product(x, n21, W)[:W]
    h121 = series_inverse(t, W)
    i11 = h121
    i12 = np.zeros_like(x)
    i12[1:] = -cauchy_product(h121, x, W)[:W]
    i21 = np.zeros_like(y)
    i21[1:] = -cauchy_product(y, h121, W)[:W]
    i22 = np.zeros_like(pinv)
    i22[2:] = cauchy_product(cauchy_product(y, h121, W), x, W)[: W - 1]
    i22[1:] += pinv[:W]
    out = _assemble(i11, i12, i21, i22)[: order + 1]
    # the radius bound uses the analytic blocks, with z M22 in place of the pole row
    hat = c[: W + 1].copy()
    hat[:, k:, k:] = p[: W + 1]
    s_hat = MaterialLaw(hat, m.eps).sup_bound
    eps_pp = reduced_radius(m.eps, s_hat, cc, d)
    return MaterialLaw(out, eps_pp, meta={"eps_double_prime": eps_pp, "c": cc, "d": d,
                                          "split": k, "source_eps": m.eps})


# -- Gauss transformations ---------------------------------------------------

@dataclass
class GaussFactors:
    """Off-diagonal factors of ``(1, s N1; 0, 1) M (1, 0; s N1', 1)``.

    ``n1`` has shape ``(K+1, split, dim-split)`` and ``n1p`` shape
    ``(K+1, dim-split, split)``; ``sign`` is ``s``.
    """

    n1: np.ndarray
    n1p: np.ndarray
    sign: int = 1
    eps: float = np.inf

    @property
    def split(self):
        return self.n1.shape[1]

    @property
    def dim(self):
        return self.n1.shape[1] + self.n1.shape[2]

    @classmethod
    def identity(cls, dim, split, order=0):
        return cls(np.zeros((order + 1, split, dim - split), complex),
                   np.zeros((order + 1, dim - split, split), complex))

    def _law(self, upper, order, eps):
        s = self.split
        c = np.zeros((order + 1, self.dim, self.dim), dtype=complex)
        c[0] = np.eye(self.dim)
        if upper:
            c[:, :s, s:] += self.sign * _pad(self.n1, order + 1)
        else:
            c[:, s:, :s] += self.sign * _pad(self.n1p, order + 1)
        return MaterialLaw(c, eps)

    def left(self, order, eps):
        return self._law(True, order, eps)

    def right(self, order, eps):
        return self._law(False, order, eps)

    def evaluate_n1(self, z):
        return np.einsum("k,kij->ij", z ** np.arange(self.n1.shape[0]), self.n1)

    def ineq_holds(self, zs):
        """Check ``||(1 B; 0 1)^-1|| <= sqrt(1 + ||B|| + ||B||^2)`` with ``B = N1(z)``."""
        s = self.split
        for z in np.atleast_1d(zs):
            bz = self.sign * self.evaluate_n1(complex(z))
            t = np.eye(self.dim, dtype=complex)
            t[:s, s:] = bz
            nb = opnorm(bz)
            if opnorm(np.linalg.inv(t)) > np.sqrt(1 + nb + nb ** 2) * (1 + 1e-12):
                return False
        return True


class GaussResult(NamedTuple):
    law: MaterialLaw
    d_prime: float
    c_prime: float


def check_factor_structure(factors, dec, tol=1e-8):
    """Zeroth-order pattern required of Gauss factors, in G-coordinates.

    Block ``(G2, G3)`` of ``N1(0)`` and ``(G3, G2)`` of ``N1'(0)`` vanish, and
    ``N1'(0)`` carries the adjoints of the ``(G1, G3)`` and ``(G2, G4)``
    blocks of ``N1(0)``. Returns the G-coordinate matrices.
    """
    n1g = adjoint(dec.h1_basis) @ factors.n1[0] @ dec.h2_basis
    n1pg = adjoint(dec.h2_basis) @ factors.n1p[0] @ dec.h1_basis
    k1, _, k3, _ = dec.sizes
    scale = max(1.0, opnorm(n1g), opnorm(n1pg))
    checks = (
        ("N1(2,3)", n1g[k1:, :k3]),
        ("N1'(3,2)", n1pg[:k3, k1:]),
        ("N1'(3,1)-N1(1,3)*", n1pg[:k3, :k1] - adjoint(n1g[:k1, :k3])),
        ("N1'(4,2)-N1(2,4)*", n1pg[k3:, k1:] - adjoint(n1g[k1:, k3:])),
    )
    for name, blk in checks:
        n = opnorm(blk)
        if n > tol * scale:
            raise StructureViolation(f"Gauss factor block {name} has norm {n:.3e}",
                                     block=name, norm=n)
    return n1g, n1pg


def gauss_transform(m, factors, dec=None, rank_tol=DEFAULT_RANK_TOL, struct_tol=1e-8,
                    angle_tol=1e-8):
    """Apply a Gauss transformation and transport the positivity constants.

    Returns ``(law, d_prime, c_prime)`` with
    ``d' = d / (1 + |N13| + |N13|^2)`` and ``c' = c / (1 + |N24| + |N24|^2)``.
    Raises :class:`RangeChanged` if ``R(M~(0))`` differs from ``R(M(0))`` by a
    principal angle above ``angle_tol``.
    """
    if factors.dim != m.dim:
        raise ValueError("factor dimensions do not match the law")
    dec = four_block(m, factors.split, rank_tol) if dec is None else dec
    n1g, _ = check_factor_structure(factors, dec, struct_tol)
    K = m.order
    eps = min(m.eps, factors.eps)
    mt = multiply(multiply(factors.left(K, eps), m, K), factors.right(K, eps), K)
    k1, _, k3, _ = dec.sizes
    a = opnorm(n1g[:k1, :k3])
    b = opnorm(n1g[k1:, k3:])
    d_p = dec.d / (1 + a + a * a)
    c_p = dec.c_prime / (1 + b + b * b)
    angle = max_principal_angle(range_basis(mt.coeffs[0], rank_tol),
                                range_basis(m.coeffs[0], rank_tol))
    if angle > angle_tol:
        raise RangeChanged(f"range of M(0) moved by principal angle {angle:.3e}")
    mt.meta.update({"range_angle": angle, "d_prime": d_p, "c_prime": c_p})
    return GaussResult(mt, d_p, c_p)


def congruence_residual(m, mt, factors):
    """``||Re M~(0) - T^* Re M(0) T||`` with ``T`` the right factor at 0."""
    t = _right0(factors)
    lhs = hermitian_part(mt.coeffs[0])
    rhs = adjoint(t) @ hermitian_part(m.coeffs[0]) @ t
    return opnorm(lhs - rhs)


def _right0(factors):
    s = factors.split
    t = np.eye(factors.dim, dtype=complex)
    t[s:, :s] = factors.sign * factors.n1p[0]
    return t


def check_compatibility(m, dec, rank_tol=DEFAULT_RANK_TOL):
    """Residual of ``M'24 (M'44)^-1 = ((M'44)^-1 M'42)^*`` in G-coordinates."""
    k4 = dec.sizes[3]
    if k4 == 0:
        return 0.0
    m1 = dec.to_g(m.coeff(1))
    m44 = dec.block(m1, 4, 4)
    smin = np.linalg.svd(m44, compute_uv=False)[-1]
    if smin <= rank_tol * max(1.0, opnorm(m1)):
        raise SingularBlock(f"M'(0) is singular on G4 (sigma_min = {smin:.3e})")
    inv44 = np.linalg.inv(m44)
    lhs = dec.block(m1, 2, 4) @ inv44
    rhs = adjoint(inv44 @ dec.block(m1, 4, 2))
    return opnorm(lhs - rhs)


# -- coupled sequences -------------------------------------------------------

@dataclass
class DiagonalizationResult:
    factors: GaussFactors
    law: MaterialLaw
    certificate: PositivityCertificate
    target: MaterialLaw
    d_prime: float
    c_prime: float
    limit_status: dict

    def __iter__(self):
        yield from (self.factors.n1, self.factors.n1p, self.law, self.certificate)


def schur_factors(m, split, order=None, rank_tol=DEFAULT_RANK_TOL, pole_tol=1e-8):
    """``(N1, N1')`` with ``N1 = M12 M22^-1`` and ``N1' = M22^-1 M21``.

    ``M22^-1`` is inverted in the G3/G4 coordinates of ``H2``; its pole is
    annihilated by ``M12``/``M21`` at zeroth order, so the factors are
    analytic. Returns coefficient stacks and the reduced radius.
    """
    order = m.order if order is None else order
    dec = four_block(m, split, rank_tol)
    v = dec.h2_basis
    s = split
    m22 = MaterialLaw(m.coeffs[:, s:, s:], m.eps, sup_bound=m.sup_bound)
    inv_g = invert_regular(m22.conjugate_by(v), split=dec.sizes[2], order=order)
    inv = inv_g.conjugate_by(adjoint(v))
    la = (inv.laurent_array(), -1)
    scale = max(opnorm(inv.coeff(-1)), 1.0) * max(opnorm(m.coeffs[0]), 1.0)
    pole1, n1 = multiply_arrays((m.coeffs[:, :s, s:], 0), la, order)
    pole2, n1p = multiply_arrays(la, (m.coeffs[:, s:, :s], 0), order)
    for name, p in (("N1", pole1), ("N1'", pole2)):
        if p is not None and opnorm(p) > pole_tol * scale:
            raise StructureViolation(f"{name} has a z^-1 term of norm {opnorm(p):.3e}",
                                     block=name, norm=opnorm(p))
    return n1, n1p, inv_g.eps


def _embed(n1, n1p, eps):
    s, t = n1.shape[1], n1.shape[2]
    c = np.zeros((n1.shape[0], s + t, s + t), dtype=complex)
    c[:, :s, s:] = n1
    c[:, s:, :s] = n1p
    return MaterialLaw(c, eps)


def diagonalize_thm_final(laws, split, target=None, probe_tol=1e-8, allow_subsequence=True,
                          compat_tol=1e-8, angle_tol=1e-8, rank_tol=DEFAULT_RANK_TOL,
                          order=None, **limit_kwargs):
    """Block-diagonalize a limit law with the limits of the Schur factors.

    Each ``laws[n]`` is split as ``H1 (+) H2`` and checked for the four-block
    form, a common range of ``M_n(0)`` and the compatibility condition. The
    factor sequences ``N1_n = M12,n M22,n^-1`` and ``N1'_n = M22,n^-1 M21,n``
    and the laws themselves share one limit subsequence. The transformation
    with sign ``-1`` is applied to ``target`` (default: the limit of ``laws``)
    and the result is certified.
    """
    laws = list(laws)
    ref = range_basis(laws[0].coeffs[0], rank_tol)
    for i, m in enumerate(laws):
        dec = four_block(m, split, rank_tol)
        ang = max_principal_angle(range_basis(m.coeffs[0], rank_tol), ref)
        if ang > angle_tol:
            raise RangeChanged(f"R(M_n(0)) differs at index {i} (angle {ang:.3e})")
        res = check_compatibility(m, dec, rank_tol)
        if res > compat_tol * max(1.0, opnorm(m.coeff(1))):
            raise CompatibilityViolated(f"compatibility residual {res:.3e} at index {i}",
                                        residual=res)
    order = min(m.order for m in laws) if order is None else order
    embedded = []
    for m in laws:
        n1, n1p, eps_p = schur_factors(m, split, order, rank_tol)
        embedded.append(_embed(n1, n1p, eps_p))
    e_lim, m_lim = joint_series_limit([embedded, laws], probe_tol,
                                      allow_subsequence=allow_subsequence, **limit_kwargs)
    target = m_lim if target is None else target
    factors = GaussFactors(e_lim.coeffs[:, :split, split:], e_lim.coeffs[:, split:, :split],
                           sign=-1, eps=e_lim.eps)
    gr = gauss_transform(target, factors, rank_tol=rank_tol, angle_tol=angle_tol)
    chk = check_zero_order(gr.law, rank_tol=rank_tol)
    c_use = min(gr.c_prime, chk.c_prime)
    d_use = min(gr.d_prime, chk.d)
    cert = certify(gr.law, c=c_use if np.isfinite(c_use) else None,
                   d=d_use if np.isfinite(d_use) else None, check=chk)
    return DiagonalizationResult(factors, gr.law, cert, target, gr.d_prime, gr.c_prime,
                                 dict(e_lim.meta.get("limit", {})))
