"""Causal frequency-domain solver for ``(d/dt M(d/dt^-1) + A) u = f``.

The exponentially weighted problem is transformed with the FFT on a
uniform periodic grid. The time derivative is represented by the symbol of
the trapezoidal rule, ``s = (2/dt) i tan(w dt / 2) + nu``: it is exactly
causal up to periodic wrap-around, second-order accurate, and keeps
``Re s = nu`` so that the norm bound ``1/c`` holds frequency by frequency.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import GridTooCoarse, InvalidProblem, SingularFrequency
from ..mlaw.law import MaterialLaw
from ..mlaw.positivity import certify

COND_LIMIT = 1e12
DENSE_SVD_MAX = 64
BATCH_BINS = 256
SPARSE_MIN_DIM = 400


class SparseLaw:
    """Polynomial law ``pole/z + sum_k z^k M_k`` with sparse coefficients.

    Used for large spatial discretizations where dense coefficient stacks
    would be wasteful. ``eps`` may be infinite (the law is a polynomial).
    """

    def __init__(self, coeffs, eps=np.inf, pole=None):
        self.coeffs = [sp.csc_matrix(c, dtype=complex) for c in coeffs]
        n = {c.shape for c in self.coeffs}
        if len(n) != 1 or self.coeffs[0].shape[0] != self.coeffs[0].shape[1]:
            raise ValueError("coefficients must be square with equal shapes")
        self.eps = float(eps)
        self.pole = None if pole is None else sp.csc_matrix(pole, dtype=complex)

    @property
    def dim(self):
        return self.coeffs[0].shape[0]

    @property
    def order(self):
        return len(self.coeffs) - 1

    @property
    def is_real(self):
        mats = self.coeffs + ([self.pole] if self.pole is not None else [])
        return all(not np.any(c.data.imag) for c in mats)

    def evaluate(self, z):
        if abs(z) >= self.eps:
            raise ValueError(f"|z| = {abs(z):g} outside B(0, {self.eps:g})")
        out = self.coeffs[-1].copy()
        for c in self.coeffs[-2::-1]:
            out = out * z + c
        if self.pole is not None:
            out = out + self.pole / z
        return out.tocsc()


def _is_real_law(m):
    if isinstance(m, SparseLaw):
        return m.is_real
    return not np.any(m.laurent_array().imag)


@dataclass
class EvolutionProblem:
    """Data of ``(d/dt M(d/dt^-1) + A) u = f`` on a uniform time grid.

    Parameters
    ----------
    A : array_like or sparse matrix
        Skew-Hermitian spatial operator.
    M : MaterialLaw or SparseLaw
        Material law.
    f : ndarray, shape (num_samples, dim)
        Forcing samples on ``linspace(t0, t1, num_samples)``.
    nu : float, optional
        Exponential weight. Defaults to ``max(2/eps, 1.25/(2 r))`` with ``r``
        from the certificate of ``M``.
    certificate : PositivityCertificate, optional
        Used for the default ``nu`` and the admissibility check; computed
        with :func:`certify` for dense laws when omitted.
    """

    A: object
    M: object
    f: np.ndarray
    t0: float
    t1: float
    nu: float | None = None
    certificate: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.f)
        if f.ndim == 1:
            f = f[:, None]
        self.f = f
        n = self.M.dim
        if f.shape[1] != n:
            raise InvalidProblem(f"forcing has {f.shape[1]} components, law has dimension {n}")
        if f.shape[0] < 3 or f.shape[0] % 2 == 0:
            raise InvalidProblem("num_samples must be odd and at least 3")
        if not self.t1 > self.t0:
            raise InvalidProblem("need t1 > t0")
        a = self.A
        if sp.issparse(a):
            a = a.tocsr().astype(complex)
            skew = abs(a + a.conj().T).max() if a.nnz else 0.0
            scale = abs(a).max() if a.nnz else 0.0
        else:
            a = np.asarray(a, dtype=complex)
            if a.ndim == 0:
                a = a.reshape(1, 1)
            skew = float(np.max(np.abs(a + a.conj().T), initial=0.0))
            scale = float(np.max(np.abs(a), initial=0.0))
        if a.shape != (n, n):
            raise InvalidProblem(f"A has shape {a.shape}, expected {(n, n)}")
        if skew > 1e-12 * scale:
            raise InvalidProblem(f"A is not skew-Hermitian (||A + A*|| = {skew:.3e})")
        self.A = a
        if self.certificate is None and self.nu is None:
            if not isinstance(self.M, MaterialLaw):
                raise InvalidProblem("nu must be given for sparse laws")
            self.certificate = certify(self.M)
        if self.nu is None:
            self.nu = default_nu(self.M.eps, self.certificate.r)
        self.nu = float(self.nu)
        if not self.nu > 0:
            raise InvalidProblem("nu must be positive")
        if self.certificate is not None and self.nu <= 1 / (2 * self.certificate.r):
            raise InvalidProblem(f"nu = {self.nu:g} must exceed 1/(2r) = "
                                 f"{1 / (2 * self.certificate.r):g}")
        if 1.0 / self.nu >= self.M.eps:
            raise InvalidProblem(f"1/nu = {1 / self.nu:g} must lie inside B(0, eps={self.M.eps:g})")
        if self.nu * (self.t1 - self.t0) > 700:
            raise InvalidProblem("nu * (t1 - t0) too large for the exponential weight")

    @property
    def num_samples(self):
        return self.f.shape[0]

    @property
    def dim(self):
        return self.f.shape[1]

    @property
    def t(self):
        return np.linspace(self.t0, self.t1, self.num_samples)

    @property
    def dt(self):
        return (self.t1 - self.t0) / (self.num_samples - 1)

    def with_forcing(self, f):
        return EvolutionProblem(self.A, self.M, f, self.t0, self.t1, self.nu, self.certificate,
                                dict(self.meta))

    @classmethod
    def from_function(cls, A, M, forcing, t0, t1, num_samples, **kw):
        """Sample ``forcing(t) -> (dim,)`` on the grid."""
        t = np.linspace(t0, t1, num_samples)
        f = np.array([np.atleast_1d(forcing(x)) for x in t])
        return cls(A, M, f, t0, t1, **kw)


def default_nu(eps, r):
    """``max(2/eps, 1.25/(2r))``."""
    return max(2.0 / eps, 1.25 / (2.0 * r))


@dataclass
class SolutionReport:
    """Solution samples plus diagnostics of one solve."""

    t: np.ndarray
    u: np.ndarray
    nu: float
    op_norm_est: float
    norm_ratio: float
    frequency_conditioning: float
    frequency_residual: float
    wrap_energy: float
    causal_residual: float = float("nan")
    symbol: str = "causal"


def weighted_norm(x, t, nu):
    """``(sum_j |x_j|^2 exp(-2 nu t_j) dt)^(1/2)`` on a uniform grid."""
    x = np.asarray(x)
    if x.ndim == 1:
        x = x[:, None]
    if len(t) < 2:
        return 0.0
    dt = t[1] - t[0]
    w = np.exp(-2 * nu * t)
    return float(np.sqrt(np.sum(np.abs(x) ** 2 * w[:, None]) * dt))


def time_symbol(nt, dt, nu, kind="causal"):
    """FFT-ordered frequencies and weighted derivative symbols ``s_k``."""
    omega = 2 * np.pi * np.fft.fftfreq(nt, dt)
    d = (2.0 / dt) * 1j * np.tan(omega * dt / 2)
    if kind == "causal":
        return omega, d + nu
    if kind == "anticausal":
        return omega, -d + nu
    raise ValueError(f"unknown symbol {kind!r}")


def _threads(threads):
    if threads is not None:
        return max(1, int(threads))
    try:
        return max(1, int(os.environ.get("EVH_THREADS", "1")))
    except ValueError:
        return 1


def _dense_solve(k, g, want_svd):
    lu, piv = sla.lu_factor(k, check_finite=False)
    x = sla.lu_solve((lu, piv), g, check_finite=False)
    r = g - k @ x
    x = x + sla.lu_solve((lu, piv), r, check_finite=False)
    anorm = np.linalg.norm(k, 1)
    rcond, _ = sla.lapack.zgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    inv_norm = np.nan
    if want_svd:
        sv = np.linalg.svd(k, compute_uv=False)
        inv_norm = np.inf if sv[-1] == 0 else 1.0 / sv[-1]
    return x, cond, inv_norm


def _sparse_solve(k, g):
    lu = spla.splu(k.tocsc())
    x = lu.solve(g)
    r = g - k @ x
    x = x + lu.solve(r)
    return x, np.nan, np.nan


def solve(p, symbol="causal", check_grid=True, check_ends=True, threads=None, end_tol=1e-10,
          coarse_tol=1e-6, wrap_tol=1e-6):
    """Solve an :class:`EvolutionProblem`.

    Raises :class:`SingularFrequency` if the per-frequency system has a
    condition number above 1e12 and :class:`GridTooCoarse` if the weighted
    forcing carries more than ``coarse_tol`` of its energy in the highest
    frequency pair.
    """
    t = p.t
    nt, n, dt, nu = p.num_samples, p.dim, p.dt, p.nu
    w = np.exp(-nu * (t - p.t0))
    g = w[:, None] * p.f
    gmax = np.max(np.abs(g))
    if check_ends and gmax > 0 and max(np.max(np.abs(g[0])), np.max(np.abs(g[-1]))) > end_tol * gmax:
        raise InvalidProblem("weighted forcing does not decay at the grid ends")
    ghat = np.fft.fft(g, axis=0)
    energy = np.sum(np.abs(ghat) ** 2)
    top = (nt - 1) // 2
    if check_grid and energy > 0:
        frac = (np.sum(np.abs(ghat[top]) ** 2) + np.sum(np.abs(ghat[-top]) ** 2)) / energy
        if frac > coarse_tol:
            raise GridTooCoarse(f"{frac:.2e} of the forcing energy sits at the highest frequency")
    omega, s = time_symbol(nt, dt, nu, symbol)

    sparse = sp.issparse(p.A) or not isinstance(p.M, MaterialLaw) or n >= SPARSE_MIN_DIM
    a = p.A
    if sparse:
        a = sp.csc_matrix(a)
    elif sp.issparse(a):
        a = a.toarray()
    real = (np.isrealobj(p.f) or not np.any(np.imag(p.f))) and _is_real_law(p.M) and \
        not (np.any(a.imag) if not sp.issparse(a) else np.any(a.data.imag))
    bins = np.arange(top + 1) if real else np.arange(nt)
    want_svd = (not sparse) and n <= DENSE_SVD_MAX

    uhat = np.zeros_like(ghat)
    cond = np.zeros(nt)
    inv_norm = np.full(nt, np.nan)
    resid = np.zeros(nt)

    def work(chunk):
        for k in chunk:
            z = 1.0 / s[k]
            mz = p.M.evaluate(z)
            kk = (mz * s[k] + a) if sparse else (s[k] * mz + a)
            try:
                if sparse:
                    x, c, iv = _sparse_solve(kk, ghat[k])
                else:
                    x, c, iv = _dense_solve(kk, ghat[k], want_svd)
            except (RuntimeError, np.linalg.LinAlgError, sla.LinAlgError) as exc:
                raise SingularFrequency(f"singular system at frequency {omega[k]:.4g}: {exc}",
                                        frequency=omega[k], condition_number=np.inf) from None
            if not np.all(np.isfinite(x)):
                raise SingularFrequency(f"non-finite solution at frequency {omega[k]:.4g}",
                                        frequency=omega[k], condition_number=np.inf)
            uhat[k] = x
            cond[k] = c
            inv_norm[k] = iv
            gn = np.linalg.norm(ghat[k])
            resid[k] = np.linalg.norm(kk @ x - ghat[k]) / gn if gn > 0 else 0.0

    def work_batched(chunk):
        kk = s[chunk, None, None] * p.M.evaluate_many(1.0 / s[chunk]) + a[None]
        sv = np.linalg.svd(kk, compute_uv=False)
        smin = sv[:, -1]
        bad = np.flatnonzero(smin <= sv[:, 0] / COND_LIMIT)
        if bad.size:
            k = chunk[bad[0]]
            c = np.inf if smin[bad[0]] == 0 else sv[bad[0], 0] / smin[bad[0]]
            raise SingularFrequency(f"condition number {c:.3e} at frequency {omega[k]:.4g}",
                                    frequency=omega[k], condition_number=c)
        rhs = ghat[chunk][..., None]
        x = np.linalg.solve(kk, rhs)
        x = x + np.linalg.solve(kk, rhs - kk @ x)
        uhat[chunk] = x[..., 0]
        cond[chunk] = sv[:, 0] / smin
        inv_norm[chunk] = 1.0 / smin
        gn = np.linalg.norm(rhs[..., 0], axis=1)
        rn = np.linalg.norm((kk @ x - rhs)[..., 0], axis=1)
        resid[chunk] = np.where(gn > 0, rn / np.where(gn > 0, gn, 1.0), 0.0)

    nthreads = _threads(threads)
    if want_svd:
        # small dense systems: stacked LAPACK calls beat a Python loop over bins
        work, nthreads = work_batched, 1
        chunks = np.array_split(bins, max(1, len(bins) // BATCH_BINS))
    else:
        chunks = np.array_split(bins, max(1, min(nthreads * 4, len(bins))))
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            list(ex.map(work, chunks))
    else:
        for c in chunks:
            work(c)

    worst = np.nanmax(cond[bins]) if np.any(np.isfinite(cond[bins])) else np.nan
    if np.isfinite(worst) and worst > COND_LIMIT:
        k = bins[int(np.nanargmax(cond[bins]))]
        raise SingularFrequency(f"condition number {worst:.3e} at frequency {omega[k]:.4g}",
                                frequency=omega[k], condition_number=worst)
    if real:
        neg = np.arange(1, top + 1)
        uhat[-neg] = np.conj(uhat[neg])
        inv_norm[-neg] = inv_norm[neg]
    v = np.fft.ifft(uhat, axis=0)
    if real:
        v = v.real
    u = v / w[:, None]

    tail = max(1, nt // 20)
    vnorm2 = np.sum(np.abs(v) ** 2)
    wrap = float(np.sum(np.abs(v[-tail:]) ** 2) / vnorm2) if vnorm2 > 0 else 0.0
    if wrap > wrap_tol:
        warnings.warn(f"wrap-around energy {wrap:.2e} exceeds {wrap_tol:.0e}; "
                      "extend the time window or increase nu", RuntimeWarning, stacklevel=2)
    fn = weighted_norm(p.f, t, nu)
    ratio = weighted_norm(u, t, nu) / fn if fn > 0 else 0.0
    op = float(np.nanmax(inv_norm)) if want_svd else ratio
    return SolutionReport(t, u, nu, op, ratio, float(worst), float(np.max(resid[bins])), wrap,
                          symbol=symbol)


def check_causality(p, a, symbol="causal", full=None, **kw):
    """Weighted norm on ``t < a`` of the change caused by cutting ``f`` at ``a``.

    Returned relative to the weighted norm of the full solution; it vanishes
    for a causal solution operator. ``full`` may pass an existing solve of
    ``p`` with the same symbol.
    """
    t = p.t
    if not p.t0 < a < p.t1:
        raise ValueError("a must lie inside the time grid")
    kw.setdefault("check_grid", False)
    if full is None:
        full = solve(p, symbol=symbol, **kw)
    elif full.symbol != symbol:
        raise ValueError("full was solved with a different symbol")
    cut = p.with_forcing(p.f * (t < a)[:, None])
    part = solve(cut, symbol=symbol, check_ends=False, **kw)
    mask = t < a
    den = weighted_norm(full.u, t, p.nu)
    if den == 0:
        return 0.0
    return weighted_norm((full.u - part.u)[mask], t[mask], p.nu) / den
