"""Zero-order structure checks and positivity certificates for material laws."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NotPSD, NotSelfadjoint, PrereqFailed
from ..linalg import DEFAULT_RANK_TOL, adjoint, hermitian_part, min_eig, opnorm


@dataclass
class ZeroOrderCheck:
    """Outcome of :func:`check_zero_order`.

    ``d`` is the smallest eigenvalue of ``M(0)`` on its range and
    ``c_prime`` the smallest eigenvalue of ``Re Q^* M'(0) Q`` on the
    nullspace. Both are ``inf`` when the corresponding space is trivial.
    """

    selfadjoint: bool
    psd: bool
    d: float
    c_prime: float
    range_basis: np.ndarray
    null_basis: np.ndarray
    eigenvalues: np.ndarray
    asymmetry: float
    rank_threshold: float


@dataclass(frozen=True)
class PositivityCertificate:
    """Constants certifying ``Re z^-1 M(z) >= c_out`` on ``B(r, r)``."""

    c: float
    d: float
    eps: float
    sup_bound: float
    nu1: float
    delta_hat: float
    r: float
    c_out: float

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("c", "d", "eps", "sup_bound", "nu1", "delta_hat", "r", "c_out")}


@dataclass
class PositivitySample:
    """Result of :func:`sample_positivity`; truthy iff every sample passed."""

    ok: bool
    min_value: float
    witness: complex | None = None
    num_samples: int = 0
    extra: dict = field(default_factory=dict)

    def __bool__(self):
        return bool(self.ok)


def check_zero_order(m, tol=1e-10, rank_tol=DEFAULT_RANK_TOL, raise_on_fail=True):
    """Test that ``M(0)`` is selfadjoint and nonnegative and extract constants.

    Parameters
    ----------
    m : MaterialLaw
        Pole-free law.
    tol : float
        Absolute tolerance for ``||M_0 - M_0^*||`` and for negative eigenvalues.
    rank_tol : float
        Relative eigenvalue threshold separating range from nullspace.
    raise_on_fail : bool
        Raise :class:`NotSelfadjoint` / :class:`NotPSD` instead of returning
        a failing record.
    """
    if m.has_pole:
        raise ValueError("check_zero_order needs a pole-free law")
    m0 = m.coeffs[0]
    asym = opnorm(m0 - adjoint(m0))
    selfadjoint = asym <= tol
    if not selfadjoint and raise_on_fail:
        raise NotSelfadjoint(f"||M0 - M0*|| = {asym:.3e} > {tol:.1e}", condition="selfadjoint")
    w, v = np.linalg.eigh(hermitian_part(m0))
    thr = rank_tol * max(opnorm(m0), 1.0) if m0.size else 0.0
    psd = not (w.size and w[0] < -max(tol, thr))
    if not psd and raise_on_fail:
        raise NotPSD(f"M0 has eigenvalue {w[0]:.3e} < 0", condition="psd")
    on_range = np.abs(w) > thr
    rb, nb = v[:, on_range], v[:, ~on_range]
    d = float(np.min(w[on_range])) if np.any(on_range) else np.inf
    m1 = m.coeff(1)
    c_prime = min_eig(adjoint(nb) @ m1 @ nb)
    return ZeroOrderCheck(selfadjoint, psd, d, c_prime, rb, nb, w, asym, thr)


def certify_constants(c, d, eps, sup_bound):
    """``(nu1, delta_hat, r)`` from the convergence-radius formulas."""
    s = sup_bound
    nu1 = (2 * c / 3 + (3 / c) * (s * 2 / eps) ** 2 + (2 / eps) * s) / d
    delta_hat = min((eps / 2) ** 2 * c / (6 * s), eps / 4)
    r = 1 / (2 * max(nu1, 1 / delta_hat))
    return nu1, delta_hat, r


def certify(m, c=None, d=None, check=None, tol=1e-10, rank_tol=DEFAULT_RANK_TOL):
    """Certify ``M`` as a (c/3)-material law on ``B(r, r)``.

    ``c`` and ``d`` default to the constants found by :func:`check_zero_order`
    (with ``c = d`` when the nullspace is trivial). Supplied constants must
    not exceed the measured ones, otherwise :class:`PrereqFailed` is raised.
    """
    if check is None:
        try:
            check = check_zero_order(m, tol=tol, rank_tol=rank_tol)
        except (NotSelfadjoint, NotPSD) as exc:
            raise PrereqFailed(f"zero-order check failed: {exc}", condition=exc.condition) from exc
    if not (check.selfadjoint and check.psd):
        raise PrereqFailed("zero-order check did not pass", condition="zero_order")
    if d is None:
        d = check.d if np.isfinite(check.d) else check.c_prime
    if c is None:
        c = check.c_prime if np.isfinite(check.c_prime) else d
    if not (np.isfinite(c) and np.isfinite(d)):
        raise PrereqFailed("law is zero; no positivity constants exist", condition="zero_order")
    if not (c > 0 and d > 0):
        raise PrereqFailed(f"need c > 0 and d > 0, got c={c:g}, d={d:g}", condition="constants")
    slack = 1e-9
    if d > check.d * (1 + slack) + slack:
        raise PrereqFailed(f"d = {d:g} exceeds measured {check.d:g}", condition="d")
    if c > check.c_prime * (1 + slack) + slack:
        raise PrereqFailed(f"c = {c:g} exceeds measured {check.c_prime:g}", condition="c")
    s = m.sup_bound
    nu1, delta_hat, r = certify_constants(c, d, m.eps, s)
    return PositivityCertificate(float(c), float(d), m.eps, s, nu1, delta_hat, r, c / 3)


def _split_min_eig(h, on, sep=1e3, iters=6):
    """Smallest eigenvalue of the Hermitian stack ``h`` with range indices ``on``.

    Where the range block dominates (its bottom eigenvalue exceeds ``sep``
    times the rest), the range is eliminated through the fixed point
    ``lam = min eig(h_nn - h_nr (h_rr - lam)^-1 h_rn)``, which stays
    accurate where a dense solve loses everything to the scale of ``h_rr``.
    Other samples use a dense solve.
    """
    h_rr = h[:, on][:, :, on]
    h_rn = h[:, on][:, :, ~on]
    h_nn = h[:, ~on][:, :, ~on]
    top = np.linalg.eigvalsh(h_rr)[:, 0]
    rest = np.linalg.norm(h_rn, ord=2, axis=(1, 2)) + np.linalg.norm(h_nn, ord=2, axis=(1, 2))
    split = top > sep * (rest + 1.0)
    out = np.empty(len(h))
    dense = ~split
    if dense.any():
        out[dense] = np.linalg.eigvalsh(h[dense])[:, 0]
    if split.any():
        h_rr, h_rn, h_nn = h_rr[split], h_rn[split], h_nn[split]
        h_nr = np.conj(np.swapaxes(h_rn, -1, -2))
        eye = np.eye(h_rr.shape[-1])
        lam = np.linalg.eigvalsh(h_nn)[:, 0]
        for _ in range(iters):
            shifted = h_rr - lam[:, None, None] * eye
            lam = np.linalg.eigvalsh(h_nn - h_nr @ np.linalg.solve(shifted, h_rn))[:, 0]
        out[split] = lam
    return out


def sample_positivity(m, cert, num_samples=10_000, rng_seed=0, tol=1e-10,
                      rank_tol=DEFAULT_RANK_TOL):
    """Check ``Re z^-1 M(z) >= c_out`` at random points of ``B(r, r)``.

    For pole-free laws the check runs in the eigenbasis of ``Re M(0)``.
    Eigenvalues below the rank threshold of :func:`check_zero_order` count
    as exact zeros, and the range block (of size ``~1/r``) is eliminated by
    a Schur complement, so tiny certified radii stay meaningful.
    """
    rng = np.random.default_rng(rng_seed)
    r = cert.r
    rad = r * np.sqrt(rng.uniform(size=num_samples))
    zs = r + rad * np.exp(2j * np.pi * rng.uniform(size=num_samples))
    zs = zs[zs != 0]
    if m.has_pole:
        vals = m.evaluate_many(zs) / zs[:, None, None]
        mins = np.linalg.eigvalsh(hermitian_part(vals))[:, 0]
    else:
        m0 = m.coeffs[0]
        w, v = np.linalg.eigh(hermitian_part(m0))
        thr = rank_tol * max(opnorm(m0), 1.0)
        on = np.abs(w) > thr
        # (M(z) - M_0) / z in the eigenbasis, plus Re(1/z) diag(w) on the range
        rest = adjoint(v)[None] @ m.shift_down().evaluate_many(zs) @ v[None]
        h = hermitian_part(rest)
        h[:, on, on] += np.real(1 / zs)[:, None] * w[on][None]
        if on.all() or not on.any():
            mins = np.linalg.eigvalsh(h)[:, 0]
        else:
            mins = _split_min_eig(h, on)
    i = int(np.argmin(mins))
    ok = bool(mins[i] >= cert.c_out - tol)
    return PositivitySample(ok, float(mins[i]), None if ok else complex(zs[i]), len(zs))
