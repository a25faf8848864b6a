"""Homogenization of sequences of material laws.

``homogenize_ode`` takes limits of inverses (the ODE case),
``homogenize_p2`` the limits of the four Schur expressions of a law split as
``H1 (+) H2`` and ``homogenize_nullsplit`` relabels a law along
``N(A)^perp (+) N(A)`` before delegating to ``homogenize_p2``.
"""

from __future__ import annotations

import numpy as np

from ..decomp import (GaussFactors, check_compatibility, four_block, gauss_transform,
                      invert_degenerate_hat, invert_regular)
from ..errors import (BoundViolated, HypothesisViolated, HypothesisViolation, RangeChanged,
                      StructureViolation)
from ..linalg import (DEFAULT_RANK_TOL, adjoint, complement, max_principal_angle, opnorm,
                      range_basis)
from ..mlaw.law import MaterialLaw, cauchy_product, check_coeff_bounds, compress, multiply_arrays
from ..mlaw.limits import joint_series_limit, series_limit
from ..mlaw.positivity import certify, check_zero_order
from ..models.spatial import nullspace_projections
from .result import HomogenizationResult

DEFAULT_ORDER = 12


def _order(laws, order):
    return max(min(m.order for m in laws), DEFAULT_ORDER) if order is None else order


def coarse_probes(grid, pieces):
    """Orthonormal indicator functions of ``pieces`` equal blocks of ``grid`` cells."""
    if grid % pieces:
        raise ValueError("pieces must divide grid")
    w = grid // pieces
    phi = np.zeros((grid, pieces))
    for j in range(pieces):
        phi[j * w:(j + 1) * w, j] = 1 / np.sqrt(w)
    return phi


def invert_laurent(m, order=None, rank_tol=DEFAULT_RANK_TOL):
    """Pole-free inverse of a law ``P/z + L(z)`` whose pole acts on one subspace.

    The pole's range is moved to the trailing coordinates and
    :func:`invert_degenerate_hat` is applied; a law without pole is inverted
    as a power series.
    """
    order = m.order if order is None else order
    if not m.has_pole or opnorm(m.pole) <= rank_tol * max(1.0, opnorm(m.coeffs[0])):
        base = MaterialLaw(m.coeffs, m.eps)
        out = MaterialLaw(base.inverse().coeffs[: order + 1], m.eps)
        return out
    g4 = range_basis(m.pole, rank_tol)
    v = np.concatenate([complement(g4, m.dim), g4], axis=1)
    inv = invert_degenerate_hat(m.conjugate_by(v), split=m.dim - g4.shape[1], order=order)
    out = inv.conjugate_by(adjoint(v))
    out.meta.update(inv.meta)
    return out


def _history(seq, ns, index):
    rows = []
    for i in range(1, len(seq)):
        a, b = seq[i - 1], seq[i]
        rows.append({"n": ns[i], "eta_index": index, "probe_residual": b.max_coeff_diff(a)})
    return rows


def _range_basis0(m, rank_tol):
    return range_basis(m.coeffs[0], rank_tol)


def homogenize_ode(laws, probe=None, probe_tol=1e-8, ns=None, allow_subsequence=True,
                   order=None, rank_tol=DEFAULT_RANK_TOL, angle_tol=1e-8):
    """Limit law ``mu`` with ``M_n(z)^-1 -> mu(z)^-1`` along a subsequence.

    Every law is inverted on a disc around 0 (with a ``z^-1`` pole on the
    nullspace of ``M_n(0)``), the Laurent coefficients of the inverses are
    passed to :func:`series_limit` and the limit is inverted back.

    Parameters
    ----------
    laws : sequence of MaterialLaw
        ``M_n(0)`` selfadjoint, nonnegative, with common range.
    probe : ndarray, optional
        Orthonormal columns ``Phi``. The inverses are compressed to
        ``Phi^* M_n^-1 Phi`` before the limit, which realizes weak limits of
        oscillating multiplication laws on a coarse probe space.
    ns : sequence, optional
        Sequence indices (for extrapolation and diagnostics).

    Returns
    -------
    MaterialLaw
        ``meta`` holds ``limit`` (status), ``history`` and ``range_angle``.
    """
    laws = list(laws)
    order = _order(laws, order)
    ns = list(range(1, len(laws) + 1)) if ns is None else list(ns)
    ref = _range_basis0(laws[0], rank_tol)
    for i, m in enumerate(laws):
        try:
            check_zero_order(m, rank_tol=rank_tol)
        except HypothesisViolation as exc:
            raise HypothesisViolated(f"law {i}: {exc}", condition="zero_order") from exc
        ang = max_principal_angle(_range_basis0(m, rank_tol), ref)
        if ang > angle_tol:
            raise RangeChanged(f"R(M_n(0)) differs from R(M_1(0)) at index {i} (angle {ang:.3e})")
    k = ref.shape[1]
    u = np.concatenate([ref, complement(ref, laws[0].dim)], axis=1)
    invs = []
    for m in laws:
        inv = invert_regular(m.conjugate_by(u), split=k, order=order).conjugate_by(adjoint(u))
        if probe is not None:
            inv = compress(inv, probe, probe)
        invs.append(inv)
    lim = series_limit(invs, probe_tol, ns=ns, allow_subsequence=allow_subsequence)
    mu = invert_laurent(lim, order, rank_tol)
    angle = 0.0
    if probe is None:
        angle = max_principal_angle(_range_basis0(mu, rank_tol), ref)
        if angle > angle_tol:
            raise RangeChanged(f"R(mu(0)) differs from R(M_1(0)) (angle {angle:.3e})")
    mu.meta.update({"limit": lim.meta.get("limit", {}), "history": _history(invs, ns, 2),
                    "range_angle": angle})
    return mu


# -- (P2) --------------------------------------------------------------------

def _check_A(a, dim, split):
    if a is None:
        return None
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.shape == (dim, dim) and split < dim:
        rest = max(opnorm(a[:split, split:]), opnorm(a[split:, :]))
        if rest > 1e-12 * max(1.0, opnorm(a)):
            raise HypothesisViolated("A must vanish outside H1", condition="A")
        a = a[:split, :split]
    if a.shape != (split, split):
        raise HypothesisViolated(f"A has shape {a.shape}, expected {(split, split)}",
                                 condition="A")
    if opnorm(a + adjoint(a)) > 1e-12 * max(1.0, opnorm(a)):
        raise HypothesisViolated("A is not skew-Hermitian", condition="A")
    return a


def check_p2_hypotheses(laws, split, rank_tol=DEFAULT_RANK_TOL, angle_tol=1e-8, compat_tol=1e-8):
    """Validate boundedness, positivity, range condition (i) and compatibility (ii).

    Returns ``(decompositions, certificates)``; raises
    :class:`HypothesisViolated` whose ``condition`` names the failure.
    """
    ref = _range_basis0(laws[0], rank_tol)
    decs, certs = [], []
    for i, m in enumerate(laws):
        if m.has_pole:
            raise HypothesisViolated(f"law {i} has a pole", condition="boundedness")
        try:
            check_coeff_bounds(m)
        except BoundViolated as exc:
            raise HypothesisViolated(f"law {i}: {exc}", condition="boundedness") from exc
        try:
            certs.append(certify(m, rank_tol=rank_tol))
        except HypothesisViolation as exc:
            raise HypothesisViolated(f"law {i}: {exc}", condition="positivity") from exc
        ang = max_principal_angle(_range_basis0(m, rank_tol), ref)
        if ang > angle_tol:
            raise HypothesisViolated(f"R(M_n(0)) differs from R(M_1(0)) at index {i} "
                                     f"(angle {ang:.3e})", condition="(i)")
        try:
            dec = four_block(m, split, rank_tol)
        except StructureViolation as exc:
            raise HypothesisViolated(f"law {i}: {exc}", condition="(i)") from exc
        if 0 < split < m.dim:
            res = check_compatibility(m, dec, rank_tol)
            if res > compat_tol * max(1.0, opnorm(m.coeff(1))):
                raise HypothesisViolated(f"compatibility residual {res:.3e} at index {i}",
                                         condition="(ii)")
        decs.append(dec)
    return decs, certs


def _inverse_h2(m, dec, order):
    """Laurent inverse of the ``H2`` block, computed in G3/G4 coordinates."""
    s = dec.split
    v = dec.h2_basis
    m22 = MaterialLaw(m.coeffs[:, s:, s:], m.eps)
    inv = invert_regular(m22.conjugate_by(v), split=dec.sizes[2], order=order)
    out = inv.conjugate_by(adjoint(v))
    out.meta.update(inv.meta)
    return out


def _schur_parts(m, dec, order):
    """``(mu1, mu2, mu3, mu4)`` for one law; ``mu3``/``mu4`` as coefficient stacks."""
    s = dec.split
    inv = _inverse_h2(m, dec, order)
    la = (inv.laurent_array(), -1)
    c = np.zeros((order + 1,) + m.coeffs.shape[1:], dtype=complex)
    c[: min(order, m.order) + 1] = m.coeffs[: order + 1]
    pole4, mu4 = multiply_arrays((c[:, :s, s:], 0), la, order)
    pole3, mu3 = multiply_arrays(la, (c[:, s:, :s], 0), order)
    scale = max(1.0, opnorm(inv.coeff(-1))) * max(1.0, opnorm(c[0]))
    for name, p in (("M12 M22^-1", pole4), ("M22^-1 M21", pole3)):
        if p is not None and opnorm(p) > 1e-8 * scale:
            raise HypothesisViolated(f"{name} has a z^-1 term of norm {opnorm(p):.3e}",
                                     condition="(i)")
    mu1 = c[:, :s, :s] - cauchy_product(mu4, c[:, s:, :s], order)
    return (MaterialLaw(mu1, inv.eps), inv, mu3, mu4)


def _embed(mu3, mu4, eps):
    s, t = mu4.shape[1], mu4.shape[2]
    c = np.zeros((mu4.shape[0], s + t, s + t), dtype=complex)
    c[:, :s, s:] = mu4
    c[:, s:, :s] = mu3
    return MaterialLaw(c, eps)


def _block_diag(a, b, order):
    s, t = a.dim, b.dim
    c = np.zeros((order + 1, s + t, s + t), dtype=complex)
    c[:, :s, :s] = a.coeffs[: order + 1]
    c[:, s:, s:] = b.coeffs[: order + 1]
    return MaterialLaw(c, min(a.eps, b.eps))


def assemble_n(eta1, eta2_inv, eta3, eta4, order):
    """Coefficients of ``(eta1 + eta4 eta2^-1 eta3, eta4 eta2^-1; eta2^-1 eta3, eta2^-1)``."""
    x = cauchy_product(eta4, eta2_inv.coeffs, order)
    y = cauchy_product(eta2_inv.coeffs, eta3, order)
    n11 = eta1.coeffs[: order + 1] + cauchy_product(x, eta3, order)
    top = np.concatenate([n11, x], axis=2)
    bot = np.concatenate([y, eta2_inv.coeffs[: order + 1]], axis=2)
    return np.concatenate([top, bot], axis=1)


def assemble_n_at(result, z):
    """The block formula for ``N(z)`` evaluated from the eta-limits at ``z``.

    ``eta2(z)^-1`` is computed from the pole-free inverse law, so this is the
    same arithmetic as :func:`assemble_n` carried out at a point.
    """
    s = result.split
    e2i = result.eta2_inverse
    if e2i is None:
        return result.eta1.evaluate(z)
    b = e2i.evaluate(z)
    if s == 0:
        return b
    powers = z ** np.arange(result.eta3.shape[0])
    e3 = np.einsum("k,kij->ij", powers, result.eta3)
    e4 = np.einsum("k,kij->ij", powers, result.eta4)
    e1 = result.eta1.evaluate(z)
    return np.block([[e1 + e4 @ b @ e3, e4 @ b], [b @ e3, b]])


def homogenize_p2(laws, A=None, split=None, probe_tol=1e-8, ns=None, allow_subsequence=True,
                  order=None, rank_tol=DEFAULT_RANK_TOL, angle_tol=1e-8, compat_tol=1e-8):
    """Limit law ``N`` assembled from the limits of the four Schur expressions.

    With ``M_n`` split as ``H1 (+) H2`` (first ``split`` coordinates), the
    sequences ``M11 - M12 M22^-1 M21``, ``M22^-1``, ``M22^-1 M21`` and
    ``M12 M22^-1`` are passed jointly to :func:`joint_series_limit` so that all
    four limits ``eta1 .. eta4`` are taken along one subsequence. ``N`` is
    certified through the factorization
    ``N = (1, eta4; 0, 1) diag(eta1, eta2^-1) (1, 0; eta3, 1)``.

    Raises
    ------
    HypothesisViolated
        ``condition`` is one of ``boundedness``, ``positivity``, ``(i)``,
        ``(ii)`` or ``A``.
    NoConvergence
        From :func:`series_limit`.
    """
    laws = list(laws)
    dim = laws[0].dim
    if any(m.dim != dim for m in laws):
        raise ValueError("laws must share their dimension")
    split = dim if split is None else int(split)
    order = _order(laws, order)
    ns = list(range(1, len(laws) + 1)) if ns is None else list(ns)
    a = _check_A(A, dim, split)
    decs, certs = check_p2_hypotheses(laws, split, rank_tol, angle_tol, compat_tol)
    t = dim - split
    lim_kw = {"ns": ns, "allow_subsequence": allow_subsequence}
    eta1 = eta2 = eta2_inv = eta3 = eta4 = None
    diagnostics = []

    if t == 0:
        padded = [MaterialLaw(_pad_order(m.coeffs, order), m.eps) for m in laws]
        eta1 = series_limit(padded, probe_tol, **lim_kw)
        status = eta1.meta.get("limit", {})
        diagnostics += _history(padded, ns, 1)
        n_law = MaterialLaw(eta1.coeffs, eta1.eps, meta={"limit": status})
    elif split == 0:
        invs = [_inverse_h2(m, dec, order) for m, dec in zip(laws, decs)]
        eta2 = series_limit(invs, probe_tol, **lim_kw)
        status = eta2.meta.get("limit", {})
        diagnostics += _history(invs, ns, 2)
        eta2_inv = invert_laurent(eta2, order, rank_tol)
        n_law = MaterialLaw(eta2_inv.coeffs, eta2_inv.eps, meta={"limit": status})
    else:
        parts = [_schur_parts(m, dec, order) for m, dec in zip(laws, decs)]
        mu1 = [p[0] for p in parts]
        mu2 = [p[1] for p in parts]
        emb = [_embed(p[2], p[3], p[1].eps) for p in parts]
        eta1, eta2, e_lim = joint_series_limit([mu1, mu2, emb], probe_tol, **lim_kw)
        status = eta1.meta.get("limit", {})
        eta4 = e_lim.coeffs[:, :split, split:]
        eta3 = e_lim.coeffs[:, split:, :split]
        diagnostics += _history(mu1, ns, 1) + _history(mu2, ns, 2)
        e3 = [MaterialLaw(_square(p[2]), p[1].eps) for p in parts]
        e4 = [MaterialLaw(_square(p[3]), p[1].eps) for p in parts]
        diagnostics += _history(e3, ns, 3) + _history(e4, ns, 4)
        eta2_inv = invert_laurent(eta2, order, rank_tol)
        k = min(eta1.order, eta2_inv.order, eta3.shape[0] - 1)
        n_law = MaterialLaw(assemble_n(eta1, eta2_inv, eta3, eta4, k),
                            min(eta1.eps, eta2_inv.eps), meta={"limit": status})

    angle = max_principal_angle(_range_basis0(n_law, rank_tol), _range_basis0(laws[0], rank_tol))
    preserved = angle <= angle_tol
    if not preserved:
        raise RangeChanged(f"R(N(0)) differs from R(M_1(0)) (angle {angle:.3e})")
    cert, fact = _certify_n(n_law, eta1, eta2_inv, eta3, eta4, split, rank_tol)
    meta = {"A": a, "nu": _default_nu(n_law, cert), "factorization": fact,
            "input_constants": [(c.c, c.d) for c in certs]}
    return HomogenizationResult(n_law, eta1, eta2, eta3, eta4, diagnostics, preserved, cert,
                                split, angle, dict(status), eta2_inv, meta)


def _pad_order(c, order):
    out = np.zeros((order + 1,) + c.shape[1:], dtype=complex)
    k = min(order + 1, c.shape[0])
    out[:k] = c[:k]
    return out


def _square(x):
    """Embed a rectangular stack in a square one (for difference histories)."""
    k = max(x.shape[1], x.shape[2])
    out = np.zeros((x.shape[0], k, k), dtype=complex)
    out[:, : x.shape[1], : x.shape[2]] = x
    return out


def _default_nu(law, cert):
    return max(2.0 / law.eps, 1.25 / (2 * cert.r))


def _certify_n(n_law, eta1, eta2_inv, eta3, eta4, split, rank_tol):
    """Certify ``N``, transporting constants through the Gauss factorization."""
    chk = check_zero_order(n_law, rank_tol=rank_tol)
    info = {"status": "direct"}
    c_use, d_use = chk.c_prime, chk.d
    if eta1 is not None and eta2_inv is not None:
        k = n_law.order
        diag = _block_diag(MaterialLaw(_pad_order(eta1.coeffs, k), eta1.eps),
                           MaterialLaw(_pad_order(eta2_inv.coeffs, k), eta2_inv.eps), k)
        factors = GaussFactors(_pad_order(eta4, k), _pad_order(eta3, k), sign=1,
                               eps=n_law.eps)
        try:
            gr = gauss_transform(diag, factors, rank_tol=rank_tol)
        except HypothesisViolation as exc:
            info = {"status": "failed", "reason": str(exc)}
        else:
            diff = gr.law.max_coeff_diff(n_law)
            info = {"status": "gauss", "reassembly_diff": diff, "d_prime": gr.d_prime,
                    "c_prime": gr.c_prime}
            c_use, d_use = min(c_use, gr.c_prime), min(d_use, gr.d_prime)
    cert = certify(n_law, c=c_use if np.isfinite(c_use) else None,
                   d=d_use if np.isfinite(d_use) else None, check=chk)
    return cert, info


# -- null-space split ----------------------------------------------------------

def homogenize_nullsplit(laws, A, rank_tol=DEFAULT_RANK_TOL, **kwargs):
    """Homogenize along the split ``N(A)^perp (+) N(A)``.

    ``P`` and ``Q`` (orthonormal bases of ``N(A)^perp`` and ``N(A)``) come from
    :func:`nullspace_projections`. The relabelled laws
    ``(P*MP, P*MQ; Q*MP, Q*MQ)`` are passed to :func:`homogenize_p2` with
    ``(P*AP, 0; 0, 0)``; the returned ``N`` is mapped back to the original
    coordinates, while the eta-limits stay in the relabelled ones.
    """
    laws = list(laws)
    pp = nullspace_projections(A, rank_tol)
    u = np.concatenate([pp.P, pp.Q], axis=1)
    relabelled = [m.conjugate_by(u) for m in laws]
    a = np.asarray(A.toarray() if hasattr(A, "toarray") else A, dtype=complex)
    a_rel = adjoint(pp.P) @ a @ pp.P
    res = homogenize_p2(relabelled, a_rel, split=pp.P.shape[1], rank_tol=rank_tol, **kwargs)
    res.meta.update({"P": pp.P, "Q": pp.Q, "N_relabelled": res.N})
    n_orig = res.N.conjugate_by(adjoint(u))
    n_orig.meta.update(res.N.meta)
    res.N = n_orig
    return res
