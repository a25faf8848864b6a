"""Coefficient-wise limits of sequences of material laws."""

from __future__ import annotations

import numpy as np

from ..errors import NoConvergence
from .law import MaterialLaw

RICHARDSON_RATES = (1.0, 2.0)


def _stack(laws):
    if not laws:
        raise ValueError("series_limit needs at least one law")
    dim = laws[0].dim
    if any(m.dim != dim for m in laws):
        raise ValueError("laws must share their dimension")
    K = min(m.order for m in laws)
    with_pole = any(m.has_pole for m in laws)
    arrs = [m.laurent_array()[: K + 2] if with_pole else m.coeffs[: K + 1] for m in laws]
    return np.stack(arrs), with_pole, min(m.eps for m in laws)


def _to_law(arr, with_pole, eps, meta):
    if with_pole:
        return MaterialLaw(arr[1:], eps, pole=arr[0], meta=meta)
    return MaterialLaw(arr, eps, meta=meta)


def _settled(seq, tol):
    """Last successive difference of ``seq`` relative to its scale."""
    if len(seq) < 2:
        return False, np.inf
    diff = float(np.max(np.abs(seq[-1] - seq[-2])))
    scale = max(1.0, float(np.max(np.abs(seq[-1]))))
    return diff <= tol * scale, diff


def _richardson(a, b, na, nb, p):
    wa, wb = na ** p, nb ** p
    return (wb * b - wa * a) / (wb - wa)


def series_limit(laws, probe_tol=1e-8, *, ns=None, rate=None,
                 allow_subsequence=False, extrapolate=True):
    """Entrywise limit of a sequence of laws.

    The limit is detected in three stages. If the last successive difference
    is below ``probe_tol`` the last term is returned. Otherwise, if the even-
    and odd-indexed tails each settle on different values, the sequence has
    two cluster points and :class:`NoConvergence` is raised carrying both; with
    ``allow_subsequence`` the even-``n`` cluster is returned instead. Finally
    a Richardson extrapolation in ``1/n^rate`` is attempted and accepted when
    two consecutive extrapolants agree.

    Parameters
    ----------
    laws : sequence of MaterialLaw
        Terms ``M_1, M_2, ...``; all must share their dimension.
    probe_tol : float
        Relative tolerance on successive differences.
    ns : sequence of float, optional
        Sequence indices of ``laws``; defaults to ``1, 2, ...``.
    rate : float, optional
        Known algebraic convergence rate. When omitted, rates 1 and 2 are
        tried and the more self-consistent one is kept.
    allow_subsequence : bool
        Return the even-index cluster limit instead of raising.
    extrapolate : bool
        Enable the Richardson stage.

    Returns
    -------
    MaterialLaw
        The limit with ``meta["limit"]`` describing how it was obtained.
    """
    laws = list(laws)
    arr, with_pole, eps = _stack(laws)
    n_laws = len(laws)
    ns = np.arange(1, n_laws + 1, dtype=float) if ns is None else np.asarray(ns, dtype=float)
    if ns.shape != (n_laws,):
        raise ValueError("ns must have one entry per law")

    if n_laws == 1:
        return _to_law(arr[0], with_pole, eps, {"limit": {"status": "single", "n_laws": 1}})

    ok, diff = _settled(arr, probe_tol)
    if ok:
        return _to_law(arr[-1], with_pole, eps,
                       {"limit": {"status": "converged", "last_diff": diff, "n_laws": n_laws}})

    if n_laws >= 4:
        odd, even = arr[0::2], arr[1::2]
        ok_o, d_o = _settled(odd, probe_tol)
        ok_e, d_e = _settled(even, probe_tol)
        if ok_o and ok_e:
            gap = float(np.max(np.abs(even[-1] - odd[-1])))
            info = {"status": "subsequence", "subsequence": "even", "cluster_gap": gap,
                    "last_diff": d_e, "n_laws": n_laws}
            sub = _to_law(even[-1], with_pole, eps, {"limit": info})
            if allow_subsequence:
                return sub
            clusters = [_to_law(odd[-1], with_pole, eps, {}), _to_law(even[-1], with_pole, eps, {})]
            raise NoConvergence(
                f"sequence alternates between two cluster points (gap {gap:.3e})",
                clusters=clusters, subsequence_limit=sub,
                diagnostic={"kind": "two_clusters", "gap": gap,
                            "cluster_zero_order": [c.coeffs[0] for c in clusters]})

    if extrapolate and n_laws >= 2:
        rates = RICHARDSON_RATES if rate is None else (float(rate),)
        best = None
        for p in rates:
            lb = _richardson(arr[-2], arr[-1], ns[-2], ns[-1], p)
            if n_laws >= 3:
                la = _richardson(arr[-3], arr[-2], ns[-3], ns[-2], p)
                err = float(np.max(np.abs(lb - la)))
            else:
                err = np.nan if rate is None else 0.0
            if best is None or err < best[0]:
                best = (err, p, lb)
        if best is not None:
            err, p, lim = best
            scale = max(1.0, float(np.max(np.abs(lim))))
            checked = n_laws >= 3
            if (checked and (err <= probe_tol * scale or err <= 0.1 * diff)) or \
                    (not checked and rate is not None):
                info = {"status": "extrapolated", "rate": p, "extrapolation_error": err,
                        "last_diff": diff, "n_laws": n_laws, "checked": checked}
                return _to_law(lim, with_pole, eps, {"limit": info})

    raise NoConvergence(
        f"no limit detected: last difference {diff:.3e} > {probe_tol:.1e}",
        diagnostic={"kind": "no_convergence", "last_diff": diff, "n_laws": n_laws})


def _block_diag_law(parts):
    dims = [p.dim for p in parts]
    K = min(p.order for p in parts)
    D = sum(dims)
    coeffs = np.zeros((K + 1, D, D), dtype=complex)
    pole = np.zeros((D, D), dtype=complex) if any(p.has_pole for p in parts) else None
    o = 0
    for p, k in zip(parts, dims):
        coeffs[:, o:o + k, o:o + k] = p.coeffs[: K + 1]
        if pole is not None:
            pole[o:o + k, o:o + k] = p.coeff(-1)
        o += k
    return MaterialLaw(coeffs, min(p.eps for p in parts), pole=pole)


def joint_series_limit(sequences, probe_tol=1e-8, **kwargs):
    """Limits of several equally long sequences along one common subsequence.

    The sequences are stacked block-diagonally so that cluster detection and
    extrapolation treat them as one sequence. Returns the list of limits; each
    carries the shared ``meta["limit"]`` record.
    """
    sequences = [list(s) for s in sequences]
    lengths = {len(s) for s in sequences}
    if len(lengths) != 1:
        raise ValueError("sequences must have equal length")
    stacked = [_block_diag_law(parts) for parts in zip(*sequences)]
    lim = series_limit(stacked, probe_tol, **kwargs)
    out, o = [], 0
    for seq in sequences:
        k = seq[0].dim
        sl = slice(o, o + k)
        pole = None if lim.pole is None else lim.pole[sl, sl]
        if pole is not None and not any(m.has_pole for m in seq):
            pole = None
        out.append(MaterialLaw(lim.coeffs[:, sl, sl], min(m.eps for m in seq), pole=pole,
                               meta=dict(lim.meta)))
        o += k
    return out
