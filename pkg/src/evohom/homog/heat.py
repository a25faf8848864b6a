"""Limit system of the 1-D heat equation with oscillating conductivity.

For ``kappa_n = kappa(n x)`` on a staggered grid, the flux space splits
into ``R(grad0)`` (range ``P``) and the constants ``N(div)`` (``Q``, spanned
by ``e``). With ``D_n = diag(kappa_n^-1)`` the four blocks of the limit
system are

* ``P D_n P^* - C_n`` with ``C_n = P D_n e (e^* D_n e)^-1 e^* D_n P^*``,
* ``P D_n e (e^* D_n e)^-1`` and its transpose,
* ``(e^* D_n e)^-1``.

Weak limits are observed on ``p`` smooth probe directions ``Phi`` in
``R(grad0)``: ``Phi^* D_n Phi`` tends to ``<kappa^-1> I`` and
the compressed correction ``Phi^* C_n Phi`` to zero, both at rate ``1/n^2``. The
full Frobenius norm of ``C_n`` does not decay (the correction is a weak,
not a norm, limit), so the probe-compressed norm is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NoConvergence
from ..mlaw.law import MaterialLaw
from ..mlaw.limits import series_limit
from ..models.spatial import build_grad_div_1d
from .fields import cell_average, harmonic_mean

DEFAULT_LADDER = (4, 8, 16, 32, 64)


@dataclass
class HeatLimitSystem:
    """Finite-``n`` blocks of the limit system and the effective coefficient.

    Attributes
    ----------
    kappa_eff : float
        Extrapolated effective conductivity on ``R(grad0)``.
    kappa_eff_ladder : ndarray
        ``(trace(Phi^* (D_n - C_n) Phi) / p)^-1`` per ladder level.
    correction_norms : ndarray
        Frobenius norms of ``Phi^* C_n Phi``.
    blocks : list of dict
        Per level: ``b11`` (p x p), ``b12`` (p,), ``b21`` (p,), ``b22``.
    """

    ladder: tuple
    grid: int
    num_probes: int
    kappa_eff: float
    kappa_eff_ladder: np.ndarray
    correction_norms: np.ndarray
    blocks: list
    limit_blocks: dict
    harmonic_mean: float
    fast: bool = False
    limit_status: dict = field(default_factory=dict)

    @property
    def decay_ratios(self):
        """``correction_norms[i] / correction_norms[i+1]`` along the ladder."""
        c = self.correction_norms
        with np.errstate(divide="ignore", invalid="ignore"):
            return c[:-1] / c[1:]

    @property
    def observed_rate(self):
        """Least-squares slope of ``-log2`` correction norm against ``log2 n``."""
        c = self.correction_norms
        ok = c > 0
        if ok.sum() < 2:
            return float("nan")
        return float(-np.polyfit(np.log2(np.asarray(self.ladder)[ok]), np.log2(c[ok]), 1)[0])

    def table(self):
        """Rows ``(n, kappa_eff_n, correction_norm)``."""
        return [(n, float(k), float(c)) for n, k, c in
                zip(self.ladder, self.kappa_eff_ladder, self.correction_norms)]


def heat_probes(spatial, num_probes):
    """Orthonormal flux directions ``grad0 sin(k pi x)``, ``k = 1 .. num_probes``."""
    x = spatial.nodes / (spatial.h * spatial.n_cells)
    k = np.arange(1, num_probes + 1)
    theta = np.sin(np.pi * np.outer(x, k))
    phi = spatial.grad0 @ theta
    q, _ = np.linalg.qr(phi)
    return q


def _scalar(kappa):
    if not kappa.is_scalar:
        raise ValueError("the 1-D heat system needs a scalar conductivity field")
    if np.iscomplexobj(kappa.samples) and np.any(kappa.samples.imag):
        raise ValueError("conductivity must be real")
    if np.any(kappa.samples.real <= 0):
        raise ValueError("conductivity must be positive")


def level_blocks(kappa, n, spatial, phi):
    """Probe-compressed blocks of the limit system at oscillation index ``n``."""
    m = spatial.n_cells
    dinv = 1.0 / kappa.grid_values(n, m).real
    e = np.full(m, 1 / np.sqrt(m))
    dphi = dinv[:, None] * phi
    a = phi.T @ dphi
    v = dphi.T @ e
    b22inv = float(e @ (dinv * e))
    corr = np.outer(v, v) / b22inv
    return {"a": a, "correction": corr, "b11": a - corr, "b12": v / b22inv, "b21": v / b22inv,
            "b22": 1.0 / b22inv}


def heat_limit_system(kappa, grid=1024, ladder=DEFAULT_LADDER, num_probes=8, fast=False,
                      probe_tol=1e-8):
    """Limit system and effective coefficient of ``d/dt theta - div kappa(n.) grad0 theta``.

    Parameters
    ----------
    kappa : PeriodicField
        Real positive scalar conductivity.
    grid : int
        Number of flux cells; every ``n * kappa.pieces`` must divide it.
    ladder : sequence of int
        Oscillation indices ``n``.
    num_probes : int
        Number of probe directions in ``R(grad0)``.
    fast : bool
        Use the exact cell averages (harmonic mean) instead of the ladder.
    """
    _scalar(kappa)
    ladder = tuple(int(n) for n in ladder)
    hm = float(np.real(harmonic_mean(kappa)))
    if fast:
        p = num_probes
        inv_mean = float(np.real(cell_average(kappa.inverse())))
        lim = {"b11": inv_mean * np.eye(p), "b12": np.zeros(p), "b21": np.zeros(p), "b22": hm}
        return HeatLimitSystem(ladder, grid, p, hm, np.full(len(ladder), hm),
                               np.zeros(len(ladder)), [], lim, hm, fast=True,
                               limit_status={"status": "exact"})
    spatial = build_grad_div_1d(grid)
    phi = heat_probes(spatial, num_probes)
    blocks = [level_blocks(kappa, n, spatial, phi) for n in ladder]
    p = phi.shape[1]
    keff = np.array([p / np.trace(b["b11"]) for b in blocks])
    corr = np.array([np.linalg.norm(b["correction"]) for b in blocks])

    laws = [MaterialLaw(_pack(b), 1.0) for b in blocks]
    status = {}
    try:
        lim_law = series_limit(laws, probe_tol, ns=ladder)
        status = lim_law.meta.get("limit", {})
        lim = _unpack(lim_law.coeffs[0], p)
    except NoConvergence as exc:
        status = {"status": "last_level", "diagnostic": exc.diagnostic}
        lim = {k: blocks[-1][k] for k in ("b11", "b12", "b21", "b22")}
    # the probe mean of b11 converges cleanly even when single entries do not
    means = [MaterialLaw(np.array([[np.trace(b["b11"]) / p]]), 1.0) for b in blocks]
    try:
        mean_law = series_limit(means, probe_tol, ns=ladder)
        status["kappa_eff"] = mean_law.meta.get("limit", {})
        kappa_eff = float(1.0 / mean_law.coeffs[0, 0, 0].real)
    except NoConvergence:
        status["kappa_eff"] = {"status": "last_level"}
        kappa_eff = float(keff[-1])
    return HeatLimitSystem(ladder, grid, p, kappa_eff, keff, corr, blocks, lim, hm,
                           limit_status=status)


def _pack(b):
    p = b["b11"].shape[0]
    out = np.zeros((p + 1, p + 1))
    out[:p, :p] = b["b11"]
    out[:p, p] = b["b12"]
    out[p, :p] = b["b21"]
    out[p, p] = b["b22"]
    return out


def _unpack(x, p):
    x = x.real
    return {"b11": x[:p, :p], "b12": x[:p, p], "b21": x[p, :p], "b22": float(x[p, p])}
