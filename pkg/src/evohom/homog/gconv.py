"""Probe-based test of G-convergence against a candidate limit operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


@dataclass
class GConvergenceReport:
    """Outcome of :func:`check_g_convergence`.

    ``residuals[j]`` is ``||Phi^*(B u - f_j)||`` for the probe-space weak limit
    ``u = Phi Phi^* u_n`` of the last solver, ``coefficient_residuals[j]`` the
    same divided by ``||Phi^* u||`` (for scalar problems: the modulus of the
    difference between implied and candidate coefficient). ``weak_changes[j]``
    is the relative change of ``Phi^* u_n`` between the last two solvers.
    """

    residuals: np.ndarray
    coefficient_residuals: np.ndarray
    weak_changes: np.ndarray
    slowest_probe: int
    passed: bool
    tol: float
    implied: list

    @property
    def max_residual(self):
        return float(np.max(self.residuals))

    @property
    def max_coefficient_residual(self):
        return float(np.max(self.coefficient_residuals))


def solution_map(a):
    """Callable ``f -> a^-1 f`` from a square matrix (LU factorized once)."""
    lu = sla.lu_factor(np.asarray(a, dtype=complex))
    return lambda f: sla.lu_solve(lu, np.asarray(f, dtype=complex))


def _apply(b, u):
    if callable(b):
        return np.asarray(b(u))
    b = np.asarray(b)
    return b * u if b.ndim == 0 else b @ u


def check_g_convergence(solvers, candidate, probes, probe_basis=None, tol=1e-8):
    """Test whether solutions ``u_n = S_n f`` converge weakly to solutions of ``B u = f``.

    Parameters
    ----------
    solvers : sequence of callables
        Solution maps ``f -> u_n``, ordered along the sequence.
    candidate : scalar, matrix or callable
        Limit operator ``B`` acting on the probe space (``Phi^* B Phi`` is
        applied as ``B`` on probe coordinates).
    probes : sequence of ndarray
        Right-hand sides ``f``.
    probe_basis : ndarray, optional
        Orthonormal columns ``Phi`` used for weak limits (default: identity).
    tol : float
        Pass threshold on the coefficient residual.
    """
    solvers = list(solvers)
    probes = [np.asarray(f, dtype=complex) for f in probes]
    n = probes[0].shape[0]
    phi = np.eye(n) if probe_basis is None else np.asarray(probe_basis)
    res, cres, changes, implied = [], [], [], []
    for f in probes:
        w = [phi.conj().T @ s(f) for s in solvers]
        fw = phi.conj().T @ f
        last = w[-1]
        scale = max(np.linalg.norm(last), np.finfo(float).tiny)
        changes.append(np.linalg.norm(w[-1] - w[-2]) / scale if len(w) > 1 else 0.0)
        r = np.linalg.norm(_apply(candidate, last) - fw)
        res.append(r)
        cres.append(r / scale)
        implied.append(np.vdot(last, fw) / np.vdot(last, last))
    res, cres, changes = map(np.asarray, (res, cres, changes))
    return GConvergenceReport(res, cres, changes, int(np.argmax(changes)),
                              bool(np.max(cres) <= tol), tol, implied)
