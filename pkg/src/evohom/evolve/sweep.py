"""Fine-scale heat solves along an oscillation ladder.

The first-order heat system ``d/dt theta + div q = f``,
``kappa^-1 q + grad0 theta = 0`` is the evolutionary problem with
``M(z) = diag(1, z kappa^-1)`` and ``A = (0, div; grad0, 0)``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..models.spatial import build_grad_div_1d
from .solver import EvolutionProblem, SparseLaw, solve, weighted_norm


def heat_law(kappa_cells, n_nodes):
    """``diag(1, z diag(kappa^-1))`` on temperatures (nodes) and fluxes (cells)."""
    kinv = 1.0 / np.asarray(kappa_cells, dtype=float)
    m = kinv.size
    m0 = sp.diags(np.r_[np.ones(n_nodes), np.zeros(m)])
    m1 = sp.diags(np.r_[np.zeros(n_nodes), kinv])
    return SparseLaw([m0, m1])


def heat_problem(kappa_cells, spatial, f_theta, t0, t1, nu=1.0):
    """EvolutionProblem for the heat system with cellwise conductivity."""
    f_theta = np.asarray(f_theta)
    nt = f_theta.shape[0]
    f = np.concatenate([f_theta, np.zeros((nt, spatial.n_cells))], axis=1)
    law = heat_law(kappa_cells, spatial.n_nodes)
    return EvolutionProblem(spatial.A_block, law, f, t0, t1, nu=nu)


def heat_forcing(grid, t0=0.0, t1=12.0, num_samples=301, center=2.0, width=0.3):
    """``exp(-((t - center)/width)^2) sin(pi x)`` on the interior nodes."""
    spatial = build_grad_div_1d(grid)
    t = np.linspace(t0, t1, num_samples)
    pulse = np.exp(-((t - center) / width) ** 2)
    return t, np.outer(pulse, np.sin(np.pi * spatial.nodes))


def fine_scale_sweep(kappa, n_ladder, grid, f, t0, t1, nu=1.0, threads=None):
    """Solve the heat system with ``kappa(n x)`` for every ``n`` in the ladder.

    ``f`` holds temperature forcing samples of shape ``(num_samples, grid-1)``.
    Raises :class:`AliasError` if some ``n`` does not align with the grid.
    """
    spatial = build_grad_div_1d(grid)
    out = []
    for n in n_ladder:
        p = heat_problem(kappa.grid_values(n, grid).real, spatial, f, t0, t1, nu)
        rep = solve(p, threads=threads)
        out.append(rep)
    return out


def homogenized_solve(k_eff, grid, f, t0, t1, nu=1.0, threads=None):
    """Heat solve with constant conductivity ``k_eff``."""
    spatial = build_grad_div_1d(grid)
    p = heat_problem(np.full(grid, float(k_eff)), spatial, f, t0, t1, nu)
    return solve(p, threads=threads)


def temperature_error(rep, ref, n_nodes):
    """Relative weighted L2 error of the temperature components."""
    num = weighted_norm(rep.u[:, :n_nodes] - ref.u[:, :n_nodes], rep.t, rep.nu)
    den = weighted_norm(ref.u[:, :n_nodes], ref.t, ref.nu)
    return num / den
