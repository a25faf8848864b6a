"""Preset problems and counterexamples, addressable by string id."""

from __future__ import annotations

import re

import numpy as np

from ..errors import IndexOutOfRange
from ..evolve.solver import EvolutionProblem
from ..homog.fields import PeriodicField
from ..mlaw.law import MaterialLaw
from .spatial import build_grad_div_1d

COUNT_FIELD = PeriodicField.two_phase(1.0, 2.0)
PRESET_EPS = 10.0


def _pulse(t, center, width):
    return np.exp(-((t - center) / width) ** 2)


def count_law(n, grid, eps=PRESET_EPS):
    """``z diag(a(n x))`` with ``a = 1`` on ``[0, 1/2)`` and ``2`` on ``[1/2, 1)``."""
    a = COUNT_FIELD.grid_values(n, grid)
    coeffs = np.zeros((2, grid, grid))
    coeffs[1] = np.diag(a)
    # sup of |z| a(x) on |z| = eps/2
    return MaterialLaw(coeffs, eps, sup_bound=0.5 * eps * float(a.max()))


def preset_counterexample_compactness(n, grid, nu=1.0, t0=0.0, t1=8.0, num_samples=161,
                                      center=3.0, width=0.5):
    """``(d/dt z a(n.) + i) u = f``, i.e. ``(a(n x) + i) u = f``, with a pulsed constant ``f``.

    Raises :class:`AliasError` unless ``2 n`` divides ``grid``.
    """
    law = count_law(n, grid)
    t = np.linspace(t0, t1, num_samples)
    f = np.outer(_pulse(t, center, width), np.ones(grid))
    return EvolutionProblem(1j * np.eye(grid), law, f, t0, t1, nu=nu,
                            meta={"preset": "count_ai", "n": n, "grid": grid})


def count_steady_response(n, grid, f=None):
    """Time-harmonic response ``u = (a(n x) + i)^-1 f`` on the grid."""
    a = COUNT_FIELD.grid_values(n, grid)
    f = np.ones(grid) if f is None else np.asarray(f)
    return f / (a + 1j)


def count_effective_coefficient(n, grid):
    """``<f> / <u>`` for constant ``f``; equals the harmonic mean of ``a + i``."""
    u = count_steady_response(n, grid)
    return 1.0 / u.mean()


def preset_counterexample_positivity(n, eps=PRESET_EPS):
    """Scalar law ``z / n``; the solution of ``d/dt (d/dt^-1 / n) u = f`` is ``n f``."""
    if n < 1:
        raise ValueError("n must be positive")
    return MaterialLaw.from_list([0.0, 1.0 / n], eps)


def preset_counterexample_range(dim, n, eps=PRESET_EPS):
    """``P_n + z (1 - P_n)`` with ``P_n`` the projector onto ``e_n`` (1-based).

    A finite-dimensional illustration only: the range of ``M_n(0)`` moves
    with ``n``, so the range condition fails.
    """
    if not 1 <= n <= dim:
        raise IndexOutOfRange(f"n = {n} outside 1..{dim}")
    p = np.zeros((dim, dim))
    p[n - 1, n - 1] = 1.0
    return MaterialLaw.from_list([p, np.eye(dim) - p], eps)


def preset_heat1d(kappa=None, n=4, grid=256, nu=1.0, **forcing):
    """Fine-scale heat problem with ``kappa(n x)`` and the standard pulsed forcing."""
    from ..evolve.sweep import heat_forcing, heat_problem
    kappa = COUNT_FIELD if kappa is None else kappa
    t, f = heat_forcing(grid, **forcing)
    spatial = build_grad_div_1d(grid)
    p = heat_problem(kappa.grid_values(n, grid).real, spatial, f, t[0], t[-1], nu)
    p.meta.update({"preset": "heat1d", "n": n, "grid": grid})
    return p


def preset_ode_two_phase(n, grid=64, kappa=None):
    """Multiplication law ``diag(kappa(n x))`` (a constant law on the grid)."""
    kappa = COUNT_FIELD if kappa is None else kappa
    return MaterialLaw.constant(np.diag(kappa.grid_values(n, grid).real), eps=1.0)


def _tpz(**kwargs):
    from .thermopiezo import build_thermopiezo_law, identity_blocks
    blocks = kwargs.pop("blocks", None) or identity_blocks()
    return build_thermopiezo_law(blocks, kwargs.pop("condition", "i"), **kwargs)


PRESETS = {
    "count_ai": preset_counterexample_compactness,
    "positivity": preset_counterexample_positivity,
    "range": preset_counterexample_range,
    "heat1d": preset_heat1d,
    "ode_two_phase": preset_ode_two_phase,
    "tpz": _tpz,
}

_TWO_PHASE = re.compile(r"^two_phase_([0-9.]+)_([0-9.]+)$")
_CONSTANT = re.compile(r"^constant_([0-9.]+)$")


def get_preset(name, **params):
    try:
        builder = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return builder(**params)


def get_kappa(name):
    """Conductivity field by id: ``two_phase_A_B`` or ``constant_C``."""
    m = _TWO_PHASE.match(name)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        return PeriodicField.two_phase(a, b, bounds=(min(a, b), max(a, b)))
    m = _CONSTANT.match(name)
    if m:
        c = float(m.group(1))
        return PeriodicField(np.array([c]), bounds=(c, c))
    raise KeyError(f"unknown kappa id {name!r}; use two_phase_A_B or constant_C")


def random_certified_problem(rng, sizes=(1, 1, 1, 1), nu=None, num_samples=1601, order=2,
                             eps=2.0):
    """Random certified law, random skew ``A`` and a pulse on ``R(M(0))``.

    The window is ``[0, 40/nu]`` and the pulse (width ``0.2/nu``) is centred
    at ``10/nu``, so the pulse is short against the relaxation time.
    Forcing on ``R(M(0))`` drives the dynamic part; on the nullspace the
    response is instantaneous in either time direction. ``meta["a"]`` is
    the pulse centre, a natural cut point for causality checks.

    Returns ``(problem, certificate)``.
    """
    from ..linalg import range_basis
    from ..mlaw.positivity import certify
    from .random import random_block_law
    from ..evolve.solver import default_nu
    law, _, _ = random_block_law(rng, sizes, order=order, eps=eps)
    n = law.dim
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = 0.5 * (a - a.conj().T)
    cert = certify(law)
    nu = default_nu(law.eps, cert.r) if nu is None else nu
    span = 40.0 / nu
    t = np.linspace(0.0, span, num_samples)
    q = range_basis(law.coeffs[0])
    v = q @ (q.conj().T @ (rng.standard_normal(n) + 1j * rng.standard_normal(n)))
    f = np.outer(_pulse(t, 10.0 / nu, 0.2 / nu), v)
    p = EvolutionProblem(a, law, f, 0.0, span, nu=nu, certificate=cert,
                         meta={"a": 10.0 / nu, "sizes": tuple(sizes)})
    return p, cert
