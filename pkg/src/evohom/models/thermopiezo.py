"""Material law of thermopiezoelectricity.

Unknowns are ordered ``(v, T, E, H, theta, Q)``. The law is
``diag(M11, M22(z))`` where ``M11`` couples elastic, electric and thermal
fields through ``d``, ``lambda`` and ``p`` and
``M22(z) = q0 + q1 (alpha + kappa z^-1)^-1`` is expanded as
``q0 + q1 sum_{n>=0} (-1)^n z^(n+1) (kappa^-1 alpha)^n kappa^-1``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import block_diag

from ..errors import ConditionViolated
from ..linalg import adjoint, opnorm
from ..mlaw.law import MaterialLaw
from ..mlaw.positivity import certify
from .random import random_spd

FIELDS = ("v", "T", "E", "H", "theta", "Q")
REQUIRED = ("rho0", "C", "eps", "mu", "alpha", "kappa", "q1")


def _mat(x):
    a = np.array(x, dtype=complex)
    return a.reshape(1, 1) if a.ndim == 0 else a


def _normalize(blocks):
    missing = [k for k in REQUIRED if k not in blocks]
    if missing:
        raise ValueError(f"missing blocks: {missing}")
    b = {k: _mat(v) for k, v in blocks.items() if v is not None}
    nT, nE, nth, nQ = b["C"].shape[0], b["eps"].shape[0], b["alpha"].shape[0], b["kappa"].shape[0]
    b.setdefault("d", np.zeros((nT, nE), complex))
    b.setdefault("lambda", np.zeros((nT, nth), complex))
    b.setdefault("p", np.zeros((nE, nth), complex))
    b.setdefault("q0", np.zeros((nQ, nQ), complex))
    if "alpha_q" not in b:
        if b["alpha"].shape != (nQ, nQ):
            raise ValueError("alpha_q is required when theta and Q have different sizes")
        b["alpha_q"] = b["alpha"]
    expected = {"d": (nT, nE), "lambda": (nT, nth), "p": (nE, nth), "q0": (nQ, nQ),
                "q1": (nQ, nQ), "alpha_q": (nQ, nQ)}
    for k, shape in expected.items():
        if b[k].shape != shape:
            raise ValueError(f"block {k} has shape {b[k].shape}, expected {shape}")
    return b


def sizes(blocks):
    b = _normalize(blocks)
    return tuple(b[k].shape[0] for k in ("rho0", "C", "eps", "mu", "alpha", "kappa"))


def thermal_schur(b):
    """``alpha - p^* eps^-1 p``."""
    return b["alpha"] - adjoint(b["p"]) @ np.linalg.solve(b["eps"], b["p"])


def m11_direct(blocks):
    """``M11`` assembled entry by entry."""
    b = _normalize(blocks)
    cinv = np.linalg.inv(b["C"])
    d, lam, p = b["d"], b["lambda"], b["p"]
    rows = [
        [b["rho0"], None, None, None, None],
        [None, cinv, cinv @ d, None, cinv @ lam],
        [None, adjoint(d) @ cinv, b["eps"] + adjoint(d) @ cinv @ d, None,
         p + adjoint(d) @ cinv @ lam],
        [None, None, None, b["mu"], None],
        [None, adjoint(lam) @ cinv, adjoint(p) + adjoint(lam) @ cinv @ d, None,
         b["alpha"] + adjoint(lam) @ cinv @ lam],
    ]
    return _assemble(rows, [b["rho0"], b["C"], b["eps"], b["mu"], b["alpha"]])


def m11_factors(blocks):
    """``(L, D)`` with ``M11 = L D L^*`` and ``D = diag(rho0, C^-1, eps, mu, alpha - p* eps^-1 p)``."""
    b = _normalize(blocks)
    diag = [b["rho0"], np.linalg.inv(b["C"]), b["eps"], b["mu"], thermal_schur(b)]
    n = [x.shape[0] for x in diag]
    o = np.cumsum([0] + n)
    low = np.eye(o[-1], dtype=complex)
    low[o[2]:o[3], o[1]:o[2]] = adjoint(b["d"])
    low[o[4]:o[5], o[1]:o[2]] = adjoint(b["lambda"])
    low[o[4]:o[5], o[2]:o[3]] = adjoint(b["p"]) @ np.linalg.inv(b["eps"])
    return low, block_diag(*diag)


def _assemble(rows, diag):
    n = [x.shape[0] for x in diag]
    out = np.zeros((sum(n), sum(n)), dtype=complex)
    o = np.cumsum([0] + n)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            if x is not None:
                out[o[i]:o[i + 1], o[j]:o[j + 1]] = x
    return out


def m22_coeffs(blocks, order):
    """Power-series coefficients of ``q0 + q1 (alpha + kappa z^-1)^-1``."""
    b = _normalize(blocks)
    kinv = np.linalg.inv(b["kappa"])
    g = kinv @ b["alpha_q"]
    nQ = kinv.shape[0]
    out = np.zeros((order + 1, nQ, nQ), dtype=complex)
    out[0] = b["q0"]
    term = kinv.copy()
    for k in range(1, order + 1):
        out[k] = b["q1"] @ term
        term = -g @ term
    return out


def _spd(name, x, tol):
    x = np.asarray(x)
    scale = max(1.0, opnorm(x))
    if opnorm(x - adjoint(x)) > tol * scale:
        raise ConditionViolated(f"{name} is not selfadjoint", condition=name)
    w = np.linalg.eigvalsh(0.5 * (x + adjoint(x)))
    if w[0] <= tol * scale:
        raise ConditionViolated(f"{name} is not strictly positive (min eigenvalue {w[0]:.3e})",
                                condition=name)


def check_condition(blocks, condition, tol=1e-10):
    """Raise :class:`ConditionViolated` naming the first failing requirement."""
    b = _normalize(blocks)
    common = [("rho0", b["rho0"]), ("C", b["C"]), ("eps", b["eps"]), ("mu", b["mu"])]
    schur = ("alpha - p* eps^-1 p", thermal_schur(b))
    if condition == "i":
        checks = common + [("q0", b["q0"]), schur, ("kappa", b["kappa"])]
    elif condition == "ii":
        checks = common + [("q1", b["q1"]), schur, ("kappa", b["kappa"])]
    else:
        raise ValueError("condition must be 'i' or 'ii'")
    for name, x in checks:
        _spd(name, x, tol)
    if condition == "ii":
        kinv = np.linalg.inv(b["kappa"])
        scale = max(1.0, opnorm(b["q1"]) * opnorm(kinv))
        if opnorm(b["q1"] @ kinv - kinv @ b["q1"]) > tol * scale:
            raise ConditionViolated("q1 kappa^-1 != kappa^-1 q1", condition="q1 kappa^-1")
        if opnorm(b["q0"]) > tol * max(1.0, opnorm(b["q1"])):
            raise ConditionViolated("q0 must vanish", condition="q0")


def build_thermopiezo_law(blocks, condition="i", order=12, eps=None, tol=1e-10):
    """Assemble and certify the thermopiezoelectric material law.

    Parameters
    ----------
    blocks : dict
        ``rho0, C, eps, mu, alpha, kappa, q1`` (required) and ``q0, d,
        lambda, p, alpha_q`` (optional; zero or ``alpha``).
    condition : {"i", "ii"}
        Which set of positivity assumptions to check.
    order : int
        Truncation order of the expansion of ``M22``.
    eps : float, optional
        Radius; defaults to ``1 / (2 ||kappa^-1 alpha||)`` (half the
        convergence radius of the expansion), or 1 if that product vanishes.

    Returns
    -------
    (MaterialLaw, PositivityCertificate)
    """
    b = _normalize(blocks)
    check_condition(b, condition, tol)
    low, dg = m11_factors(b)
    m11 = low @ dg @ adjoint(low)
    if eps is None:
        g = opnorm(np.linalg.solve(b["kappa"], b["alpha_q"]))
        eps = 1.0 / (2 * g) if g > 0 else 1.0
    m22 = m22_coeffs(b, order)
    n1 = m11.shape[0]
    coeffs = np.zeros((order + 1, n1 + m22.shape[1], n1 + m22.shape[1]), dtype=complex)
    coeffs[0, :n1, :n1] = m11
    coeffs[:, n1:, n1:] = m22
    law = MaterialLaw(coeffs, eps, meta={"sizes": sizes(b), "condition": condition,
                                         "m11_residual": opnorm(m11 - m11_direct(b))})
    return law, certify(law)


def identity_blocks(sizes=(1, 1, 1, 1, 1, 1)):
    """All blocks identity, ``d = lambda = p = 0`` and ``q0 = q1 = 1``."""
    nv, nT, nE, nH, nth, nQ = sizes
    eye = np.eye
    return {"rho0": eye(nv), "C": eye(nT), "eps": eye(nE), "mu": eye(nH), "alpha": eye(nth),
            "alpha_q": eye(nQ), "kappa": eye(nQ), "q0": eye(nQ), "q1": eye(nQ)}


def random_blocks(rng, sizes=(3, 6, 3, 3, 1, 1), condition="i", coupling=0.3):
    """Random admissible blocks; under ``ii``, ``q1`` is a polynomial in ``kappa``."""
    nv, nT, nE, nH, nth, nQ = sizes

    def c(*shape):
        return coupling * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    b = {"rho0": random_spd(rng, nv), "C": random_spd(rng, nT), "eps": random_spd(rng, nE),
         "mu": random_spd(rng, nH), "d": c(nT, nE), "lambda": c(nT, nth), "p": c(nE, nth),
         "kappa": random_spd(rng, nQ), "alpha_q": random_spd(rng, nQ)}
    b["alpha"] = random_spd(rng, nth) + adjoint(b["p"]) @ np.linalg.solve(b["eps"], b["p"])
    if condition == "i":
        b["q0"] = random_spd(rng, nQ)
        b["q1"] = c(nQ, nQ)
    else:
        b["q0"] = np.zeros((nQ, nQ))
        k = b["kappa"]
        b["q1"] = 0.5 * np.eye(nQ) + 0.25 * k + 0.1 * k @ k
    return b
