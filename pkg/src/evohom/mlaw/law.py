"""Truncated operator-valued Laurent series on a disc.

A :class:`MaterialLaw` stores ``z -> pole/z + sum_{k=0}^K z^k M_k`` for
square complex matrices ``M_k``, together with the analyticity radius
``eps`` of the disc ``B(0, eps)`` and a bound ``sup_bound`` on the norm of
the law. All arithmetic happens on the coefficient arrays; products are
truncated at the smaller of the two orders.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from ..errors import BoundViolated, EvalOutsideDisc, PoleAtZero
from ..linalg import adjoint, as_operator, opnorm

DEFAULT_ORDER = 8
SUP_SAMPLES = 256


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


class MaterialLaw:
    """Truncated Laurent series ``pole/z + sum_k z^k coeffs[k]``.

    Parameters
    ----------
    coeffs : array_like, shape (K+1, d, d)
        Power-series coefficients ``M_0 .. M_K``.
    eps : float
        Radius of the disc of analyticity ``B(0, eps)``.
    pole : array_like, shape (d, d), optional
        Coefficient of ``z^-1``. Laws with a pole are not evaluable at 0.
    sup_bound : float, optional
        Declared bound on ``sup ||M(z)||``. When omitted it is estimated by
        maximising ``||M(z)||`` over 256 points on ``|z| = eps/2``, which is
        exactly the radius the Cauchy estimates integrate over.
    meta : dict
        Free-form provenance (reduced radii, limit status, ...). Not part of
        the value of the law.
    """

    def __init__(self, coeffs, eps, pole=None, sup_bound=None, meta=None):
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[0] == 0:
            raise ValueError(f"coefficients must have shape (K+1, d, d), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        eps = float(eps)
        if not (eps > 0 and np.isfinite(eps)):
            raise ValueError("eps must be a positive finite radius")
        if pole is not None:
            pole = as_operator(pole, c.shape[1])
        if sup_bound is not None and not sup_bound > 0:
            raise ValueError("sup_bound must be positive")
        self.coeffs = _frozen(c)
        self.eps = eps
        self.pole = None if pole is None else _frozen(pole)
        self.declared_sup = None if sup_bound is None else float(sup_bound)
        self.meta = dict(meta or {})

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, c, eps=1.0, order=0):
        c = as_operator(c)
        coeffs = np.zeros((order + 1,) + c.shape, dtype=complex)
        coeffs[0] = c
        return cls(coeffs, eps)

    @classmethod
    def from_list(cls, mats, eps, pole=None, order=None, sup_bound=None):
        """Build from a list ``[M_0, M_1, ...]``, zero-padded to ``order``."""
        mats = [as_operator(m) for m in mats]
        d = mats[0].shape[0]
        K = len(mats) - 1 if order is None else order
        coeffs = np.zeros((K + 1, d, d), dtype=complex)
        for k, m in enumerate(mats[: K + 1]):
            coeffs[k] = m
        return cls(coeffs, eps, pole=pole, sup_bound=sup_bound)

    @classmethod
    def zeros(cls, dim, eps, order=DEFAULT_ORDER):
        return cls(np.zeros((order + 1, dim, dim)), eps)

    # -- basic properties ----------------------------------------------------

    @property
    def dim(self):
        return self.coeffs.shape[1]

    @property
    def order(self):
        """Truncation order ``K``."""
        return self.coeffs.shape[0] - 1

    @property
    def has_pole(self):
        return self.pole is not None

    @cached_property
    def sup_bound(self):
        if self.declared_sup is not None:
            return self.declared_sup
        theta = 2 * np.pi * np.arange(SUP_SAMPLES) / SUP_SAMPLES
        vals = self.evaluate_many(0.5 * self.eps * np.exp(1j * theta))
        s = float(np.max(np.linalg.norm(vals, 2, axis=(1, 2))))
        # A zero law still needs a positive bound for the Cauchy formulas.
        return max(s, np.finfo(float).tiny)

    @property
    def sup_bound_estimated(self):
        return self.declared_sup is None

    def __repr__(self):
        p = ", pole" if self.has_pole else ""
        return f"MaterialLaw(dim={self.dim}, K={self.order}, eps={self.eps:g}{p})"

    # -- evaluation ----------------------------------------------------------

    def _check_point(self, z):
        if abs(z) >= self.eps:
            raise EvalOutsideDisc(f"|z| = {abs(z):g} outside B(0, {self.eps:g})")
        if self.has_pole and z == 0:
            raise PoleAtZero("law has a z^-1 term and cannot be evaluated at 0")

    def evaluate(self, z):
        z = complex(z)
        self._check_point(z)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * z + c
        if self.has_pole:
            out = out + self.pole / z
        return out

    def evaluate_many(self, zs):
        """Evaluate at an array of points, returning shape ``(len(zs), d, d)``."""
        zs = np.asarray(zs, dtype=complex).ravel()
        if zs.size and np.max(np.abs(zs)) >= self.eps:
            raise EvalOutsideDisc(f"sample outside B(0, {self.eps:g})")
        powers = zs[:, None] ** np.arange(self.order + 1)[None, :]
        out = np.einsum("sk,kij->sij", powers, self.coeffs)
        if self.has_pole:
            if np.any(zs == 0):
                raise PoleAtZero("law has a z^-1 term and cannot be evaluated at 0")
            out = out + self.pole[None] / zs[:, None, None]
        return out

    def __call__(self, z):
        return self.evaluate(z)

    # -- coefficient access --------------------------------------------------

    def coeff(self, k):
        """Coefficient of ``z^k``; ``k = -1`` is the pole, zero beyond ``K``."""
        if k == -1:
            return np.zeros((self.dim, self.dim), complex) if self.pole is None else self.pole
        if 0 <= k <= self.order:
            return self.coeffs[k]
        return np.zeros((self.dim, self.dim), dtype=complex)

    def laurent_array(self):
        """Coefficients from ``z^-1`` upwards, shape ``(K+2, d, d)``."""
        return np.concatenate([self.coeff(-1)[None], self.coeffs])

    def with_coeffs(self, coeffs, pole=None, eps=None, sup_bound=None, meta=None):
        return MaterialLaw(coeffs, self.eps if eps is None else eps, pole=pole,
                           sup_bound=sup_bound, meta=self.meta if meta is None else meta)

    def truncate(self, order):
        c = np.zeros((order + 1, self.dim, self.dim), dtype=complex)
        m = min(order, self.order) + 1
        c[:m] = self.coeffs[:m]
        return MaterialLaw(c, self.eps, pole=self.pole, sup_bound=self.declared_sup, meta=self.meta)

    def drop_pole(self, tol=None):
        """Return the power-series part; with ``tol`` the pole must be negligible."""
        if self.has_pole and tol is not None:
            n = opnorm(self.pole)
            if n > tol:
                raise ValueError(f"pole coefficient has norm {n:.3e} > {tol:.1e}")
        return MaterialLaw(self.coeffs, self.eps, meta=self.meta)

    # -- arithmetic ----------------------------------------------------------

    def _binary_eps(self, other):
        return min(self.eps, other.eps)

    def __add__(self, other):
        if not isinstance(other, MaterialLaw):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        K = min(self.order, other.order)
        c = self.coeffs[: K + 1] + other.coeffs[: K + 1]
        pole = None
        if self.has_pole or other.has_pole:
            pole = self.coeff(-1) + other.coeff(-1)
        return MaterialLaw(c, self._binary_eps(other), pole=pole)

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, a):
        if isinstance(a, MaterialLaw):
            return NotImplemented
        a = complex(a)
        pole = None if self.pole is None else self.pole * a
        sup = None if self.declared_sup is None else self.declared_sup * max(abs(a), 1e-300)
        return MaterialLaw(self.coeffs * a, self.eps, pole=pole, sup_bound=sup)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return multiply(self, other)

    def adjoint(self):
        """The law ``z -> M(conj z)^*``, i.e. coefficient-wise adjoints."""
        pole = None if self.pole is None else adjoint(self.pole)
        return MaterialLaw(adjoint(self.coeffs), self.eps, pole=pole, sup_bound=self.declared_sup)

    def conjugate_by(self, u):
        """``u^* M u`` for a square (typically unitary) ``u``."""
        return compress(self, u, u)

    def shift_down(self):
        """``(M(z) - M(0)) / z`` as a law one order shorter (zero-padded)."""
        if self.has_pole:
            raise ValueError("shift_down needs a pole-free law")
        c = np.zeros_like(self.coeffs)
        c[:-1] = self.coeffs[1:]
        return MaterialLaw(c, self.eps)

    def times_z(self, power=1):
        """Multiply by ``z^power`` (``power`` in {-1, 1}), keeping the order."""
        K = self.order
        if power == 1:
            # the top coefficient falls off the truncation
            new = np.zeros((K + 1, self.dim, self.dim), dtype=complex)
            new[0] = self.coeff(-1)
            new[1:] = self.coeffs[:-1]
            return MaterialLaw(new, self.eps)
        if power == -1:
            if self.has_pole and np.any(self.pole != 0):
                raise ValueError("z^-2 term is not representable")
            new = np.zeros((K + 1, self.dim, self.dim), dtype=complex)
            new[:-1] = self.coeffs[1:]
            return MaterialLaw(new, self.eps, pole=self.coeffs[0])
        raise ValueError("power must be -1 or 1")

    def inverse(self):
        """Power-series inverse when ``M(0)`` is invertible (Neumann recursion)."""
        if self.has_pole:
            raise ValueError("inverse() needs a pole-free law with invertible M(0)")
        return MaterialLaw(series_inverse(self.coeffs), self.eps)

    def max_coeff_diff(self, other):
        a, b = self.laurent_array(), other.laurent_array()
        K = min(len(a), len(b))
        return float(np.max(np.abs(a[:K] - b[:K]))) if K else 0.0


# -- series kernels ----------------------------------------------------------

def cauchy_product(a, b, order):
    """Truncated Cauchy product of coefficient stacks (matrix products)."""
    d1, d2 = a.shape[1], b.shape[2]
    out = np.zeros((order + 1, d1, d2), dtype=complex)
    for k in range(order + 1):
        acc = out[k]
        for j in range(max(0, k - b.shape[0] + 1), min(k, a.shape[0] - 1) + 1):
            acc += a[j] @ b[k - j]
    return out


def series_inverse(c, order=None):
    """Coefficients of ``(sum z^k c_k)^{-1}`` given invertible ``c_0``."""
    order = c.shape[0] - 1 if order is None else order
    d = c.shape[1]
    inv0 = np.linalg.inv(c[0])
    out = np.zeros((order + 1, d, d), dtype=complex)
    out[0] = inv0
    for k in range(1, order + 1):
        acc = np.zeros((d, d), dtype=complex)
        for j in range(1, min(k, c.shape[0] - 1) + 1):
            acc += c[j] @ out[k - j]
        out[k] = -inv0 @ acc
    return out


def _laurent(m):
    """(array from z^-1 upward, lowest exponent)."""
    if m.has_pole:
        return m.laurent_array(), -1
    return m.coeffs, 0


def multiply(a, b, order=None, tol=1e-10):
    """Product of two (Laurent) laws, truncated at ``order``.

    Works for rectangular blocks too when called through :func:`multiply_arrays`.
    A resulting ``z^-2`` term must vanish below ``tol`` (relative).
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    K = min(a.order, b.order) if order is None else order
    pole, coeffs = multiply_arrays(_laurent(a), _laurent(b), K, tol)
    return MaterialLaw(coeffs, min(a.eps, b.eps), pole=pole)


def multiply_arrays(la, lb, order, tol=1e-10):
    """Multiply ``(array, lowest_exponent)`` pairs; return ``(pole, coeffs)``."""
    (xa, ea), (xb, eb) = la, lb
    low = ea + eb
    n = order - low + 1
    prod = cauchy_product(xa, xb, n - 1)
    if low == -2:
        scale = max(np.max(np.abs(xa)), np.max(np.abs(xb)), 1.0) ** 2
        if np.max(np.abs(prod[0]), initial=0.0) > tol * scale:
            raise ValueError("product has a z^-2 term; not representable")
        prod = prod[1:]
        low = -1
    if low == -1:
        return prod[0], prod[1: order + 2]
    return None, prod[: order + 1]


def compress(m, u, v):
    """Block ``u^* M v`` of a law as a square law (``u``, ``v`` same width).

    For rectangular blocks use :func:`block_coeffs`.
    """
    if u.shape[1] != v.shape[1]:
        raise ValueError("compress needs equally wide bases; use block_coeffs")
    c = adjoint(u)[None] @ m.coeffs @ v[None]
    pole = None if m.pole is None else adjoint(u) @ m.pole @ v
    return MaterialLaw(c, m.eps, pole=pole, meta=m.meta)


def block_coeffs(m, u, v):
    """Laurent array and lowest exponent of the block ``u^* M v``."""
    arr, low = _laurent(m)
    return adjoint(u)[None] @ arr @ v[None], low


def evaluate(m, z):
    """Evaluate ``pole/z + sum_k z^k M_k`` at ``z``."""
    return m.evaluate(z)


def coeff_bound(m, n, rtol=1e-9):
    """Cauchy bound ``sup_bound * (2/eps)^n`` on the ``n``-th coefficient.

    Raises :class:`BoundViolated` if the stored coefficient exceeds it,
    which means the ``sup_bound`` metadata is inconsistent with the series.
    """
    if m.has_pole:
        raise ValueError("coefficient bounds apply to pole-free laws")
    if n < 0:
        raise ValueError("n must be non-negative")
    bound = m.sup_bound * (2.0 / m.eps) ** n
    if n <= m.order:
        actual = opnorm(m.coeffs[n])
        if actual > bound * (1 + rtol) + 1e-300:
            raise BoundViolated(
                f"||M_{n}|| = {actual:.6g} exceeds sup_bound*(2/eps)^{n} = {bound:.6g}", n)
    return bound


def check_coeff_bounds(m):
    """Apply :func:`coeff_bound` to every stored coefficient."""
    return [coeff_bound(m, n) for n in range(m.order + 1)]


def tail_bound(m, k):
    """Bound ``2 sup_bound (2/eps)^k`` on ``sum_{n>=k} z^{n-k} M_n`` for ``|z| <= eps/4``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return 2.0 * m.sup_bound * (2.0 / m.eps) ** k


def linear_combination(alpha, m, beta, n):
    return m * alpha + n * beta
