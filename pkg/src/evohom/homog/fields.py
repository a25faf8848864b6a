"""Piecewise-constant periodic coefficient fields on the unit cell."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AliasError, SingularPiece


@dataclass(frozen=True)
class PeriodicField:
    """Values on a uniform partition of ``[0, 1)``, extended 1-periodically.

    ``samples`` has shape ``(p,)`` for scalar fields or ``(p, k, k)`` for
    matrix fields. ``bounds = (alpha, beta)`` is checked against the
    eigenvalues of every piece when the pieces are Hermitian.
    """

    samples: np.ndarray
    bounds: tuple | None = None

    def __post_init__(self):
        s = np.asarray(self.samples)
        s = s.astype(complex) if np.iscomplexobj(s) else s.astype(float)
        if s.ndim not in (1, 3) or s.shape[0] == 0:
            raise ValueError("samples must have shape (p,) or (p, k, k)")
        if not np.all(np.isfinite(s)):
            raise ValueError("field samples must be finite")
        object.__setattr__(self, "samples", s)
        if self.bounds is not None:
            lo, hi = self.bounds
            if not 0 < lo <= hi:
                raise ValueError("bounds must satisfy 0 < alpha <= beta")
            eig = self._eigenvalues()
            if eig is None:
                raise ValueError("bounds apply to real or Hermitian fields only")
            tol = 1e-12 * max(1.0, hi)
            if eig.min() < lo - tol or eig.max() > hi + tol:
                raise ValueError(f"field values leave [{lo}, {hi}]")

    @classmethod
    def two_phase(cls, a, b, bounds=None):
        """``a`` on ``[0, 1/2)`` and ``b`` on ``[1/2, 1)``."""
        return cls(np.array([a, b]), bounds)

    @property
    def pieces(self):
        return self.samples.shape[0]

    @property
    def is_scalar(self):
        return self.samples.ndim == 1

    def _eigenvalues(self):
        s = self.samples
        if self.is_scalar:
            return None if np.iscomplexobj(s) and np.any(s.imag != 0) else s.real
        if not np.allclose(s, np.conj(np.swapaxes(s, 1, 2))):
            return None
        return np.linalg.eigvalsh(s)

    def inverse(self):
        """Pointwise inverse field."""
        s = self.samples
        if self.is_scalar:
            if np.any(np.abs(s) == 0):
                raise SingularPiece("field has a zero piece")
            return PeriodicField(1.0 / s)
        sv = np.linalg.svd(s, compute_uv=False)
        if np.any(sv[:, -1] <= 1e-14 * np.maximum(sv[:, 0], 1e-300)):
            raise SingularPiece("field has a singular piece")
        return PeriodicField(np.linalg.inv(s))

    def shifted(self, c):
        """Field ``x -> f(x) + c`` (``c * I`` for matrix fields)."""
        if self.is_scalar:
            return PeriodicField(self.samples + c)
        k = self.samples.shape[1]
        return PeriodicField(self.samples + c * np.eye(k))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.floor(np.mod(x, 1.0) * self.pieces).astype(int) % self.pieces
        return self.samples[idx]

    def grid_values(self, n, grid):
        """Values of ``x -> f(n x)`` at the midpoints of ``grid`` cells of ``[0, 1]``.

        Each cell must lie inside one piece, which holds iff ``n * pieces``
        divides ``grid``; otherwise :class:`AliasError` is raised.
        """
        n, grid = int(n), int(grid)
        if n < 1 or grid < 1 or grid % (n * self.pieces):
            raise AliasError(f"n={n} with {self.pieces} pieces does not align with grid {grid}")
        x = (np.arange(grid) + 0.5) / grid
        return self.evaluate(n * x)


def cell_average(f):
    """Exact mean of the field over one period."""
    return f.samples.mean(axis=0)


def harmonic_mean(f):
    """``(mean of f^-1)^-1``; raises :class:`SingularPiece` on a singular piece."""
    avg = cell_average(f.inverse())
    if f.is_scalar:
        if avg == 0:
            raise SingularPiece("mean of the inverse vanishes")
        return 1.0 / avg
    return np.linalg.inv(avg)
