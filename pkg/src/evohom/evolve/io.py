"""Export of time-domain solutions as CSV or the EVH1 binary layout.

EVH1 layout (little-endian): magic ``b"EVH1"``, ``uint64`` sample count,
``uint64`` component count, ``float64`` times, then the solution as
``float64`` (re, im) pairs in row-major (time, component) order.
"""

from __future__ import annotations

import csv

import numpy as np

MAGIC = b"EVH1"


def _as_2d(u):
    u = np.asarray(u)
    return u[:, None] if u.ndim == 1 else u


def write_csv(path, t, u):
    """Long-format CSV with columns ``t, component, re, im``."""
    u = _as_2d(u)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "component", "re", "im"])
        for ti, row in zip(t, u):
            for j, x in enumerate(row):
                x = complex(x)
                w.writerow([repr(float(ti)), j, repr(x.real), repr(x.imag)])


def read_csv(path):
    """Inverse of :func:`write_csv`; returns ``(t, u)``."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1, ndmin=2)
    ncomp = int(data[:, 1].max()) + 1
    data = data.reshape(-1, ncomp, 4)
    return data[:, 0, 0], data[:, :, 2] + 1j * data[:, :, 3]


def write_evh1(path, t, u):
    u = _as_2d(u).astype("<c16")
    t = np.asarray(t, dtype="<f8")
    if u.shape[0] != t.shape[0]:
        raise ValueError("t and u must have the same number of samples")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.array(u.shape, dtype="<u8").tobytes())
        fh.write(t.tobytes())
        fh.write(np.ascontiguousarray(u).tobytes())


def read_evh1(path):
    """Return ``(t, u)`` from an EVH1 file."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path} is not an EVH1 file")
        nt, nc = (int(x) for x in np.frombuffer(fh.read(16), dtype="<u8"))
        t = np.frombuffer(fh.read(8 * nt), dtype="<f8").copy()
        u = np.frombuffer(fh.read(16 * nt * nc), dtype="<c16").reshape(nt, nc).copy()
    return t, u


def export_solution(path, report_or_t, u=None):
    """Write ``.csv`` or EVH1 (any other suffix) from a report or ``(t, u)``."""
    if u is None:
        t, u = report_or_t.t, report_or_t.u
    else:
        t = report_or_t
    path = str(path)
    if path.endswith(".csv"):
        write_csv(path, t, u)
    else:
        write_evh1(path, t, u)
