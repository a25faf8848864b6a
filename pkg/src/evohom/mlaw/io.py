"""JSON (de)serialization of material laws.

Matrices are stored row-major as nested lists of ``[re, im]`` pairs::

    {"dim": 2, "eps": 1.0, "K": 1, "pole": [[...]], "coeffs": [M0, M1]}
"""

import json

import numpy as np

from .law import MaterialLaw


def matrix_to_json(a):
    a = np.asarray(a, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in a]


def matrix_from_json(rows):
    a = np.asarray(rows, dtype=float)
    if a.ndim == 3 and a.shape[-1] == 2:
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim == 2:
        return a.astype(complex)
    raise ValueError(f"matrix must be rows of [re, im] pairs, got shape {a.shape}")


def law_to_dict(m):
    out = {"dim": m.dim, "eps": m.eps, "K": m.order,
           "coeffs": [matrix_to_json(c) for c in m.coeffs]}
    if m.has_pole:
        out["pole"] = matrix_to_json(m.pole)
    if m.declared_sup is not None:
        out["sup_bound"] = m.declared_sup
    return out


def law_from_dict(d):
    try:
        coeffs = [matrix_from_json(c) for c in d["coeffs"]]
        eps = float(d["eps"])
    except KeyError as exc:
        raise ValueError(f"material law is missing field {exc.args[0]!r}") from None
    dim = int(d.get("dim", coeffs[0].shape[0]))
    order = int(d.get("K", len(coeffs) - 1))
    if any(c.shape != (dim, dim) for c in coeffs):
        raise ValueError(f"every coefficient must be {dim}x{dim}")
    pole = matrix_from_json(d["pole"]) if d.get("pole") is not None else None
    return MaterialLaw.from_list(coeffs, eps, pole=pole, order=order,
                                 sup_bound=d.get("sup_bound"))


def save_law(m, path):
    with open(path, "w") as fh:
        json.dump(law_to_dict(m), fh, indent=1)


def load_law(path):
    with open(path) as fh:
        return law_from_dict(json.load(fh))
