"""Container and serialization for homogenization results."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from ..mlaw.io import law_to_dict, matrix_to_json


@dataclass
class HomogenizationResult:
    """Limit law ``N`` with the four eta-limits and convergence diagnostics.

    ``eta1`` .. ``eta4`` are ``None`` when the corresponding block is empty.
    ``eta3`` and ``eta4`` are rectangular and stored as coefficient stacks
    ``(K+1, t, s)`` and ``(K+1, s, t)``. ``diagnostics`` holds rows
    ``{"n", "eta_index", "probe_residual"}``.
    """

    N: object
    eta1: object
    eta2: object
    eta3: np.ndarray | None
    eta4: np.ndarray | None
    diagnostics: list
    range_preserved: bool
    certificate: object
    split: int
    range_angle: float = 0.0
    limit_status: dict = field(default_factory=dict)
    eta2_inverse: object = None
    meta: dict = field(default_factory=dict)

    @property
    def subsequence(self):
        return self.limit_status.get("status") == "subsequence"

    def to_dict(self):
        def law(x):
            return None if x is None else law_to_dict(x)

        def stack(x):
            return None if x is None else [matrix_to_json(c) for c in x]

        cert = None if self.certificate is None else self.certificate.as_dict()
        return {
            "split": self.split,
            "N": law(self.N),
            "eta1": law(self.eta1),
            "eta2": law(self.eta2),
            "eta3": stack(self.eta3),
            "eta4": stack(self.eta4),
            "range_preserved": bool(self.range_preserved),
            "range_angle": float(self.range_angle),
            "certificate": cert,
            "limit_status": _plain(self.limit_status),
            "diagnostics": _plain(self.diagnostics),
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    def write_diagnostics_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "eta_index", "probe_residual"])
            for row in self.diagnostics:
                w.writerow([row["n"], row["eta_index"], f"{row['probe_residual']:.6g}"])


def _plain(x):
    """Recursively convert numpy scalars/arrays into JSON-ready values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return matrix_to_json(np.atleast_2d(x))
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x
