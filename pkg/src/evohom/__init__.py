"""Material laws, homogenization limits and causal solvers for evolutionary equations."""

from . import errors
from .mlaw import (MaterialLaw, certify, check_zero_order, coeff_bound, evaluate,
                   sample_positivity, series_limit, tail_bound)

__version__ = "0.1.0"

__all__ = ["errors", "MaterialLaw", "evaluate", "coeff_bound", "tail_bound",
           "check_zero_order", "certify", "sample_positivity", "series_limit"]
