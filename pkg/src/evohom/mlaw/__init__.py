"""Material-law series algebra, bounds and positivity certification."""

from .io import law_from_dict, law_to_dict, load_law, save_law
from .law import (MaterialLaw, check_coeff_bounds, coeff_bound, compress, evaluate,
                  multiply, series_inverse, tail_bound)
from .limits import joint_series_limit, series_limit
from .positivity import (PositivityCertificate, PositivitySample, ZeroOrderCheck,
                         certify, check_zero_order, sample_positivity)

__all__ = [
    "MaterialLaw", "evaluate", "coeff_bound", "check_coeff_bounds", "tail_bound", "compress",
    "multiply", "series_inverse", "series_limit", "joint_series_limit", "check_zero_order", "certify",
    "sample_positivity", "PositivityCertificate", "PositivitySample", "ZeroOrderCheck",
    "law_to_dict", "law_from_dict", "save_law", "load_law",
]
