"""Spatial operators, random generators and preset problems."""

from .spatial import (ProjectionPair, SpatialOperatorPair, build_grad_div_1d,
                      nullspace_projections)
from .presets import (PRESETS, count_effective_coefficient, count_law, count_steady_response,
                      get_kappa, get_preset, preset_counterexample_compactness,
                      preset_counterexample_positivity, preset_counterexample_range,
                      preset_heat1d, preset_ode_two_phase)
from .thermopiezo import build_thermopiezo_law, check_condition
