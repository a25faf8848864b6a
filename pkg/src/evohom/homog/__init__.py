"""Homogenization pipelines and periodic coefficient fields."""

from .fields import PeriodicField, cell_average, harmonic_mean
from .pipelines import (assemble_n_at, coarse_probes, homogenize_nullsplit, homogenize_ode,
                        homogenize_p2, invert_laurent)
from .result import HomogenizationResult
from .gconv import GConvergenceReport, check_g_convergence, solution_map
from .heat import HeatLimitSystem, heat_limit_system
