"""Causal time-domain solver and fine-scale sweeps."""

from .io import export_solution, read_csv, read_evh1, write_csv, write_evh1
from .solver import (EvolutionProblem, SolutionReport, SparseLaw, check_causality, default_nu,
                     solve, time_symbol, weighted_norm)
from .sweep import (fine_scale_sweep, heat_forcing, heat_law, heat_problem, homogenized_solve,
                    temperature_error)
