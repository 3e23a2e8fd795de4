"""Numerical toolkit for a Leggett-type inequality on non-local hidden-variable models.

Poincare-sphere geometry, an explicit hidden-variable model, quantum
predictions, the inequalities with their error propagation, a simulated
coincidence-counting experiment and a numerical audit of the bound.
"""
from .errors import (ConfigError, DegenerateAngle, DegeneratePlane, EmptyTable, GeometryError, ModelInvalid,
                     NlhvError, NoViolation)
from .geometry import Plane, PlanePair, PoincareVector, PolarizerSetting, planes_orthogonal, polarizer_to_poincare
from .inequalities import (chsh_value, critical_visibility_chsh_here, critical_visibility_chsh_standard,
                           critical_visibility_nlhv, find_phi_max, leggett_bound, leggett_lhs,
                           quantum_chsh_at_settings, quantum_leggett_lhs, violation_window)
from .nlhv_model import SourceModel
from .experiment import ExperimentConfig, run_protocol, sweep_phi

__version__ = "0.1.0"
