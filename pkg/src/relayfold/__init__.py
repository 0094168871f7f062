"""Relay-switched planar ODEs near a fold-fold point.

Simulation with hysteresis switching, half maps and the composed return
map, normal-form coefficients with the bifurcation verdict, and limit-cycle
location and classification.
"""

from .cycle_finder import (CycleSolution, ScanResult, accumulation_point, bifurcation_scan,
                           find_cycle, iterate_map)
from .errors import *  # noqa: F401,F403
from .hybrid_sim import HybridTrajectory, StopRule, simulate
from .integrator import CrossingEvent, DenseStep, ToleranceSet, advance_to_line, integrate_mode
from .model_core import (Jet, Mode, ModelSpec, abs_model, eval_field, jet_at, mass_spring,
                         nullcline_u, poly_model)
from .normal_form import (FoldCoefficients, Region, TheoremVerdict, check_theorem,
                          default_region, fold_coefficients, predicted_fixed_point)
from .poincare import (half_map_P, half_map_Ptilde, point_transform, poincare_map,
                       residual_sweep)

__version__ = "0.1.0"
