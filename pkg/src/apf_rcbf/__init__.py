"""Potential-field navigation and barrier-filtered controllers for the
single integrator, with an exact QP oracle and a simulation CLI.

The headline fact the package is built around (and tests numerically): the
classic gradient-descent potential-field controller is *identical* to a
min-norm stabilizer passed through a reciprocal-barrier safety filter with a
particular tightening — and generalizing the two tightening terms yields a
family of controllers that trade how early and how hard they react to
obstacles.
"""

from ._backend import BACKEND
from .clf import ClfTerms, SigmaSelector, check_clf_decrease, clf_terms, nominal_control, sigma_value
from .errors import (ApfRcbfError, ConfigError, InfeasibleConstraintError,
                     InsideObstacleError, NegativeGammaError, ScenarioValidationError)
from .fields import (FieldEval, alpha_bar, apf_control, attractive_field, f_att, f_rep,
                     repulsive_field, u_att, u_rep)
from .qp import HalfSpaceConstraint, QpSolution, sample_feasibility_check, solve_projection
from .rcbf import (FilterDiagnostics, GammaSelector, RcbfTerms, generalized_control,
                   rcbf_terms, safety_filter, special_filter_control)
from .scenario import (Obstacle, SafeSetSample, Scenario, classify_safety, load_scenario,
                       rho, save_scenario, scenario_from_dict, scenario_to_dict,
                       scenario_violations, validate_scenario)
from .simulate import (ControllerSpec, SimConfig, Trajectory, TrajectoryMetrics, metrics,
                       read_trajectory_csv, simulate, write_trajectory_csv)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # errors
    "ApfRcbfError", "ConfigError", "InfeasibleConstraintError", "InsideObstacleError",
    "NegativeGammaError", "ScenarioValidationError",
    # scenario
    "Obstacle", "SafeSetSample", "Scenario", "classify_safety", "load_scenario", "rho",
    "save_scenario", "scenario_from_dict", "scenario_to_dict", "scenario_violations",
    "validate_scenario",
    # fields
    "FieldEval", "alpha_bar", "apf_control", "attractive_field", "f_att", "f_rep",
    "repulsive_field", "u_att", "u_rep",
    # stabilizer
    "ClfTerms", "SigmaSelector", "check_clf_decrease", "clf_terms", "nominal_control",
    "sigma_value",
    # barrier filter
    "FilterDiagnostics", "GammaSelector", "RcbfTerms", "generalized_control", "rcbf_terms",
    "safety_filter", "special_filter_control",
    # QP oracle
    "HalfSpaceConstraint", "QpSolution", "sample_feasibility_check", "solve_projection",
    # simulation
    "ControllerSpec", "SimConfig", "Trajectory", "TrajectoryMetrics", "metrics",
    "read_trajectory_csv", "simulate", "write_trajectory_csv",
]
