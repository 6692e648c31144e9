"""Nominal and robust inflow optimization for particle precipitation.

The forward model is a discrete exact method of moments; the robust problem
minimizes the worst case over two-level step perturbations of the inflow with
a proximal bundle method.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BadInitialControl,
    ConfigError,
    DegenerateCharacteristic,
    DimensionMismatch,
    EmptyPopulation,
    InfeasibleSet,
    InvalidGrid,
    InvalidSize,
    ModelInconsistency,
    NumericalBlowup,
    PrecipError,
)
from .grid import AdmissibleSet, TimeGrid, make_uniform_grid, project_to_admissible, is_admissible  # noqa: E402
from .kinetics import ClassicalKinetics, KineticsParams, default_kinetics, size_factor_g1  # noqa: E402
from .emom import ForwardModel, MomentSet, ObjectiveSpec, StateTrajectory, objective, solve_state, total_concentration  # noqa: E402
from .sensitivity import fd_gradient, gradient_objective, state_residual  # noqa: E402
from .uncertainty import UncertaintyScenario, UncertaintySet, enumerate_scenarios, worst_case  # noqa: E402
from .nominal import NominalConfig, optimize_nominal  # noqa: E402
from .bundle import BundleConfig, acceptance_test, optimize_robust, proximal_bundle, solve_prox_subproblem  # noqa: E402
from .config import RunConfig, load_config, parse_config  # noqa: E402
