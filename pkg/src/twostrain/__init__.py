"""Two-strain vaccination model with general incidence.

Library layout:

- incidence: transmission-rate families and hypothesis checks
- model: parameters, state, vector field, Jacobian, thresholds
- equilibria: residual-certified equilibrium solvers
- stability: coefficient-based classification, eigensolver cross-checks,
  numerical global-stability scans
- simulate: adaptive integration, invariance monitoring, convergence events
- scenario: flat text scenario files
- analysis: whole-scenario reports and parameter sweeps
- benchmarks: built-in reproduction runs with embedded expected values
- cli: command-line verbs (analyze, simulate, sweep, check-global, reproduce)
"""

from .analysis import (
    AnalysisReport,
    SweepRow,
    analyze,
    apply_sweep_value,
    render_report,
    sweep,
    turning_point,
)
from .benchmarks import (
    EXAMPLE_IDS,
    FlagCheck,
    ReproductionResult,
    ValueCheck,
    build_scenario,
    render_reproduction,
    reproduce,
)
from .equilibria import (
    Equilibrium,
    ExistenceCondition,
    disease_free,
    solve_coexistence,
    solve_strain1,
    solve_strain2,
    strain1_balance,
    strain2_balance,
    strain2_coordinates,
    strain2_discriminant,
)
from .errors import (
    ConfigError,
    DomainError,
    IntegrationError,
    PreconditionError,
    SolverError,
    TwoStrainError,
    UnsupportedLimitError,
)
from .incidence import HypothesisCheck, HypothesisReport, IncidenceSpec
from .model import (
    RESIDUAL_TOL,
    ModelParams,
    State,
    Thresholds,
    invasion_numbers,
    jacobian,
    require_certified,
    residual,
    thresholds,
    vector_field,
)
from .scenario import Scenario, load_scenario, parse_scenario, serialize_scenario
from .simulate import (
    IntegratorOptions,
    InvarianceReport,
    PersistenceSummary,
    Trajectory,
    TrajectoryEvent,
    adaptive_rk45,
    detect_convergence,
    integrate,
    monitor_invariance,
    persistence_proxy,
)
from .stability import (
    GridScanSummary,
    StabilityReport,
    Verdict,
    classify_coexistence,
    classify_disease_free,
    classify_strain1,
    classify_strain2,
    coexistence_lyapunov_scan,
    coexistence_lyapunov_values,
    eigen_classify,
    strain2_lyapunov_scan,
    strain2_lyapunov_surface,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "ConfigError",
    "DomainError",
    "EXAMPLE_IDS",
    "Equilibrium",
    "ExistenceCondition",
    "FlagCheck",
    "GridScanSummary",
    "HypothesisCheck",
    "HypothesisReport",
    "IncidenceSpec",
    "IntegrationError",
    "IntegratorOptions",
    "InvarianceReport",
    "ModelParams",
    "PersistenceSummary",
    "PreconditionError",
    "RESIDUAL_TOL",
    "ReproductionResult",
    "Scenario",
    "SolverError",
    "StabilityReport",
    "State",
    "SweepRow",
    "Thresholds",
    "Trajectory",
    "TrajectoryEvent",
    "TwoStrainError",
    "UnsupportedLimitError",
    "ValueCheck",
    "Verdict",
    "adaptive_rk45",
    "analyze",
    "apply_sweep_value",
    "build_scenario",
    "classify_coexistence",
    "classify_disease_free",
    "classify_strain1",
    "classify_strain2",
    "coexistence_lyapunov_scan",
    "coexistence_lyapunov_values",
    "detect_convergence",
    "disease_free",
    "eigen_classify",
    "integrate",
    "invasion_numbers",
    "jacobian",
    "load_scenario",
    "monitor_invariance",
    "parse_scenario",
    "persistence_proxy",
    "render_report",
    "render_reproduction",
    "reproduce",
    "require_certified",
    "residual",
    "serialize_scenario",
    "solve_coexistence",
    "solve_strain1",
    "solve_strain2",
    "strain1_balance",
    "strain2_balance",
    "strain2_coordinates",
    "strain2_discriminant",
    "strain2_lyapunov_scan",
    "strain2_lyapunov_surface",
    "sweep",
    "thresholds",
    "turning_point",
    "vector_field",
]
