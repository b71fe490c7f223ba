"""Numerical stabilisation of a viscous nonlinear transport equation by a
control localised in part of the domain, with verification tooling: linear
dichotomy ensembles, positivity/Harnack probes, closed-form barriers, and a
reachability-obstruction experiment.
"""

from ._kernels import backend
from .analysis import (
    DichotomyScenario,
    DichotomyVerdict,
    EnsembleDichotomyReport,
    HarnackEstimate,
    PositivityViolationError,
    dichotomy_probe,
    ensemble_dichotomy,
    harnack_probe,
    make_rho_ensemble,
    rho_bound,
    sup_bound_probe,
)
from .barriers import (
    Barrier,
    ComparisonReport,
    NonControllabilityReport,
    check_subsolution,
    check_supersolution,
    comparison_check,
    lambda_budget,
    non_controllability_experiment,
)
from .config import RunReport, ScenarioConfig, parse_config, run, sweep
from .control import (
    ChiEval,
    ControlledRun,
    CutoffSystem,
    CycleRecord,
    DecayFit,
    build_controlled_trajectory,
    eval_chi,
    fit_decay,
    reconstruct_zeta,
    smoothstep,
    zeta_profile,
)
from .grid import (
    Field,
    Grid,
    Trajectory,
    interpolation_ratio,
    norm_h1,
    norm_h2,
    norm_l1,
    norm_l1_on,
    norm_l2,
    norm_linf,
)
from .solver import (
    NEWTON_MAX_ITER,
    NEWTON_TOL,
    BurgersProblem,
    LinearProblem,
    NumericBlowupError,
    SingularSystemError,
    SolverError,
    StepFailureError,
    duality_pairing_drift,
    solve_burgers,
    solve_dual,
    solve_linear,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend",
    # grid
    "Grid",
    "Field",
    "Trajectory",
    "norm_l1",
    "norm_l1_on",
    "norm_l2",
    "norm_linf",
    "norm_h1",
    "norm_h2",
    "interpolation_ratio",
    # solver
    "BurgersProblem",
    "LinearProblem",
    "solve_burgers",
    "solve_linear",
    "solve_dual",
    "duality_pairing_drift",
    "SolverError",
    "StepFailureError",
    "NumericBlowupError",
    "SingularSystemError",
    "NEWTON_TOL",
    "NEWTON_MAX_ITER",
    # control
    "CutoffSystem",
    "ChiEval",
    "eval_chi",
    "smoothstep",
    "zeta_profile",
    "reconstruct_zeta",
    "build_controlled_trajectory",
    "ControlledRun",
    "CycleRecord",
    "DecayFit",
    "fit_decay",
    # analysis
    "rho_bound",
    "DichotomyVerdict",
    "DichotomyScenario",
    "dichotomy_probe",
    "make_rho_ensemble",
    "ensemble_dichotomy",
    "EnsembleDichotomyReport",
    "HarnackEstimate",
    "harnack_probe",
    "sup_bound_probe",
    "PositivityViolationError",
    # barriers
    "Barrier",
    "lambda_budget",
    "check_supersolution",
    "check_subsolution",
    "comparison_check",
    "ComparisonReport",
    "non_controllability_experiment",
    "NonControllabilityReport",
    # config
    "ScenarioConfig",
    "parse_config",
    "RunReport",
    "run",
    "sweep",
]
