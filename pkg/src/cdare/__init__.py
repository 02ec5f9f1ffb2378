"""Solvers and diagnostics for conjugate discrete-time algebraic
Riccati equations X = H +/- A^H conj(X) (I + G conj(X))^-1 A."""

__version__ = "0.1.0"

from . import errors
from .analysis import (
    SolvabilityVerdict,
    SpectralDiagnostics,
    check_solvability,
    closed_loop_S1,
    closed_loop_T1,
    empirical_order,
    error_identity_check,
    match_spectra,
    predict_iterations,
)
from .bench import (
    EnsembleSpec,
    ScalarCase,
    TrialRecord,
    TrialStats,
    gen_random_problem,
    gen_scalar_problem,
    run_ensemble,
    scalar_family_table,
)
from .matcore import (
    UNIT_ROUNDOFF,
    HermitianVerdict,
    conj,
    conj_transpose,
    hermitian_verdict,
    loewner_geq,
    smw_inverse,
    solve_linear,
    spectral_radius,
    stein_solve_conjugate,
)
from .model import (
    CdareProblem,
    DareTriple,
    ResidualPair,
    apply_f,
    apply_f_squared,
    dual_problem,
    problem_from_dict,
    problem_to_dict,
    residuals,
    transform_to_dare,
)
from .solvers import (
    IterTrace,
    SolveReport,
    SolverConfig,
    accelerated_solve,
    fixed_point_solve,
    negative_solution,
    semigroup_combine,
    semigroup_step,
    solve,
)

__all__ = [
    "__version__",
    "errors",
    "UNIT_ROUNDOFF",
    "CdareProblem",
    "DareTriple",
    "ResidualPair",
    "HermitianVerdict",
    "SolverConfig",
    "SolveReport",
    "IterTrace",
    "SpectralDiagnostics",
    "SolvabilityVerdict",
    "EnsembleSpec",
    "ScalarCase",
    "TrialRecord",
    "TrialStats",
    "conj",
    "conj_transpose",
    "solve_linear",
    "smw_inverse",
    "spectral_radius",
    "hermitian_verdict",
    "loewner_geq",
    "stein_solve_conjugate",
    "apply_f",
    "apply_f_squared",
    "transform_to_dare",
    "residuals",
    "dual_problem",
    "problem_to_dict",
    "problem_from_dict",
    "solve",
    "fixed_point_solve",
    "accelerated_solve",
    "semigroup_step",
    "semigroup_combine",
    "negative_solution",
    "check_solvability",
    "closed_loop_T1",
    "closed_loop_S1",
    "error_identity_check",
    "predict_iterations",
    "empirical_order",
    "match_spectra",
    "gen_random_problem",
    "gen_scalar_problem",
    "run_ensemble",
    "scalar_family_table",
]
