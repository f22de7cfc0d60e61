"""Non-holonomic constrained variational problems: admissibility,
gauge equivalence, variational flows, Pontryagin extremals and
abnormality analysis. Thin re-export of the compiled core."""

from ._core import (
    AbnormalityReport,
    AdmissibilityReport,
    DeformationReport,
    EvalError,
    Expression,
    ExtremalSolution,
    FundamentalMatrix,
    GaugeVerdict,
    InfinitesimalDeformation,
    LiftedCurve,
    ParseError,
    PPCEvaluation,
    ProblemFile,
    ProblemFileError,
    ProblemSpec,
    Reconstruction,
    SampledCurve,
    ShootingConfig,
    UniquenessReport,
    abnormality_index,
    action,
    check_admissible,
    check_infinitesimal_admissibility,
    check_rank,
    endpoint_functional,
    fundamental_matrix,
    gauge_equivalent,
    gauge_transform,
    integrate_admissible,
    load_problem_file,
    parse_problem_json,
    pontryagin_hamiltonian,
    ppc_action,
    read_curve_csv,
    reconstruct_costates,
    shoot,
    solve_controls,
    variational_flow,
    verify_normal_uniqueness,
    write_curve_csv,
    write_lifted_csv,
)

__all__ = [
    "AbnormalityReport",
    "AdmissibilityReport",
    "DeformationReport",
    "EvalError",
    "Expression",
    "ExtremalSolution",
    "FundamentalMatrix",
    "GaugeVerdict",
    "InfinitesimalDeformation",
    "LiftedCurve",
    "ParseError",
    "PPCEvaluation",
    "ProblemFile",
    "ProblemFileError",
    "ProblemSpec",
    "Reconstruction",
    "SampledCurve",
    "ShootingConfig",
    "UniquenessReport",
    "abnormality_index",
    "action",
    "check_admissible",
    "check_infinitesimal_admissibility",
    "check_rank",
    "endpoint_functional",
    "fundamental_matrix",
    "gauge_equivalent",
    "gauge_transform",
    "integrate_admissible",
    "load_problem_file",
    "parse_problem_json",
    "pontryagin_hamiltonian",
    "ppc_action",
    "read_curve_csv",
    "reconstruct_costates",
    "shoot",
    "solve_controls",
    "variational_flow",
    "verify_normal_uniqueness",
    "write_curve_csv",
    "write_lifted_csv",
]
