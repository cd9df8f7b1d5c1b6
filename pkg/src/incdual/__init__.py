"""Duality toolkit for convex Mayer control of second-order discrete
evolution inclusions.

The package builds discrete problems with set-valued second-order
dynamics, evaluates Hamiltonians, M-functions, and conjugate calculus,
solves the primal and reduced dual problems, verifies adjoint
Euler-Lagrange certificates, and bridges mesh discretizations of the
continuous-time problem to their duals.
"""

from .convex_kernel import (
    Affine,
    Ball,
    Box,
    ConvexFn,
    ConvexSet,
    CoordinateSelect,
    ExtReal,
    HalfSquaredNorm,
    MINUS_INF,
    NormOne,
    PLUS_INF,
    Polytope,
    Quadratic,
    Sampled,
    Singleton,
    compose_linear,
    conjugate,
    fenchel_residual,
    infconv_numeric,
    lf_numeric,
    minkowski_sum,
    project,
    scale_set,
    subgradient,
    support,
    support_attainment_residual,
)
from .inclusion_model import (
    DiscreteProblem,
    SemilinearMap,
    TabulatedMap,
    Trajectory,
    argmax_rep,
    hamiltonian,
    m_function,
    simulate,
)
from .discretization import (
    ContinuousProblem,
    GridDualVars,
    MeshSpec,
    PascalTransform,
    build_pda,
    dual_bridge,
    g_map,
    lift_matrix,
    m_g_via_formula,
    pascal_args,
    phi_lift_conjugate,
    support_bridge_check,
    terminal_bridge,
)
from .solvers import (
    BudgetError,
    DualSolution,
    PrimalSolution,
    SolveOptions,
    adjoint_recursion,
    brute_dual,
    brute_primal,
    dual_sequences_from_seed,
    reduced_dual_objective,
    solve_dual,
    solve_primal,
)
from .duality import (
    CertificateReport,
    DualVariables,
    certify,
    dual_objective,
    dual_objective_da,
    nondegeneracy_probe,
    weak_duality_gap,
)
from ._backend import active_backend, enumerate_primal

__version__ = "0.1.0"

__all__ = [
    "Affine",
    "Ball",
    "Box",
    "BudgetError",
    "CertificateReport",
    "ContinuousProblem",
    "ConvexFn",
    "ConvexSet",
    "CoordinateSelect",
    "DiscreteProblem",
    "DualSolution",
    "DualVariables",
    "ExtReal",
    "GridDualVars",
    "HalfSquaredNorm",
    "MINUS_INF",
    "MeshSpec",
    "NormOne",
    "PLUS_INF",
    "PascalTransform",
    "Polytope",
    "PrimalSolution",
    "Quadratic",
    "Sampled",
    "SemilinearMap",
    "Singleton",
    "SolveOptions",
    "TabulatedMap",
    "Trajectory",
    "active_backend",
    "adjoint_recursion",
    "argmax_rep",
    "brute_dual",
    "brute_primal",
    "build_pda",
    "certify",
    "compose_linear",
    "conjugate",
    "dual_bridge",
    "dual_objective",
    "dual_objective_da",
    "dual_sequences_from_seed",
    "enumerate_primal",
    "fenchel_residual",
    "g_map",
    "hamiltonian",
    "infconv_numeric",
    "lf_numeric",
    "lift_matrix",
    "m_function",
    "m_g_via_formula",
    "minkowski_sum",
    "nondegeneracy_probe",
    "pascal_args",
    "phi_lift_conjugate",
    "project",
    "reduced_dual_objective",
    "scale_set",
    "simulate",
    "solve_dual",
    "solve_primal",
    "subgradient",
    "support",
    "support_attainment_residual",
    "support_bridge_check",
    "terminal_bridge",
    "weak_duality_gap",
]
