"""Pareto front exploration by a Hopf-Lax primal-dual scheme.

Scalarized multi-objective problems are embedded in a one-parameter family of
shifted scalarizations; sweeping the shift parameter tau traces continuous
curves along (possibly nonconvex) Pareto fronts. Brute-force oracles validate
every solver result.
"""

__version__ = "0.1.0"

from .constrained import (
    ConstrainedSolveResult,
    ConstrainedSolverConfig,
    ConstraintSet,
    box_constraints,
    constrained_preconditioner,
    constrained_residual,
    dual_update_nu,
    dykstra_project,
    merit_psi_k,
    multiplier_estimate,
    solve_constrained,
)
from .core import (
    CertificationError,
    Chebyshev,
    HopfLaxParams,
    NondifferentiableError,
    NumericalError,
    PreferenceFunction,
    QuadraticRegularizer,
    SoftMax,
    VectorObjective,
    WeightedSum,
    bregman_divergence,
    jacobian_check,
)
from .oracle import (
    Dominance,
    SampleCloud,
    certification_cloud,
    convex_envelope_front,
    dominates,
    front_distance,
    greedy_pareto_filter,
    nonconvexity_witness,
    nondominated_mask,
    reference_front,
    sample_cloud,
)
from .problems import BenchmarkProblem, get_problem, problem_ids, register_problem
from .solver import (
    SolveResult,
    SolverConfig,
    certify_gap,
    dual_update_pi,
    gap_and_bound,
    merit_psi,
    primal_update_u,
    solve,
    stationarity_residual,
)
from .sweep import FrontSample, ParetoFront, TauPath, front_objective_points, sweep
