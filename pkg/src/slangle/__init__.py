"""Angle calculus for symmetric matrices, the associated cone constraints,
partial Legendre transforms, obstacle envelopes, and degenerate space-time
Dirichlet solves."""

from .angles import (
    AngleResult,
    Phase,
    SymMatrix,
    block_decompose,
    degenerate_identity,
    in_degenerate_locus,
    lifted_angle,
    resolvent_parts,
    scaled_angle,
    schur_det,
    spacetime_angle_direct,
    spacetime_lifted_angle,
)
from .dsl import (
    BoundaryData,
    DSLSolution,
    VerifierReport,
    hessian_of_inf,
    obstacle_for_tau,
    read_solution_csv,
    solve_dsl,
    verify_angle_residual,
    verify_min_principle,
    verify_time_convexity,
    write_solution_csv,
)
from .errors import ConvergenceError, DomainError, SamplingError
from .solvers import (
    EnvelopeProblem,
    SpaceGrid,
    as_boundary_array,
    convex_envelope_1d,
    dirichlet,
    discrete_hessian_angle,
    envelope,
    envelope_oracle,
)
from .subeq import (
    Membership,
    in_Fc,
    in_calFc,
    in_dual_calFc,
    sample_Fc_member,
    sample_calFc_member,
)
from .transform import (
    SampledFamily,
    inverse_partial_legendre,
    partial_legendre,
    slope_range,
)

__version__ = "0.1.0"

__all__ = [
    "AngleResult",
    "BoundaryData",
    "ConvergenceError",
    "DSLSolution",
    "DomainError",
    "EnvelopeProblem",
    "Membership",
    "Phase",
    "SampledFamily",
    "SamplingError",
    "SpaceGrid",
    "SymMatrix",
    "VerifierReport",
    "as_boundary_array",
    "block_decompose",
    "convex_envelope_1d",
    "degenerate_identity",
    "dirichlet",
    "discrete_hessian_angle",
    "envelope",
    "envelope_oracle",
    "hessian_of_inf",
    "in_Fc",
    "in_calFc",
    "in_degenerate_locus",
    "in_dual_calFc",
    "inverse_partial_legendre",
    "lifted_angle",
    "obstacle_for_tau",
    "partial_legendre",
    "read_solution_csv",
    "resolvent_parts",
    "sample_Fc_member",
    "sample_calFc_member",
    "scaled_angle",
    "schur_det",
    "slope_range",
    "solve_dsl",
    "spacetime_angle_direct",
    "spacetime_lifted_angle",
    "verify_angle_residual",
    "verify_min_principle",
    "verify_time_convexity",
    "write_solution_csv",
]
