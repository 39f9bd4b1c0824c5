"""Numerical laboratory for Pohozaev-type identities.

Computes positive solutions of semilinear elliptic problems and Hamiltonian
elliptic systems on balls and rectangles, verifies the associated integral
and differential identities to quantified tolerance, and decides
non-existence criteria (critical exponents and critical hyperbolas).
"""

from .errors import (
    ConfigError,
    EvalDomainError,
    ExprSyntaxError,
    GridMismatchError,
    NoBracketError,
    NoConvergenceError,
    NormalizationViolatedError,
    PohozaevError,
    PositivityLostError,
    PositivityViolatedError,
    SolverError,
    UndeclaredSymbolError,
)
from .expr import (
    ExprNode,
    NumericAntiderivative,
    antiderivative_in,
    antiderivative_value,
    const,
    differentiate,
    evaluate,
    free_symbols,
    parse,
    simplify,
    var,
)
from .radial import (
    ProbeReport,
    RadialProblem,
    RadialSolution,
    ShootingConfig,
    Trajectory,
    integrate_pair_ivp,
    integrate_scalar_ivp,
    positivity_probe,
    shoot_pair,
    shoot_scalar,
    write_solution_csv,
)
from .rect import (
    GridSolution,
    NewtonConfig,
    RectDomain,
    assemble_residual,
    boundary_gradient,
    solve_scalar_grid,
    write_grid_csv,
)
from .identity import (
    EnergyReport,
    IdentityReport,
    ResidualStudy,
    differential_form_residual,
    energy_identities,
    equation_residual_radial,
    general_identity,
    pair_identity_radial,
    scalar_identity_grid,
    scalar_identity_radial,
    sphere_area,
    z_equation_residual,
)
from .criteria import (
    DomainSampler,
    PowerSpec,
    Verdict,
    biharmonic_check,
    classify_hyperbola,
    general_condition,
    hyperbola_gap,
    mitidieri_condition,
    scalar_supercritical,
    theorem2_condition,
)
from .sweep import (
    SweepRow,
    SweepSpec,
    convergence_study_grid,
    convergence_study_radial,
    richardson_limit,
    run_sweep,
    write_study_csv,
    write_sweep_csv,
)

__version__ = "0.1.0"
