"""Finite-volume simulator for a 2-D parabolic-elliptic chemotaxis system.

    u_t = Δu - ∇·(u χ(v) ∇v),    0 = Δv - v + g(u)

on a rectangle with zero-flux boundaries.
"""

from .elliptic import EllipticSolveReport, check_elliptic_bounds, solve_helmholtz, solve_shifted
from .errors import (
    DomainViolation,
    NonConvergence,
    NumericalFailure,
    ParseError,
    SimulationError,
    UnknownPreset,
    ValidationError,
)
from .experiments import (
    PRESETS,
    SweepRow,
    SweepSpec,
    parse_config,
    preset,
    run_sweep,
    summarize_sweep,
)
from .grid import (
    FaceFluxField,
    FieldStats,
    GridSpec,
    ScalarField,
    divergence,
    field_stats,
    gradient_energy,
    gradient_faces,
    integrate,
    laplacian_neumann,
    read_field,
    write_field,
)
from .integrator import SimState, SolverOptions, StepController, StepResult, adapt, imex_update, step
from .model import (
    Constant,
    Linear,
    Logarithmic,
    ModelParams,
    PowerShift,
    PowerSingular,
    Singular,
    chemotactic_flux,
    chi_eval,
    g_eval,
    validate_production,
)
from .simulation import (
    DiagnosticsSample,
    Outcome,
    RunOutcome,
    RunResult,
    SimConfig,
    confirm_blowup,
    init_u,
    init_v,
    run,
)

__version__ = "0.1.0"
