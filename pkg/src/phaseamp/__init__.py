"""Energy-normalised continuum radial functions in phase-amplitude form.

The squared amplitude ``Y = A^2`` is integrated inward from infinity on
``rho = 1/r`` with Taylor-basis spectral elements; the phase follows by
quadrature of ``W / Y`` anchored at the first node of the regular solution.
"""

__version__ = "0.1.0"

from .assembly import (
    ContinuumState,
    assemble,
    audit_state,
    density_at_origin,
    eval_irregular,
    eval_regular,
    wronskian,
)
from .amplitude import AmplitudeSolution, solve_amplitude
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    PhaseAmpError,
    SingularMatrixError,
    StageError,
)
from .phase import PhaseSolution, build_phase, find_r_pi, solve_inner_regular
from .potentials import PotentialKind, RadialContext

__all__ = [
    "__version__",
    "AmplitudeSolution",
    "ConfigurationError",
    "ContinuumState",
    "ConvergenceError",
    "DomainError",
    "PhaseAmpError",
    "PhaseSolution",
    "PotentialKind",
    "RadialContext",
    "SingularMatrixError",
    "StageError",
    "assemble",
    "audit_state",
    "build_phase",
    "density_at_origin",
    "eval_irregular",
    "eval_regular",
    "find_r_pi",
    "solve_amplitude",
    "solve_inner_regular",
    "wronskian",
]
