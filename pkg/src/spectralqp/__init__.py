"""Global optimization of nonconvex (MI)QPs via spectral convex relaxations.

Minimizes x'Qx + q'x over linear equalities, inequalities, finite boxes and
optional integrality, by branch and bound on convex quadratic relaxations
obtained from eigenvalue shifts of Q.
"""

from .problem import (
    FeasibilityReport,
    GeneratorSpec,
    ProblemFormatError,
    ProblemInstance,
    check_feasibility,
    emit_json,
    evaluate_objective,
    generate_random,
    parse_json,
    parse_qplib,
    validate,
)
from .bnb import SolveResult, SolverConfig, solve

__version__ = "0.1.0"

__all__ = [
    "FeasibilityReport",
    "GeneratorSpec",
    "ProblemFormatError",
    "ProblemInstance",
    "SolveResult",
    "SolverConfig",
    "check_feasibility",
    "emit_json",
    "evaluate_objective",
    "generate_random",
    "parse_json",
    "parse_qplib",
    "solve",
    "validate",
]
