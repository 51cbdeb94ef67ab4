"""ADMM quadratic-program solver with a matrix-free PCG linear-system core."""
from .problem import ProblemError, QpProblem
from .solver import Settings, SolveOutcome, SolverDiverged, Status, solve
from .sparse import CooMatrix, CscMatrix, CsrMatrix, FormatError

__all__ = [
    "CooMatrix", "CscMatrix", "CsrMatrix", "FormatError", "ProblemError", "QpProblem", "Settings",
    "SolveOutcome", "SolverDiverged", "Status", "solve",
]
