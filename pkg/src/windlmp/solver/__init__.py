from .simplex import (Basis, IterationLimitError, LpSolution, NumericalError,
                      SimplexOptions, SolverError, lp_certificate, solve_lp)
from .bnb import MipSolution, resolve_fixed, solve_mip

__all__ = [
    "Basis", "IterationLimitError", "LpSolution", "MipSolution", "NumericalError",
    "SimplexOptions", "SolverError", "lp_certificate", "resolve_fixed",
    "solve_lp", "solve_mip",
]
