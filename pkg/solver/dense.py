# -------------------------------------------------
# Direct dense solve of the assembled system: LU with partial pivoting,
# residual check and a LAPACK condition estimate.
# -------------------------------------------------

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor, lu_solve

from helpers.errors import SolverError

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8
CONDITION_WARN = 1e12


@dataclass(frozen=True, eq=False)
class SolutionVector:
    """
    @param coefficients: length-N complex coefficients of u_h.
    @param kind: space kind the coefficients belong to.
    """
    coefficients: np.ndarray
    kind: str
    level: Optional[int] = None
    h: Optional[float] = None
    residual: float = 0.0
    condition: float = float("nan")
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.coefficients)):
            raise SolverError("solution has non-finite entries", self.level)

    def __len__(self):
        return len(self.coefficients)


def condition_estimate(matrix: np.ndarray, lu: np.ndarray) -> float:
    """1-norm condition number estimate from an existing LU factorisation."""
    gecon, = get_lapack_funcs(("gecon",), (lu,))
    anorm = float(np.abs(matrix).sum(axis=0).max())
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0.0:
        return float("inf")
    return 1.0 / float(rcond)


def solve_dense(system, level: Optional[int] = None) -> SolutionVector:
    """
    Solves A x = b of an AssembledSystem (anything with .matrix, .rhs, .kind).

    @raises SolverError: singular matrix, or relative residual above RESIDUAL_TOL.
    """
    A = np.asarray(system.matrix)
    b = np.asarray(system.rhs)
    level = getattr(system, "level", None) if level is None else level
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != len(b):
        raise SolverError(f"system shape mismatch: A {A.shape}, b {b.shape}", level)
    if not np.all(np.isfinite(A)):
        raise SolverError("matrix has non-finite entries", level)

    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            lu, piv = lu_factor(A, check_finite=False)
        except (LinAlgWarning, ValueError, np.linalg.LinAlgError) as e:
            raise SolverError(f"matrix is singular to working precision ({e})", level) from e
    if np.any(np.diag(lu) == 0.0):
        raise SolverError("matrix is singular to working precision", level)
    x = lu_solve((lu, piv), b, check_finite=False)

    bnorm = np.abs(b).max()
    residual = float(np.abs(A @ x - b).max() / bnorm) if bnorm > 0.0 else float(np.abs(A @ x).max())
    condition = condition_estimate(A, lu)
    logger.info("solved N=%d: residual %.2e, condition estimate %.2e", len(b), residual, condition)
    if condition > CONDITION_WARN:
        logger.warning("condition estimate %.2e exceeds %.0e", condition, CONDITION_WARN)
    if not residual <= RESIDUAL_TOL:
        raise SolverError(f"relative residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}", level)
    return SolutionVector(x, system.kind, level, getattr(system, "h", None), residual, condition)
