# -------------------------------------------------
# Computable error surrogate: residual + jumps, where
#   residual = |E* - Re <W_k u_h, u_h>|^(1/2)
#   jumps    = ||[u_h]||_L2(gamma)
# and empirical convergence rates of the surrogate along a mesh ladder.
# -------------------------------------------------

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from postproc.energy import discrete_energy
from spaces.dofs import injection, mass_matrix
from spaces.jumps import jump_l2_norm

CSV_HEADER = "level,h,ndofs,nu,residual,jumps,total,rate"


@dataclass(frozen=True)
class ConvergenceRecord:
    level: int
    h: float
    ndofs: int
    nu: Optional[float]
    residual: float
    jumps: float
    total: float
    rate: Optional[float] = None


def error_surrogate(k, solution, energy_limit: float, dofs, skeleton=None, system=None, orders=None,
                    threads: int = 1) -> Tuple[float, float]:
    """
    @param energy_limit: extrapolated energy E* for the same k.
    @param skeleton: needed for nonconforming solutions; conforming ones have no jumps.
    @returns (residual, jumps).
    """
    energy = discrete_energy(k, solution, dofs, orders, system, threads)
    residual = math.sqrt(abs(energy_limit - energy))
    if dofs.isConforming() or skeleton is None:
        return residual, 0.0
    return residual, jump_l2_norm(dofs, skeleton, solution.coefficients)


def make_record(level: int, h: float, ndofs: int, nu: Optional[float], residual: float,
                jumps: float) -> ConvergenceRecord:
    return ConvergenceRecord(level, h, ndofs, nu, residual, jumps, residual + jumps)


def empirical_rates(records: Sequence[ConvergenceRecord]) -> List[ConvergenceRecord]:
    """
    rate_l = log2(total_(l-1) / total_l); the first record has none.
    """
    out = []
    for i, record in enumerate(records):
        rate = None
        if i > 0:
            previous = records[i - 1]
            if previous.total > 0.0 and record.total > 0.0:
                rate = math.log2(previous.total / record.total)
        out.append(replace(record, rate=rate))
    return out


def l2_distance(dofs, coefficients, reference_dofs, reference_coefficients) -> float:
    """
    ||u - u_ref||_L2(Gamma) for a nonconforming u and a conforming u_ref on
    the same meshes.
    """
    lifted = injection(reference_dofs, dofs) @ np.asarray(reference_coefficients)
    diff = np.asarray(coefficients) - lifted
    return float(np.sqrt(max(np.real(np.vdot(diff, mass_matrix(dofs) @ diff)), 0.0)))
