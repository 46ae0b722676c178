# -------------------------------------------------
# Discrete energy Re <W_k u_h, u_h> and its extrapolation to h -> 0 from a
# ladder of uniform meshes, with the model E(h) = E* - C h^alpha fitted
# through the last three levels.
# -------------------------------------------------

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from helpers.errors import ExtrapolationError

logger = logging.getLogger(__name__)

ALPHA_RANGE = (0.0, 2.0)


@dataclass(frozen=True)
class EnergyEstimate:
    """
    @param value: extrapolated energy E*.
    @param hs: mesh sizes of the three fitted levels.
    @param C, alpha: model parameters of E(h) = E* - C h^alpha.
    """
    value: float
    hs: Tuple[float, ...]
    C: float
    alpha: float
    levels: Tuple[int, ...] = ()


def discrete_energy(k, solution, dofs=None, orders=None, system=None, threads: int = 1) -> float:
    """
    Re(u^H (M_curl + M_normal) u), the normal block carrying -k^2.

    @param system: AssembledSystem whose hypersingular product is reused;
        without it the block is assembled on `dofs`.
    """
    u = np.asarray(getattr(solution, "coefficients", solution))
    if system is not None:
        wu = system.applyHypersingular(u)
    else:
        from assembly.blocks import hypersingular_matrix
        from assembly.nitsche import QuadratureOrders

        wu = hypersingular_matrix(k, dofs, orders or QuadratureOrders(), threads) @ u
    return float(np.real(np.vdot(u, wu)))


def _ratio_equation(alpha: float, h: Sequence[float], target: float) -> float:
    h1, h2, h3 = (x ** alpha for x in h)
    return (h1 - h2) / (h2 - h3) - target


def extrapolate_energy(ladder: Sequence[Tuple[float, float]], levels: Sequence[int] = ()) -> EnergyEstimate:
    """
    @param ladder: (h, energy) pairs, coarse to fine; the last three are used.
    @raises ExtrapolationError: fewer than 3 levels, non-monotone energies or alpha outside (0, 2).
    """
    names = [int(l) for l in levels]
    if len(ladder) < 3:
        raise ExtrapolationError(f"extrapolation needs at least 3 levels, got {len(ladder)}"
                                 + (f" (levels {names})" if names else ""))
    where = f" at levels {names[-3:]}" if names else ""
    (h1, e1), (h2, e2), (h3, e3) = [(float(h), float(e)) for h, e in ladder[-3:]]
    if not h1 > h2 > h3 > 0.0:
        raise ExtrapolationError(f"mesh sizes must decrease{where}: {h1}, {h2}, {h3}")
    d1, d2 = e1 - e2, e2 - e3
    if d1 == 0.0 or d2 == 0.0 or (d1 > 0.0) != (d2 > 0.0):
        raise ExtrapolationError(f"energies {e1:.12g}, {e2:.12g}, {e3:.12g}{where} are not strictly monotone")
    target = d1 / d2

    rho1, rho2 = h1 / h2, h2 / h3
    if abs(rho1 - rho2) <= 1e-12 * rho1:
        alpha = math.log(target) / math.log(rho1) if target > 0.0 else float("nan")
    else:
        lo, hi = 1e-8, ALPHA_RANGE[1] - 1e-8
        f_lo, f_hi = _ratio_equation(lo, (h1, h2, h3), target), _ratio_equation(hi, (h1, h2, h3), target)
        if f_lo * f_hi > 0.0:
            raise ExtrapolationError(f"no rate alpha in {ALPHA_RANGE} fits the energy ratio {target:.6g}{where}")
        alpha = brentq(_ratio_equation, lo, hi, args=((h1, h2, h3), target), xtol=1e-14)
    if not ALPHA_RANGE[0] < alpha < ALPHA_RANGE[1]:
        raise ExtrapolationError(f"fitted rate alpha={alpha:.6g}{where} outside {ALPHA_RANGE}")

    C = d1 / (h2 ** alpha - h1 ** alpha)
    value = e3 + C * h3 ** alpha
    logger.info("extrapolated energy %.10g (C=%.4g, alpha=%.4f)", value, C, alpha)
    return EnergyEstimate(value, (h1, h2, h3), C, alpha, tuple(levels[-3:]) if levels else ())
