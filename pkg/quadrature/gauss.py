# -------------------------------------------------
# Gauss-Legendre rules on [0, 1], the unit square and straight segments.
# -------------------------------------------------

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import roots_legendre


@dataclass(frozen=True)
class GaussRule1D:
    """
    q-point Gauss rule on [0, 1]; exact for polynomials of degree <= 2q - 1.
    """
    points: np.ndarray
    weights: np.ndarray
    order: int


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> GaussRule1D:
    """
    @param order: number of points q >= 1.
    @returns GaussRule1D with positive weights summing to 1.
    """
    if order < 1:
        raise ValueError(f"Gauss order must be >= 1, got {order}")
    x, w = roots_legendre(order)
    points = 0.5 * (x + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return GaussRule1D(points, weights, order)


@lru_cache(maxsize=None)
def square_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Tensor Gauss rule on [0, 1]^2.

    @returns (points (q^2, 2), weights (q^2,)).
    """
    rule = gauss_rule(order)
    s, t = np.meshgrid(rule.points, rule.points, indexing="ij")
    ws, wt = np.meshgrid(rule.weights, rule.weights, indexing="ij")
    points = np.stack([s.ravel(), t.ravel()], axis=1)
    weights = (ws * wt).ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def segment_points(start: np.ndarray, end: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gauss points on the straight segment [start, end].

    @returns (parameters in [0, 1], points (q, 3), weights scaled by the segment length).
    """
    rule = gauss_rule(order)
    length = np.linalg.norm(end - start)
    points = start + rule.points[:, None] * (end - start)
    return rule.points, points, rule.weights * length


def graded_segment_rule(order: int, grade_start: bool, grade_end: bool,
                        ratio: float = 0.25, layers: int = 14) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite Gauss rule on [0, 1] geometrically refined towards the flagged
    endpoints, for integrands with a weak singularity there.

    @returns (points, weights) on [0, 1].
    """
    breaks = [0.0, 1.0]
    if grade_start:
        breaks.extend(0.5 * ratio ** i for i in range(1, layers + 1))
    if grade_end:
        breaks.extend(1.0 - 0.5 * ratio ** i for i in range(1, layers + 1))
    if grade_start or grade_end:
        breaks.append(0.5)
    breaks = np.unique(np.array(breaks))
    rule = gauss_rule(order)
    lengths = np.diff(breaks)
    points = (breaks[:-1, None] + rule.points[None, :] * lengths[:, None]).ravel()
    weights = (rule.weights[None, :] * lengths[:, None]).ravel()
    return points, weights
