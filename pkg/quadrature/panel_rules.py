# -------------------------------------------------
# Singularity-removing quadrature rules for pairs of reference squares.
#
# Every rule returns points x_hat (test square), y_hat (trial square) and
# positive weights on [0,1]^2 x [0,1]^2 that sum to 1. The singular rules
# assume the squares are anchored so that
#   coincident: both squares are the same square,
#   edge:       the shared edge is {second coordinate = 0} in both, same direction,
#   vertex:     the shared vertex is the origin of both.
# Each rule splits the 4D domain into pyramids/wedges around the singular set
# and applies a Duffy collapse there, which cancels the 1/|x - y| singularity.
# -------------------------------------------------

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from helpers.errors import QuadratureError
from quadrature.gauss import gauss_rule

COINCIDENT = "coincident"
EDGE = "edge"
VERTEX = "vertex"
DISJOINT = "disjoint"
ADJACENCY_CLASSES = (COINCIDENT, EDGE, VERTEX, DISJOINT)


@dataclass(frozen=True)
class PanelPairRule:
    adjacency: str
    x_hat: np.ndarray
    y_hat: np.ndarray
    weights: np.ndarray

    def size(self) -> int:
        return len(self.weights)


def _tensor4(order: int):
    rule = gauss_rule(order)
    grids = np.meshgrid(rule.points, rule.points, rule.points, rule.points, indexing="ij")
    wgrids = np.meshgrid(rule.weights, rule.weights, rule.weights, rule.weights, indexing="ij")
    params = [g.ravel() for g in grids]
    weight = np.prod([w.ravel() for w in wgrids], axis=0)
    return params, weight


def _coincident(order: int):
    (xi, eta, u1, u2), w0 = _tensor4(order)
    xs, ys, ws = [], [], []
    for sx, sy, swap in product((1.0, -1.0), (1.0, -1.0), (False, True)):
        if not swap:
            z1, z2 = sx * xi, sy * xi * eta
        else:
            z1, z2 = sx * xi * eta, sy * xi
        x1 = np.maximum(0.0, -z1) + (1.0 - np.abs(z1)) * u1
        x2 = np.maximum(0.0, -z2) + (1.0 - np.abs(z2)) * u2
        xs.append(np.stack([x1, x2], axis=1))
        ys.append(np.stack([x1 + z1, x2 + z2], axis=1))
        ws.append(w0 * xi * (1.0 - np.abs(z1)) * (1.0 - np.abs(z2)))
    return xs, ys, ws


def _edge(order: int):
    (xi, eta1, eta2, u), w0 = _tensor4(order)
    xs, ys, ws = [], [], []
    for sign, apex in product((1.0, -1.0), range(3)):
        c = [None, None, None]
        c[apex] = xi
        rest = iter((xi * eta1, xi * eta2))
        for m in range(3):
            if c[m] is None:
                c[m] = next(rest)
        z = sign * c[0]
        x1 = np.maximum(0.0, -z) + (1.0 - c[0]) * u
        xs.append(np.stack([x1, c[1]], axis=1))
        ys.append(np.stack([x1 + z, c[2]], axis=1))
        ws.append(w0 * xi ** 2 * (1.0 - c[0]))
    return xs, ys, ws


def _vertex(order: int):
    (xi, eta1, eta2, eta3), w0 = _tensor4(order)
    xs, ys, ws = [], [], []
    for apex in range(4):
        c = [None] * 4
        c[apex] = xi
        rest = iter((xi * eta1, xi * eta2, xi * eta3))
        for m in range(4):
            if c[m] is None:
                c[m] = next(rest)
        xs.append(np.stack([c[0], c[1]], axis=1))
        ys.append(np.stack([c[2], c[3]], axis=1))
        ws.append(w0 * xi ** 3)
    return xs, ys, ws


def _disjoint(order: int):
    (s1, s2, t1, t2), w0 = _tensor4(order)
    return [np.stack([s1, s2], axis=1)], [np.stack([t1, t2], axis=1)], [w0]


_BUILDERS = {COINCIDENT: _coincident, EDGE: _edge, VERTEX: _vertex, DISJOINT: _disjoint}


@lru_cache(maxsize=None)
def pair_rule(adjacency: str, order: int) -> PanelPairRule:
    """
    @param adjacency: one of coincident, edge, vertex, disjoint.
    @param order: 1D Gauss order used in every direction.
    @returns the (cached, read-only) PanelPairRule.
    """
    if adjacency not in _BUILDERS:
        raise QuadratureError(f"unknown adjacency class '{adjacency}'")
    xs, ys, ws = _BUILDERS[adjacency](order)
    x_hat = np.concatenate(xs)
    y_hat = np.concatenate(ys)
    weights = np.concatenate(ws)
    for arr in (x_hat, y_hat, weights):
        arr.setflags(write=False)
    return PanelPairRule(adjacency, x_hat, y_hat, weights)
