# -------------------------------------------------
# Panels (affine images of the unit square), geometric adjacency
# classification and the panel-pair Galerkin integral
#
#   I = int_B int_A densityB(x) G_k(x, y) densityA(y) dS_y dS_x.
#
# Densities are evaluated at reference coordinates of the parent mesh
# element, so panels obtained by splitting or re-anchoring an element still
# feed the element's shape functions.
# -------------------------------------------------

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from helpers.errors import QuadratureError
from kernels.helmholtz import full_kernel, remainder_kernel, static_kernel
from quadrature.gauss import square_rule
from quadrature.panel_rules import COINCIDENT, DISJOINT, EDGE, VERTEX, pair_rule

# geometric snapping tolerance, relative to the panel size
SNAP_TOL = 1e-10

DEFAULT_ORDERS = {DISJOINT: 8, VERTEX: 10, EDGE: 10, COINCIDENT: 12}

# reference corners, counterclockwise
_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class Panel:
    """
    The parallelogram {origin + s e1 + t e2 : (s, t) in [0,1]^2}.

    @param element: global id of the mesh element the panel lies in (-1 if none).
    @param ref_origin, ref_axes: affine map from the panel square to the parent
        element's reference square, parent = ref_origin + ref_axes @ (s, t).
    """
    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    element: int = -1
    ref_origin: np.ndarray = field(default_factory=lambda: np.zeros(2))
    ref_axes: np.ndarray = field(default_factory=lambda: np.eye(2))

    @classmethod
    def fromElement(cls, mesh, e: int, element_id: Optional[int] = None) -> "Panel":
        origin, e1, e2 = mesh.elementFrame(e)
        return cls(origin, e1, e2, e if element_id is None else element_id)

    @property
    def area(self) -> float:
        return float(np.linalg.norm(np.cross(self.e1, self.e2)))

    @property
    def normal(self) -> np.ndarray:
        c = np.cross(self.e1, self.e2)
        return c / np.linalg.norm(c)

    @property
    def diameter(self) -> float:
        return float(max(np.linalg.norm(self.e1 + self.e2), np.linalg.norm(self.e1 - self.e2)))

    @property
    def centre(self) -> np.ndarray:
        return self.origin + 0.5 * (self.e1 + self.e2)

    def corners(self) -> np.ndarray:
        return self.points(_CORNERS)

    def points(self, local: np.ndarray) -> np.ndarray:
        """World points of local (s, t) coordinates, shape (n, 2) -> (n, 3)."""
        local = np.atleast_2d(local)
        return self.origin + local[:, :1] * self.e1 + local[:, 1:2] * self.e2

    def parentRef(self, local: np.ndarray) -> np.ndarray:
        return self.ref_origin + np.atleast_2d(local) @ self.ref_axes.T

    def toLocal(self, points: np.ndarray) -> np.ndarray:
        """Local coordinates of the projections of points onto the panel plane."""
        jac = np.stack([self.e1, self.e2], axis=1)
        return (np.atleast_2d(points) - self.origin) @ np.linalg.pinv(jac).T

    def contains(self, points: np.ndarray, tol: float = SNAP_TOL) -> np.ndarray:
        """Closed-set membership of points, with a relative snapping tolerance."""
        points = np.atleast_2d(points)
        local = self.toLocal(points)
        off_plane = np.abs((points - self.origin) @ self.normal)
        inside = np.all((local >= -tol) & (local <= 1.0 + tol), axis=1)
        return inside & (off_plane <= tol * self.diameter)

    def nearestPoints(self, points: np.ndarray) -> np.ndarray:
        """Closest point of the (closed) panel to each of the given points."""
        points = np.atleast_2d(points)
        local = self.toLocal(points)
        inside = np.all((local >= 0.0) & (local <= 1.0), axis=1)
        best = self.points(local)
        best_dist = np.full(len(points), np.inf)
        best_dist[inside] = 0.0
        corners = self.corners()
        for a, b in zip(corners, np.roll(corners, -1, axis=0)):
            d = b - a
            tau = np.clip((points - a) @ d / (d @ d), 0.0, 1.0)
            candidate = a + tau[:, None] * d
            dist = np.linalg.norm(points - candidate - ((points - candidate) @ self.normal)[:, None] * self.normal,
                                  axis=1)
            better = (dist < best_dist) & ~inside
            best[better] = candidate[better]
            best_dist[better] = dist[better]
        return best

    def distanceTo(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.linalg.norm(points - self.nearestPoints(points), axis=1)

    def sub(self, s0: float, s1: float, t0: float, t1: float) -> "Panel":
        """Sub-panel [s0, s1] x [t0, t1] of the local square."""
        start = np.array([s0, t0])
        return Panel(self.points(start)[0], (s1 - s0) * self.e1, (t1 - t0) * self.e2, self.element,
                     self.parentRef(start)[0], self.ref_axes @ np.diag([s1 - s0, t1 - t0]))

    def anchored(self, corner: int, towards: int) -> "Panel":
        """
        Same parallelogram with its origin at local corner `corner` and first
        axis along the edge to the neighbouring corner `towards`.
        """
        if (towards - corner) % 4 not in (1, 3):
            raise QuadratureError(f"corners {corner} and {towards} are not adjacent")
        other = (2 * corner - towards) % 4
        base = _CORNERS[corner]
        axes = np.stack([_CORNERS[towards] - base, _CORNERS[other] - base], axis=1)
        e1 = axes[0, 0] * self.e1 + axes[1, 0] * self.e2
        e2 = axes[0, 1] * self.e1 + axes[1, 1] * self.e2
        return Panel(self.points(base)[0], e1, e2, self.element,
                     self.parentRef(base)[0], self.ref_axes @ axes)

    def splitAt(self, points: np.ndarray, tol: float = SNAP_TOL) -> List["Panel"]:
        """
        Splits the panel along lines through those points that lie inside one
        of its edges (not at a corner), parallel to the neighbouring edges.
        """
        s_cuts, t_cuts = set(), set()
        for s, t in self.toLocal(points):
            on_s_edge = min(abs(t), abs(t - 1.0)) <= tol
            on_t_edge = min(abs(s), abs(s - 1.0)) <= tol
            if on_s_edge and tol < s < 1.0 - tol:
                s_cuts.add(round(float(s), 12))
            if on_t_edge and tol < t < 1.0 - tol:
                t_cuts.add(round(float(t), 12))
        if not s_cuts and not t_cuts:
            return [self]
        s_breaks = [0.0] + sorted(s_cuts) + [1.0]
        t_breaks = [0.0] + sorted(t_cuts) + [1.0]
        return [self.sub(s0, s1, t0, t1)
                for t0, t1 in zip(t_breaks[:-1], t_breaks[1:])
                for s0, s1 in zip(s_breaks[:-1], s_breaks[1:])]


def _unique_points(points: Sequence[np.ndarray], scale: float) -> List[np.ndarray]:
    unique = []
    for p in points:
        if all(np.linalg.norm(p - q) > SNAP_TOL * scale for q in unique):
            unique.append(p)
    return unique


def _contact_points(A: Panel, B: Panel) -> List[np.ndarray]:
    scale = max(A.diameter, B.diameter)
    ca, cb = A.corners(), B.corners()
    found = list(ca[B.contains(ca)]) + list(cb[A.contains(cb)])
    return _unique_points(found, scale)


def _shared_corners(A: Panel, B: Panel) -> List[Tuple[int, int]]:
    scale = max(A.diameter, B.diameter)
    ca, cb = A.corners(), B.corners()
    return [(i, j) for i in range(4) for j in range(4)
            if np.linalg.norm(ca[i] - cb[j]) <= SNAP_TOL * scale]


def _same_panel(A: Panel, B: Panel) -> bool:
    if A is B:
        return True
    return len(_shared_corners(A, B)) == 4


def classify_adjacency(elemA: Panel, elemB: Panel) -> str:
    """
    Geometric adjacency of two panels: coincident (same panel), edge (they
    share a segment of positive length, possibly only part of an edge when
    interface meshes do not match), vertex (exactly one common point) or
    disjoint.
    """
    if _same_panel(elemA, elemB):
        return COINCIDENT
    contact = _contact_points(elemA, elemB)
    if not contact:
        return DISJOINT
    if len(contact) == 1:
        return VERTEX
    scale = max(elemA.diameter, elemB.diameter)
    direction = contact[1] - contact[0]
    direction = direction / np.linalg.norm(direction)
    for p in contact[2:]:
        d = p - contact[0]
        if np.linalg.norm(d - (d @ direction) * direction) > SNAP_TOL * scale:
            raise QuadratureError("panels overlap: their interiors intersect")
    return EDGE


def regular_pairs(trial: Panel, test: Panel) -> List[Tuple[str, Panel, Panel]]:
    """
    Splits a touching pair into sub-pairs that are coincident, share a full
    edge, share one corner or are disjoint, anchored the way the singular
    rules expect.

    @returns list of (adjacency class, trial sub-panel, test sub-panel).
    """
    adjacency = classify_adjacency(trial, test)
    if adjacency == COINCIDENT:
        return [(COINCIDENT, trial, trial)]
    if adjacency == DISJOINT:
        return [(DISJOINT, trial, test)]
    contact = np.array(_contact_points(trial, test))
    pairs = []
    for a, b in product(trial.splitAt(contact), test.splitAt(contact)):
        shared = _shared_corners(a, b)
        if len(shared) == 2:
            pairs.append((EDGE,) + _anchor_edge(a, b, shared))
        elif len(shared) == 1:
            if len(_contact_points(a, b)) != 1:
                raise QuadratureError("sub-panels touch beyond their common corner")
            (i, j), = shared
            pairs.append((VERTEX, a.anchored(i, (i + 1) % 4), b.anchored(j, (j + 1) % 4)))
        elif not shared:
            if _contact_points(a, b):
                raise QuadratureError("sub-panels touch without a common corner")
            pairs.append((DISJOINT, a, b))
        else:
            raise QuadratureError("distinct panels share more than two corners")
    return pairs


def _anchor_edge(a: Panel, b: Panel, shared) -> Tuple[Panel, Panel]:
    # start at the lexicographically smaller endpoint, identical for both panels
    (ia0, ib0), (ia1, ib1) = shared
    p0, p1 = a.corners()[ia0], a.corners()[ia1]
    if tuple(np.round(p1, 12)) < tuple(np.round(p0, 12)):
        ia0, ib0, ia1, ib1 = ia1, ib1, ia0, ib0
    return a.anchored(ia0, ia1), b.anchored(ib0, ib1)


def _order(orders, adjacency: str) -> int:
    if orders is None:
        return DEFAULT_ORDERS[adjacency]
    if isinstance(orders, int):
        return orders
    return int(getattr(orders, adjacency))


@dataclass(frozen=True)
class PairNodes:
    """
    Quadrature nodes of a panel pair or sub-pair.

    @param kernel: 'split' (static part plus remainder, on singular-rule nodes)
        or 'full' (the plain kernel, on tensor Gauss nodes).
    """
    kernel: str
    test_ref: np.ndarray
    trial_ref: np.ndarray
    distances: np.ndarray
    weights: np.ndarray

    def kernelValues(self, k) -> np.ndarray:
        if self.kernel == "split":
            return static_kernel(self.distances) + remainder_kernel(k, self.distances)
        return full_kernel(k, self.distances)


def _tensor_nodes(trial: Panel, test: Panel, order: int) -> PairNodes:
    pts, w = square_rule(order)
    n = len(w)
    x_local = np.repeat(pts, n, axis=0)
    y_local = np.tile(pts, (n, 1))
    weights = np.repeat(w, n) * np.tile(w, n) * trial.area * test.area
    x = test.points(x_local)
    y = trial.points(y_local)
    return PairNodes("full", test.parentRef(x_local), trial.parentRef(y_local),
                     np.linalg.norm(x - y, axis=1), weights)


def pair_nodes(trial: Panel, test: Panel, orders=None) -> List[PairNodes]:
    """
    All quadrature nodes for the pair. Touching pairs are cut into regular
    sub-pairs; the singular ones take the Duffy rule of their class for both
    the static part and the remainder, which is only Lipschitz in r there.
    Disjoint pairs and sub-pairs use tensor Gauss on the full kernel.

    @param orders: int (all classes) or an object with attributes
        coincident, edge, vertex, disjoint; None for the defaults.
    """
    if classify_adjacency(trial, test) == DISJOINT:
        return [_tensor_nodes(trial, test, _order(orders, DISJOINT))]
    nodes = []
    for sub_class, a, b in regular_pairs(trial, test):
        if sub_class == DISJOINT:
            nodes.append(_tensor_nodes(a, b, _order(orders, DISJOINT)))
            continue
        rule = pair_rule(sub_class, _order(orders, sub_class))
        x = b.points(rule.x_hat)
        y = a.points(rule.y_hat)
        nodes.append(PairNodes("split", b.parentRef(rule.x_hat), a.parentRef(rule.y_hat),
                               np.linalg.norm(x - y, axis=1), rule.weights * a.area * b.area))
    return nodes


def _as_block(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim == 1:
        return values[:, None, None]
    if values.ndim == 2:
        return values[:, None, :]
    return values


def panel_pair_block(k, trial: Panel, test: Panel, trial_density: Callable, test_density: Callable,
                     orders=None, nodes: Optional[List[PairNodes]] = None) -> np.ndarray:
    """
    Matrix of pair integrals for families of densities.

    @param trial_density: parent reference coords (n, 2) -> (n,), (n, d) or (n, m, d).
    @param test_density: same, evaluated on the test panel.
    @returns (m_test, m_trial) complex array of
        sum_d int int test_d(x) G_k(x, y) trial_d(y) dS_y dS_x.
    """
    if nodes is None:
        nodes = pair_nodes(trial, test, orders)
    block = None
    for part in nodes:
        kw = part.weights * part.kernelValues(k)
        fb = _as_block(test_density(part.test_ref))
        fa = _as_block(trial_density(part.trial_ref))
        contribution = np.einsum("n,nid,njd->ij", kw, fb, fa)
        block = contribution if block is None else block + contribution
    return block


def panel_pair_integrate(k, elemA: Panel, elemB: Panel, densityA: Callable, densityB: Callable,
                         order=None) -> complex:
    """
    int_B int_A densityB(x) G_k(x, y) densityA(y) dS_y dS_x for scalar or
    vector valued densities (vector values are dotted).
    """
    block = panel_pair_block(k, elemA, elemB, densityA, densityB, order)
    if block.shape != (1, 1):
        raise QuadratureError("panel_pair_integrate needs single densities; use panel_pair_block")
    return complex(block[0, 0])
