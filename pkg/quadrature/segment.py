# -------------------------------------------------
# Line-panel integrals for the skeleton operator:
#
#   int_seg conj(sigma(x)) t . [ int_panel G_k(x, y) rho(y) dS_y ] ds_x
#
# When the segment touches the panel the inner integral is taken on a fan of
# triangles around the panel point nearest to x (Duffy collapse at that
# point), and the outer rule is graded towards the touching endpoints.
# -------------------------------------------------

from typing import Callable, Optional

import numpy as np

from helpers.errors import QuadratureError
from kernels.helmholtz import full_kernel
from quadrature.gauss import gauss_rule, graded_segment_rule, square_rule
from quadrature.panels import SNAP_TOL, Panel


def _touches(start, end, panel: Panel) -> bool:
    scale = panel.diameter
    if np.any(panel.distanceTo(np.stack([start, end])) <= SNAP_TOL * scale):
        return True
    return bool(np.any(_on_segment(panel.corners(), start, end, scale)))


def _on_segment(points, start, end, scale) -> np.ndarray:
    d = end - start
    tau = (points - start) @ d / (d @ d)
    off = np.linalg.norm(points - start - tau[:, None] * d, axis=1)
    return (off <= SNAP_TOL * scale) & (tau > 0.0) & (tau < 1.0)


def _outer_rule(start, end, panel: Panel, order: int):
    """Outer parameters/weights on [0, 1], split at panel corners on the segment and graded where it touches."""
    d = end - start
    scale = panel.diameter
    corners = panel.corners()
    on = _on_segment(corners, start, end, scale)
    taus = sorted({0.0, 1.0} | {round(float(t), 14) for t in ((corners[on] - start) @ d / (d @ d))})
    params, weights = [], []
    for a, b in zip(taus[:-1], taus[1:]):
        ends = np.stack([start + a * d, start + b * d])
        touching = panel.distanceTo(ends) <= SNAP_TOL * scale
        p, w = graded_segment_rule(order, bool(touching[0]), bool(touching[1]))
        params.append(a + (b - a) * p)
        weights.append((b - a) * w)
    return np.concatenate(params), np.concatenate(weights)


def _duffy_fan(panel: Panel, x: np.ndarray, order: int):
    """
    Inner nodes for every outer point: four triangles joining the nearest
    panel point to each panel edge, collapsed at that point. Along each far
    side the parameter goes through a sinh map centred on the foot of the
    apex, so 1/r stays flat when the apex sits close to a corner.

    @returns (y (n_o, m, 3), weights (n_o, m)).
    """
    rule = gauss_rule(order)
    xi, g = np.meshgrid(rule.points, rule.points, indexing="ij")
    wq = np.outer(rule.weights, rule.weights).ravel()
    xi, g = xi.ravel(), g.ravel()

    centre = panel.nearestPoints(x)
    corners = panel.corners()
    scale = panel.diameter
    ys, ws = [], []
    for a, b in zip(corners, np.roll(corners, -1, axis=0)):
        leg = a - centre                                   # (n_o, 3)
        side = b - a                                        # (3,)
        length2 = side @ side
        jac = np.linalg.norm(np.cross(leg, side), axis=1)   # twice the triangle area
        degenerate = jac <= SNAP_TOL * scale * scale
        width = np.where(degenerate, 1.0, jac) / length2    # apex height in side-parameter units
        foot = -(leg @ side) / length2
        t0 = np.arcsinh(-foot / width)
        t1 = np.arcsinh((1.0 - foot) / width)
        t = t0[:, None] + (t1 - t0)[:, None] * g[None, :]
        eta = foot[:, None] + width[:, None] * np.sinh(t)
        d_eta = (t1 - t0)[:, None] * width[:, None] * np.cosh(t)
        y = centre[:, None, :] + xi[None, :, None] * (leg[:, None, :] + eta[:, :, None] * side[None, None, :])
        w = wq[None, :] * xi[None, :] * jac[:, None] * d_eta
        w[degenerate] = 0.0
        ys.append(y)
        ws.append(w)
    return np.concatenate(ys, axis=1), np.concatenate(ws, axis=1)


def _as_vectors(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    return values[..., None, :] if values.ndim == 2 else values


def _as_columns(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    return values[:, None] if values.ndim == 1 else values


def segment_panel_block(k, start: np.ndarray, end: np.ndarray, tangent: np.ndarray, panel: Panel,
                        segment_density: Callable, panel_density: Callable, order: int = 10,
                        inner_order: Optional[int] = None) -> np.ndarray:
    """
    @param segment_density: tau in [0, 1] (n,) -> (n,) or (n, m1), linear on the segment.
    @param panel_density: parent reference coords (n, 2) -> (n, 3) or (n, m2, 3).
    @param order: outer Gauss order (per graded sub-interval when touching).
    @param inner_order: Gauss order of the inner rule, defaults to order.
    @returns (m1, m2) complex block.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    length = float(np.linalg.norm(end - start))
    if length <= 0.0:
        raise QuadratureError("degenerate skeleton segment")
    inner_order = order if inner_order is None else inner_order

    if _touches(start, end, panel):
        tau, w_out = _outer_rule(start, end, panel, order)
        x = start + tau[:, None] * (end - start)
        y, w_in = _duffy_fan(panel, x, inner_order)
        n_o, m = w_in.shape
        ref = panel.parentRef(panel.toLocal(y.reshape(-1, 3)))
        r = np.linalg.norm(x[:, None, :] - y, axis=2)
        r[w_in == 0.0] = 1.0
    else:
        rule = gauss_rule(order)
        tau, w_out = rule.points, rule.weights
        x = start + tau[:, None] * (end - start)
        pts, w = square_rule(inner_order)
        n_o, m = len(tau), len(w)
        yq = panel.points(pts)
        y = np.broadcast_to(yq, (n_o, m, 3))
        w_in = np.broadcast_to(w * panel.area, (n_o, m))
        ref = np.tile(panel.parentRef(pts), (n_o, 1))
        r = np.linalg.norm(x[:, None, :] - y, axis=2)

    kernel = full_kernel(k, r) * w_in                                  # (n_o, m)
    rho = _as_vectors(panel_density(ref)).reshape(n_o, m, -1, 3)       # (n_o, m, m2, 3)
    flux = np.einsum("om,omjd,d->oj", kernel, rho, np.asarray(tangent, dtype=float))
    sigma = np.conj(_as_columns(segment_density(tau)))                 # (n_o, m1)
    return np.einsum("o,oi,oj->ij", w_out * length, sigma, flux)


def segment_panel_integrate(k, piece, elem: Panel, segment_density: Callable, panel_density: Callable,
                            order: int = 10) -> complex:
    """
    Single-density version of segment_panel_block on a skeleton piece
    (anything with start, end and tangent).
    """
    block = segment_panel_block(k, piece.start, piece.end, piece.tangent, elem,
                                segment_density, panel_density, order)
    if block.shape != (1, 1):
        raise QuadratureError("segment_panel_integrate needs single densities; use segment_panel_block")
    return complex(block[0, 0])
