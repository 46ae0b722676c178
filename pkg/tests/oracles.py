# -------------------------------------------------
# Reference values the tests compare against: closed forms for the Laplace
# kernel on rectangles, semi-analytic rectangle pairs with bilinear
# densities, and brute-force subdivided tensor Gauss for smooth kernels.
# -------------------------------------------------

import math
from typing import Callable, List, Sequence, Tuple

import numpy as np

from kernels.helmholtz import FOUR_PI
from quadrature.gauss import graded_segment_rule, square_rule


def rectangle_self_integral(a: float, b: float) -> float:
    """
    int_R int_R 1/|x - y| dS_y dS_x for the a x b rectangle R, in closed form:
    4 int_0^a int_0^b (a - u)(b - v)/sqrt(u^2 + v^2) dv du.
    """
    d = math.hypot(a, b)
    j0 = a * math.asinh(b / a) + b * math.asinh(a / b)
    ju = 0.5 * b * d + 0.5 * a * a * math.asinh(b / a) - 0.5 * b * b
    jv = 0.5 * a * d + 0.5 * b * b * math.asinh(a / b) - 0.5 * a * a
    juv = (d ** 3 - a ** 3 - b ** 3) / 3.0
    return 4.0 * (a * b * j0 - a * jv - b * ju + juv)


# unit squares, 1/|x - y| with unit densities
UNIT_COINCIDENT = rectangle_self_integral(1.0, 1.0)
# two squares side by side make a 2 x 1 rectangle
UNIT_EDGE = 0.5 * (rectangle_self_integral(2.0, 1.0) - 2.0 * UNIT_COINCIDENT)
# four squares make a 2 x 2 rectangle: 4 coincident, 8 edge, 4 vertex ordered pairs
UNIT_VERTEX = 0.25 * (rectangle_self_integral(2.0, 2.0) - 4.0 * UNIT_COINCIDENT - 8.0 * UNIT_EDGE)
# three in a row: 3 coincident, 4 edge, 2 disjoint ordered pairs
UNIT_DISJOINT = 0.5 * (rectangle_self_integral(3.0, 1.0) - 3.0 * UNIT_COINCIDENT - 4.0 * UNIT_EDGE)

# int_0^1 int_[0,1]^2 1/|(s,0) - y| dy ds: a unit square against its own bottom edge
UNIT_EDGE_LINE = 3.0 * math.asinh(1.0) - math.sqrt(2.0) + 1.0


def laplace(value: float) -> float:
    """Scales a 1/r integral to the kernel 1/(4 pi r)."""
    return value / FOUR_PI


def subdivided_pair(kernel, A, B, density_a, density_b, pieces: int = 4, order: int = 6) -> complex:
    """
    Brute-force int_B int_A density_b(x) kernel(r) density_a(y) for a kernel
    that is continuous at r = 0: both panels cut into pieces x pieces
    sub-squares with tensor Gauss on each.

    @param kernel: function of the distance array.
    @param density_a, density_b: local (s, t) coordinates (n, 2) -> (n,).
    """
    pts, w = square_rule(order)
    cuts = np.arange(pieces) / pieces
    offsets = np.array([(s, t) for s in cuts for t in cuts])
    local = (offsets[:, None, :] + pts[None, :, :] / pieces).reshape(-1, 2)
    weights = np.tile(w, len(offsets)) / pieces ** 2
    xa = A.points(local)
    xb = B.points(local)
    r = np.linalg.norm(xb[:, None, :] - xa[None, :, :], axis=2)
    fa = density_a(local) * weights * A.area
    fb = density_b(local) * weights * B.area
    return complex(fb @ kernel(r) @ fa)


def bilinear(beta: Sequence[float]) -> Callable:
    """Density b00 + b10 s + b01 t + b11 s t in local (s, t) coordinates."""
    b00, b10, b01, b11 = beta
    return lambda p: b00 + b10 * p[:, 0] + b01 * p[:, 1] + b11 * p[:, 0] * p[:, 1]


def _log_plus(a: np.ndarray, b: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """
    log(b + rho) with rho = |(a, b)|, rewritten for b <= 0. Every caller
    multiplies it by a power of a, so it is set to 0 where a = 0 and b <= 0.
    """
    out = np.zeros(np.shape(rho))
    upper = b > 0.0
    lower = ~upper & (a != 0.0)
    out[upper] = np.log(b[upper] + rho[upper])
    out[lower] = np.log(a[lower] ** 2 / (rho[lower] - b[lower]))
    return out


def _antiderivatives(u1: np.ndarray, u2: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """
    F with d^2 F / du1 du2 = u1^m u2^n / rho and u1^m u2^n rho, for
    (m, n) = (0,0), (1,0), (0,1), (1,1), where rho = |(u1, u2)|.
    """
    rho = np.hypot(u1, u2)
    l2 = _log_plus(u1, u2, rho)
    l1 = _log_plus(u2, u1, rho)
    inverse = [
        u1 * l2 + u2 * l1,
        0.5 * (u2 * rho + u1 ** 2 * l2),
        0.5 * (u1 * rho + u2 ** 2 * l1),
        rho ** 3 / 3.0,
    ]
    linear = [
        u1 * u2 * rho / 3.0 + (u1 ** 3 * l2 + u2 ** 3 * l1) / 6.0,
        (u2 * rho ** 3 / 4.0 + 3.0 * u1 ** 2 * u2 * rho / 8.0 + 3.0 * u1 ** 4 * l2 / 8.0) / 3.0,
        (u1 * rho ** 3 / 4.0 + 3.0 * u2 ** 2 * u1 * rho / 8.0 + 3.0 * u2 ** 4 * l1 / 8.0) / 3.0,
        rho ** 5 / 15.0,
    ]
    return inverse, linear


def _rectangle(panel) -> Tuple[np.ndarray, np.ndarray]:
    """Lower corner and side lengths of a panel that is an axis-aligned rectangle in z = 0."""
    if abs(panel.e1[1]) + abs(panel.e1[2]) + abs(panel.e2[0]) + abs(panel.e2[2]) + abs(panel.origin[2]) > 0.0:
        raise ValueError("rectangle oracle needs axis-aligned panels in the plane z = 0")
    return panel.origin[:2], np.array([panel.e1[0], panel.e2[1]])


def _inner_integrals(x: np.ndarray, A, beta: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """int_A density(y) / |x - y| dy and int_A density(y) |x - y| dy for in-plane points x (n, 2)."""
    origin, sides = _rectangle(A)
    b00, b10, b01, b11 = beta
    sigma = (x[:, 0] - origin[0]) / sides[0]
    tau = (x[:, 1] - origin[1]) / sides[1]
    # density as a polynomial in u = y - x
    coeffs = [
        b00 + b10 * sigma + b01 * tau + b11 * sigma * tau,
        (b10 + b11 * tau) / sides[0],
        (b01 + b11 * sigma) / sides[1],
        np.full(len(x), b11 / (sides[0] * sides[1])),
    ]
    lo = origin - x
    hi = origin + sides - x
    inverse = np.zeros(len(x))
    linear = np.zeros(len(x))
    for c1, c2, sign in ((hi, hi, 1.0), (lo, hi, -1.0), (hi, lo, -1.0), (lo, lo, 1.0)):
        f_inv, f_lin = _antiderivatives(c1[:, 0], c2[:, 1])
        for c, fi, fl in zip(coeffs, f_inv, f_lin):
            inverse += sign * c * fi
            linear += sign * c * fl
    return inverse, linear


def _graded_axis(cuts: Sequence[float], order: int, ratio: float, layers: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss on [0, 1] split at the cuts and graded towards every break."""
    breaks = sorted({0.0, 1.0} | {float(c) for c in cuts if 0.0 < c < 1.0})
    p, w = graded_segment_rule(order, True, True, ratio, layers)
    points = [lo + (hi - lo) * p for lo, hi in zip(breaks[:-1], breaks[1:])]
    weights = [(hi - lo) * w for lo, hi in zip(breaks[:-1], breaks[1:])]
    return np.concatenate(points), np.concatenate(weights)


def _tail_kernel(k, r: np.ndarray, terms: int = 40) -> np.ndarray:
    """(e^{ikr} - 1)/(4 pi r) - ik/(4 pi) + k^2 r/(8 pi), summed from its Taylor series."""
    z = 1j * k * r
    acc = np.ones_like(z)
    for n in range(terms, 3, -1):
        acc = 1.0 + acc * z / n
    return acc * (1j * k) ** 3 * r ** 2 / (6.0 * FOUR_PI)


def rectangle_pair(k, A, B, beta_a: Sequence[float], beta_b: Sequence[float],
                   order: int = 8, ratio: float = 0.3, layers: int = 18) -> complex:
    """
    int_B int_A density_b(x) G_k(|x - y|) density_a(y) dS_y dS_x for axis-aligned
    rectangles in one plane and bilinear densities (see bilinear).

    The 1/r and r terms of the kernel have closed-form inner integrals, taken
    on an outer rule graded towards the lines of A's edges; the constant term
    is a product of panel integrals; the tail, smooth up to an r^3 kink, is
    integrated by subdivision.
    """
    origin_a, sides_a = _rectangle(A)
    origin_b, sides_b = _rectangle(B)
    axes = [_graded_axis(((origin_a[d] - origin_b[d]) / sides_b[d],
                          (origin_a[d] + sides_a[d] - origin_b[d]) / sides_b[d]), order, ratio, layers)
            for d in range(2)]
    s, t = np.meshgrid(axes[0][0], axes[1][0], indexing="ij")
    local = np.stack([s.ravel(), t.ravel()], axis=1)
    weights = np.outer(axes[0][1], axes[1][1]).ravel() * B.area
    x = origin_b + local * sides_b
    inverse, linear = _inner_integrals(x, A, beta_a)
    fb = bilinear(beta_b)(local) * weights

    b00, b10, b01, b11 = beta_a
    mass_a = A.area * (b00 + 0.5 * b10 + 0.5 * b01 + 0.25 * b11)
    value = fb @ inverse / FOUR_PI + 1j * k * mass_a * fb.sum() / FOUR_PI - k * k * (fb @ linear) / (2.0 * FOUR_PI)
    if k != 0:
        value += subdivided_pair(lambda r: _tail_kernel(k, r), A, B, bilinear(beta_a), bilinear(beta_b),
                                 pieces=6, order=8)
    return complex(value)


def ones(local: np.ndarray) -> np.ndarray:
    return np.ones(len(np.atleast_2d(local)))
