# -------------------------------------------------
# Bilinear shape functions on the reference square and their surface curls.
#
# Local node order (0,0), (1,0), (1,1), (0,1). On a parallelogram element
# x = origin + s e1 + t e2 the surface gradient is G grad_(s,t), with
# G = J (J^T J)^{-1}, J = [e1 e2], and the surface curl is grad_Gamma(phi) x n,
# i.e. (d2 phi, -d1 phi, 0) for n = e3.
# -------------------------------------------------

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

NUM_SHAPES = 4


def shape_values(ref: np.ndarray) -> np.ndarray:
    """@returns (n, 4) values of N0..N3 at reference points (n, 2)."""
    ref = np.atleast_2d(ref)
    s, t = ref[:, 0], ref[:, 1]
    return np.stack([(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t], axis=1)


def shape_gradients(ref: np.ndarray) -> np.ndarray:
    """@returns (n, 4, 2) derivatives (d/ds, d/dt) of N0..N3."""
    ref = np.atleast_2d(ref)
    s, t = ref[:, 0], ref[:, 1]
    ds = np.stack([-(1 - t), 1 - t, t, -t], axis=1)
    dt = np.stack([-(1 - s), -s, s, 1 - s], axis=1)
    return np.stack([ds, dt], axis=2)


# d/ds N_a = _DS_CONST[a] + _DS_T[a] t ;  d/dt N_a = _DT_CONST[a] + _DT_S[a] s
_DS_CONST = np.array([-1.0, 1.0, 0.0, 0.0])
_DS_T = np.array([1.0, -1.0, 1.0, -1.0])
_DT_CONST = np.array([-1.0, 0.0, 0.0, 1.0])
_DT_S = np.array([1.0, -1.0, 1.0, -1.0])


@dataclass(frozen=True, eq=False)
class BasisCurl:
    """
    Surface curls of the shape functions of one element as exact linear
    polynomials in the reference coordinates:

        curl N_a(s, t) = constant[a] + s * s_coeff[a] + t * t_coeff[a]   (world vectors)

    @param shapes: local shape indices the rows refer to.
    """
    element: int
    shapes: Tuple[int, ...]
    constant: np.ndarray
    s_coeff: np.ndarray
    t_coeff: np.ndarray

    def evaluate(self, ref: np.ndarray) -> np.ndarray:
        """@returns (n, m, 3) curl vectors at reference points (n, 2)."""
        ref = np.atleast_2d(ref)
        return (self.constant[None] + ref[:, 0, None, None] * self.s_coeff[None]
                + ref[:, 1, None, None] * self.t_coeff[None])

    def __call__(self, ref: np.ndarray) -> np.ndarray:
        return self.evaluate(ref)


def surface_frame(e1: np.ndarray, e2: np.ndarray, normal: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    @returns (c1, c2): world vectors with curl phi = c1 d_s phi + c2 d_t phi.
    """
    jac = np.stack([e1, e2], axis=1)
    g = jac @ np.linalg.inv(jac.T @ jac)
    return np.cross(g[:, 0], normal), np.cross(g[:, 1], normal)


def element_curls(e1: np.ndarray, e2: np.ndarray, normal: np.ndarray, element: int = -1,
                  shapes: Tuple[int, ...] = (0, 1, 2, 3)) -> BasisCurl:
    c1, c2 = surface_frame(e1, e2, normal)
    idx = list(shapes)
    constant = np.outer(_DS_CONST[idx], c1) + np.outer(_DT_CONST[idx], c2)
    s_coeff = np.outer(_DT_S[idx], c2)
    t_coeff = np.outer(_DS_T[idx], c1)
    return BasisCurl(element, tuple(shapes), constant, s_coeff, t_coeff)


def shape_curl(mesh, element: int, shape: Optional[int] = None) -> BasisCurl:
    """
    Surface curl of shape function `shape` (all four if None) on element
    `element` of a SubdomainMesh.
    """
    _, e1, e2 = mesh.elementFrame(element)
    shapes = (0, 1, 2, 3) if shape is None else (int(shape),)
    return element_curls(e1, e2, mesh.normal, element, shapes)
