# -------------------------------------------------
# Representation potential off the screen:
#   U_h(x) = sum_j u_j int_Gamma K_k(x, y) phi_j(y) dS_y
# with the double layer kernel K_k.
# -------------------------------------------------

from typing import Optional

import numpy as np

from geometry.mesh import mesh_stats
from helpers.errors import DomainError
from kernels.helmholtz import double_layer_kernel
from quadrature.gauss import square_rule
from spaces.shapes import shape_values

NEAR_ORDER = 12
FAR_ORDER = 6
# points closer than this to the screen count as on it
ON_SCREEN_TOL = 1e-12


class _ScreenElements:
    """All elements of all subdomains stacked, with their dofs and inverse frames."""

    def __init__(self, dofs):
        self.origins = np.concatenate([m.origins for m in dofs.meshes])
        self.e1 = np.concatenate([m.e1 for m in dofs.meshes])
        self.e2 = np.concatenate([m.e2 for m in dofs.meshes])
        self.areas = np.concatenate([m.areas for m in dofs.meshes])
        self.normals = np.concatenate([np.broadcast_to(m.normal, m.e1.shape) for m in dofs.meshes])
        self.dofs = dofs.allElementDofs()
        jac = np.stack([self.e1, self.e2], axis=2)                            # (E, 3, 2)
        self.pinv = np.linalg.pinv(jac)                                       # (E, 2, 3)

    def distance(self, x: np.ndarray) -> float:
        """Distance from x to the screen (exact for rectangular elements, an upper bound otherwise)."""
        local = np.clip(np.einsum("eij,ej->ei", self.pinv, x - self.origins), 0.0, 1.0)
        nearest = self.origins + local[:, :1] * self.e1 + local[:, 1:] * self.e2
        return float(np.linalg.norm(nearest - x, axis=1).min())


def evaluate_potential(k, solution, dofs, x: np.ndarray, h: Optional[float] = None):
    """
    @param solution: SolutionVector (or anything with .coefficients) on `dofs`.
    @param x: observation point (3,) or points (n, 3) off the screen.
    @param h: mesh size for the near-field order switch; taken from the meshes if None.
    @returns complex value, or (n,) complex values.
    @raises DomainError: a point lies on the screen.
    """
    coefficients = np.asarray(getattr(solution, "coefficients", solution))
    if len(coefficients) != dofs.num_dofs:
        raise DomainError(f"solution has {len(coefficients)} coefficients, the space {dofs.num_dofs}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    points = np.atleast_2d(x)
    h = mesh_stats(dofs.meshes)[0] if h is None else h
    elements = _ScreenElements(dofs)
    values = np.array([_potential_at(k, coefficients, elements, p, h) for p in points])
    return complex(values[0]) if single else values


def _potential_at(k, coefficients, elements: _ScreenElements, x: np.ndarray, h: float) -> complex:
    dist = elements.distance(x)
    if dist <= ON_SCREEN_TOL * max(1.0, h):
        raise DomainError(f"potential evaluated on the screen at {tuple(x)}")
    pts, w = square_rule(NEAR_ORDER if dist < 2.0 * h else FAR_ORDER)
    y = (elements.origins[:, None, :] + pts[None, :, :1] * elements.e1[:, None, :]
         + pts[None, :, 1:] * elements.e2[:, None, :])                        # (E, q, 3)
    kernel = double_layer_kernel(k, x, y, elements.normals[:, None, :])       # (E, q)
    local = np.einsum("eq,q,qa,e->ea", kernel, w, shape_values(pts), elements.areas)
    keep = elements.dofs >= 0
    return complex(np.sum(local[keep] * coefficients[elements.dofs[keep]]))
