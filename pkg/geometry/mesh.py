# -------------------------------------------------
# Quadrilateral meshes of the subdomains and global mesh statistics.
# Elements are parallelograms: node order (0,0), (1,0), (1,1), (0,1) in the
# reference square, counterclockwise w.r.t. the subdomain normal.
# -------------------------------------------------

from typing import List, Sequence, Tuple

import numpy as np

from helpers.errors import GeometryError

# largest admissible h_j / h_j_min inside one subdomain
MAX_SHAPE_RATIO = 4.0


class SubdomainMesh:
    """
    Conforming quadrilateral mesh of one subdomain.

    @param subdomain_id: index of the subdomain in its ScreenGeometry.
    @param nodes: (n, 3) node coordinates.
    @param elements: (m, 4) node indices per element, counterclockwise.
    @param normal: unit normal of the subdomain.
    """

    def __init__(self, subdomain_id: int, nodes: np.ndarray, elements: np.ndarray, normal: np.ndarray,
                 max_shape_ratio: float = MAX_SHAPE_RATIO):
        self.subdomain_id = subdomain_id
        self.nodes = np.asarray(nodes, dtype=float)
        self.elements = np.asarray(elements, dtype=int)
        self.normal = np.asarray(normal, dtype=float)

        origin = self.nodes[self.elements[:, 0]]
        e1 = self.nodes[self.elements[:, 1]] - origin
        e2 = self.nodes[self.elements[:, 3]] - origin
        opposite = self.nodes[self.elements[:, 2]]
        scale = np.maximum(np.linalg.norm(e1, axis=1), np.linalg.norm(e2, axis=1))
        if np.any(np.linalg.norm(origin + e1 + e2 - opposite, axis=1) > 1e-10 * scale):
            raise GeometryError(f"subdomain {subdomain_id}: only parallelogram elements are supported")
        if np.any(np.cross(e1, e2) @ self.normal <= 0.0):
            raise GeometryError(f"subdomain {subdomain_id}: element vertices must be counterclockwise")

        self.origins = origin
        self.e1 = e1
        self.e2 = e2
        self.diameters = np.maximum(np.linalg.norm(e1 + e2, axis=1), np.linalg.norm(e1 - e2, axis=1))
        self.areas = np.linalg.norm(np.cross(e1, e2), axis=1)
        self.h = float(self.diameters.max())
        self.h_min = float(self.diameters.min())
        if self.h / self.h_min > max_shape_ratio:
            raise GeometryError(
                f"subdomain {subdomain_id}: shape ratio {self.h / self.h_min:.3f} exceeds {max_shape_ratio}")

    def numElements(self) -> int:
        return len(self.elements)

    def numNodes(self) -> int:
        return len(self.nodes)

    def centres(self) -> np.ndarray:
        return self.origins + 0.5 * (self.e1 + self.e2)

    def elementFrame(self, e: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """@returns (origin, e1, e2) of the affine map of element e."""
        return self.origins[e], self.e1[e], self.e2[e]

    def elementCorners(self, e: int) -> np.ndarray:
        return self.nodes[self.elements[e]]

    def toReference(self, e: int, points: np.ndarray) -> np.ndarray:
        """
        Reference coordinates of in-plane points w.r.t. element e.

        @param points: (n, 3) points in the plane of the element.
        @returns (n, 2) reference coordinates.
        """
        jac = np.stack([self.e1[e], self.e2[e]], axis=1)
        pinv = np.linalg.pinv(jac)
        return (np.atleast_2d(points) - self.origins[e]) @ pinv.T

    def __repr__(self):
        return f"SubdomainMesh(subdomain={self.subdomain_id}, elements={self.numElements()}, h={self.h:.4g})"


def mesh_subdomain(geometry, j: int, nx: int, ny: int) -> SubdomainMesh:
    """
    Tensor mesh of a parallelogram subdomain with nx x ny cells.

    @param geometry: ScreenGeometry.
    @param j: subdomain index (its polygon must have 4 vertices).
    """
    poly = geometry.polygon(j)
    if len(poly) != 4:
        raise GeometryError(f"subdomain {j}: tensor meshing needs a quadrilateral subdomain")
    v0, v1, v2, v3 = poly
    if np.linalg.norm(v0 + (v1 - v0) + (v3 - v0) - v2) > 1e-12 * max(1.0, np.linalg.norm(v1 - v0)):
        raise GeometryError(f"subdomain {j}: tensor meshing needs a parallelogram subdomain")
    if nx < 1 or ny < 1:
        raise GeometryError(f"subdomain {j}: need at least one cell per direction")

    s = np.arange(nx + 1) / nx
    t = np.arange(ny + 1) / ny
    ss, tt = np.meshgrid(s, t, indexing="xy")
    nodes = v0 + ss.reshape(-1, 1) * (v1 - v0) + tt.reshape(-1, 1) * (v3 - v0)

    def node(ix, iy):
        return iy * (nx + 1) + ix

    elements = [(node(ix, iy), node(ix + 1, iy), node(ix + 1, iy + 1), node(ix, iy + 1))
                for iy in range(ny) for ix in range(nx)]
    return SubdomainMesh(j, nodes, np.array(elements, dtype=int), geometry.normal(j))


def mesh_stats(meshes: Sequence[SubdomainMesh]) -> Tuple[float, float]:
    """
    @returns (h, h_min): largest and smallest element diameter over all subdomains.
    """
    if not meshes:
        raise GeometryError("mesh_stats needs at least one mesh")
    return max(m.h for m in meshes), min(m.h_min for m in meshes)


def total_elements(meshes: Sequence[SubdomainMesh]) -> int:
    return sum(m.numElements() for m in meshes)


def element_offsets(meshes: Sequence[SubdomainMesh]) -> List[int]:
    """Global element numbering: mesh j owns [offsets[j], offsets[j+1])."""
    offsets = [0]
    for m in meshes:
        offsets.append(offsets[-1] + m.numElements())
    return offsets
