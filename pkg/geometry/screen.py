# -------------------------------------------------
# Screen geometry: the open flat surface Gamma, its decomposition into plane
# polygonal subdomains, and builders for the screens used in the experiments.
# -------------------------------------------------

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from helpers.errors import GeometryError

GEOMETRY_TOL = 1e-12


@dataclass(frozen=True)
class Subdomain:
    """
    A plane convex polygon, vertices listed counterclockwise w.r.t. its normal.

    @param vertex_ids: indices into ScreenGeometry.vertices.
    @param normal: unit normal n of the subdomain plane.
    """
    vertex_ids: Tuple[int, ...]
    normal: np.ndarray = field(compare=False)


class ScreenGeometry:
    """
    Decomposition T = {Gamma_j} of a flat open screen into plane polygons.
    Checks planarity, pairwise interior-disjointness and a common normal.
    """

    def __init__(self, vertices: np.ndarray, polygons: Sequence[Sequence[int]]):
        """
        @param vertices: (n, 3) array of points.
        @param polygons: per subdomain, its vertex indices in counterclockwise order.
        """
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise GeometryError("vertices must be an (n, 3) array")
        self.subdomains: List[Subdomain] = []
        for ids in polygons:
            ids = tuple(int(i) for i in ids)
            if len(ids) < 3:
                raise GeometryError(f"subdomain {ids} has fewer than 3 vertices")
            normal = _newell_normal(self.vertices[list(ids)])
            self.subdomains.append(Subdomain(ids, normal))
        self._checkPlanar()
        self._checkNormals()
        self._checkConvex()
        self._checkDisjoint()

    def numSubdomains(self) -> int:
        return len(self.subdomains)

    def polygon(self, j: int) -> np.ndarray:
        """@returns (m, 3) vertex coordinates of subdomain j, counterclockwise."""
        return self.vertices[list(self.subdomains[j].vertex_ids)]

    def normal(self, j: int = 0) -> np.ndarray:
        return self.subdomains[j].normal

    def area(self, j: int) -> float:
        poly = self.polygon(j)
        n = self.subdomains[j].normal
        total = np.zeros(3)
        for a, b in zip(poly, np.roll(poly, -1, axis=0)):
            total += np.cross(a, b)
        return 0.5 * abs(float(np.dot(total, n)))

    def totalArea(self) -> float:
        return sum(self.area(j) for j in range(self.numSubdomains()))

    def edges(self, j: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        """@returns the polygon edges of subdomain j as (start, end) pairs in counterclockwise order."""
        poly = self.polygon(j)
        return [(poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))]

    # ─── Validation ────────────────────────────────────────────
    def _checkPlanar(self):
        for j, sub in enumerate(self.subdomains):
            poly = self.polygon(j)
            offsets = (poly - poly[0]) @ sub.normal
            if np.max(np.abs(offsets)) > GEOMETRY_TOL:
                raise GeometryError(f"subdomain {j} is not planar (deviation {np.max(np.abs(offsets)):.3e})")

    def _checkNormals(self):
        n0 = self.subdomains[0].normal
        for j, sub in enumerate(self.subdomains[1:], start=1):
            if abs(np.dot(sub.normal, n0) - 1.0) > GEOMETRY_TOL:
                raise GeometryError(
                    f"subdomain {j} normal {sub.normal} disagrees with {n0}; only single-sided flat screens are supported")
        # every subdomain must lie in the same plane
        for j in range(1, self.numSubdomains()):
            offset = (self.polygon(j) - self.polygon(0)[0]) @ n0
            if np.max(np.abs(offset)) > GEOMETRY_TOL:
                raise GeometryError(f"subdomain {j} is not in the plane of subdomain 0")

    def _checkConvex(self):
        for j, sub in enumerate(self.subdomains):
            poly = self.polygon(j)
            m = len(poly)
            for i in range(m):
                a, b, c = poly[i], poly[(i + 1) % m], poly[(i + 2) % m]
                turn = np.dot(np.cross(b - a, c - b), sub.normal)
                if turn < -GEOMETRY_TOL:
                    raise GeometryError(f"subdomain {j} is not convex")

    def _checkDisjoint(self):
        for i in range(self.numSubdomains()):
            for j in range(i + 1, self.numSubdomains()):
                if _convex_interiors_overlap(self.polygon(i), self.polygon(j), self.subdomains[0].normal):
                    raise GeometryError(f"subdomains {i} and {j} overlap")


def _newell_normal(poly: np.ndarray) -> np.ndarray:
    total = np.zeros(3)
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        total += np.cross(a, b)
    norm = np.linalg.norm(total)
    if norm <= GEOMETRY_TOL:
        raise GeometryError("degenerate subdomain polygon (zero area)")
    return total / norm


def _convex_interiors_overlap(p: np.ndarray, q: np.ndarray, normal: np.ndarray) -> bool:
    """Separating axis test for two coplanar convex polygons; touching boundaries do not count."""
    for poly in (p, q):
        for a, b in zip(poly, np.roll(poly, -1, axis=0)):
            axis = np.cross(normal, b - a)
            pp = p @ axis
            qq = q @ axis
            scale = max(np.linalg.norm(axis), 1.0)
            if pp.max() <= qq.min() + GEOMETRY_TOL * scale or qq.max() <= pp.min() + GEOMETRY_TOL * scale:
                return False
    return True


def rectangles_geometry(rectangles: Sequence[Tuple[float, float, float, float]]) -> ScreenGeometry:
    """
    Builds a screen in the plane z = 0 from axis-parallel rectangles (x0, x1, y0, y1).
    """
    vertices = []
    polygons = []
    for x0, x1, y0, y1 in rectangles:
        base = len(vertices)
        vertices.extend([(x0, y0, 0.0), (x1, y0, 0.0), (x1, y1, 0.0), (x0, y1, 0.0)])
        polygons.append((base, base + 1, base + 2, base + 3))
    return ScreenGeometry(np.array(vertices), polygons)


# coarse layout of the three-subdomain model screen: one half square and two
# quarter squares with cells (per side) chosen so that the interface meshes do not match
MODEL_RECTANGLES = [(-0.5, 0.0, -0.5, 0.5), (0.0, 0.5, -0.5, 0.0), (0.0, 0.5, 0.0, 0.5)]
MODEL_CELLS = [(2, 4), (3, 3), (2, 2)]


def build_rectangle_screen(rectangles, cells, levels: int = 0):
    """
    Screen from rectangles with tensor meshes of cells[j] = (nx, ny) at level 0,
    refined dyadically `levels` times.

    @returns (ScreenGeometry, list of SubdomainMesh, Skeleton).
    """
    from geometry.mesh import mesh_subdomain
    from geometry.skeleton import extract_skeleton

    if levels < 0:
        raise GeometryError(f"levels must be >= 0, got {levels}")
    geometry = rectangles_geometry(rectangles)
    factor = 2 ** levels
    meshes = [mesh_subdomain(geometry, j, nx * factor, ny * factor)
              for j, (nx, ny) in enumerate(cells)]
    skeleton = extract_skeleton(geometry, meshes)
    return geometry, meshes, skeleton


def build_model_screen(levels: int):
    """
    (-1/2, 1/2)^2 x {0} split into a half square and two quarter squares with
    nonmatching interface meshes. Each level halves every element edge.

    @param levels: refinement level (>= 0).
    @returns (ScreenGeometry, list of SubdomainMesh, Skeleton).
    """
    return build_rectangle_screen(MODEL_RECTANGLES, MODEL_CELLS, levels)


def build_unit_screen(levels: int):
    """Single-subdomain unit square with 2^(levels+1) cells per side."""
    return build_rectangle_screen([(-0.5, 0.5, -0.5, 0.5)], [(2, 2)], levels)


def build_split_screen(levels: int, left_cells: Tuple[int, int] = (1, 2), right_cells: Tuple[int, int] = (1, 2)):
    """Unit square split at x = 0 into two halves; matching meshes unless the cell counts differ."""
    return build_rectangle_screen([(-0.5, 0.0, -0.5, 0.5), (0.0, 0.5, -0.5, 0.5)],
                                  [left_cells, right_cells], levels)
