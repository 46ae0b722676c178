# -------------------------------------------------
# Skeleton gamma: subdomain interfaces plus the screen boundary, as oriented
# straight segments with the mesh edges of each adjacent side.
#
# Orientation: every segment gets its tangent t once, at construction. The
# "left" side is the subdomain n x t points into; on the screen boundary the
# owning subdomain is always left, so the jump there is the plain trace.
# Interfaces take the counterclockwise direction of their lower-numbered
# subdomain (flip_interfaces=True takes the higher one instead).
# -------------------------------------------------

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from helpers.errors import GeometryError

SNAP_TOL = 1e-10


@dataclass(frozen=True)
class SideEdge:
    """A mesh edge of one side lying on a segment, covering parameters [s0, s1] along it."""
    subdomain: int
    element: int
    local_edge: int
    s0: float
    s1: float


@dataclass(frozen=True)
class PieceSide:
    """
    Trace data of one side on a skeleton piece.

    @param sign: +1 for the left side, -1 for the right side.
    @param ref_start: reference coordinates of the piece start in the element.
    @param ref_end: reference coordinates of the piece end in the element.
    """
    subdomain: int
    element: int
    sign: float
    ref_start: Tuple[float, float]
    ref_end: Tuple[float, float]


@dataclass(frozen=True)
class SkeletonPiece:
    """
    Part of a segment between two consecutive breakpoints of the merged
    (both sides') edge subdivisions. Jumps of nodal functions are linear on it.
    """
    segment: int
    start: np.ndarray
    end: np.ndarray
    tangent: np.ndarray
    length: float
    sides: Tuple[PieceSide, ...]


@dataclass(frozen=True)
class Segment:
    start: np.ndarray
    end: np.ndarray
    tangent: np.ndarray
    left: int
    right: Optional[int]
    side_edges: Tuple[Tuple[SideEdge, ...], ...]

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    def isBoundary(self) -> bool:
        return self.right is None


class Skeleton:
    """
    Oriented segments of gamma with their per-side mesh edges, and the pieces
    obtained by merging the breakpoints of both sides.
    """

    def __init__(self, segments: List[Segment], pieces: List[SkeletonPiece]):
        self.segments = segments
        self.pieces = pieces

    def interiorSegments(self) -> List[Segment]:
        return [s for s in self.segments if not s.isBoundary()]

    def boundarySegments(self) -> List[Segment]:
        return [s for s in self.segments if s.isBoundary()]

    def interiorLength(self) -> float:
        return sum(s.length for s in self.interiorSegments())

    def boundaryLength(self) -> float:
        return sum(s.length for s in self.boundarySegments())

    def oneSidedLength(self) -> float:
        """Sum of the lengths of all mesh edges on gamma, each side counted separately."""
        return sum(e.s1 - e.s0 for s in self.segments for side in s.side_edges for e in side)

    def chains(self) -> List[List[int]]:
        """
        Groups segments into maximal chains of collinear, contiguous segments of
        the same kind (interface or boundary) with the same tangent.

        @returns lists of segment indices, each ordered along the tangent.
        """
        remaining = set(range(len(self.segments)))
        chains = []
        while remaining:
            first = min(remaining)
            remaining.discard(first)
            chain = [first]
            grown = True
            while grown:
                grown = False
                for i in sorted(remaining):
                    if self._continues(chain[-1], i):
                        chain.append(i)
                    elif self._continues(i, chain[0]):
                        chain.insert(0, i)
                    else:
                        continue
                    remaining.discard(i)
                    grown = True
            chains.append(chain)
        return chains

    def _continues(self, a: int, b: int) -> bool:
        sa, sb = self.segments[a], self.segments[b]
        return (sa.isBoundary() == sb.isBoundary()
                and np.allclose(sa.tangent, sb.tangent, atol=SNAP_TOL)
                and np.linalg.norm(sa.end - sb.start) < SNAP_TOL)

    def __repr__(self):
        return (f"Skeleton(segments={len(self.segments)}, interior={len(self.interiorSegments())}, "
                f"pieces={len(self.pieces)})")


def extract_skeleton(geometry, meshes: Sequence, flip_interfaces: bool = False) -> Skeleton:
    """
    Finds every interface and boundary segment of the decomposition and the
    mesh edges each side contributes to it.

    @param geometry: ScreenGeometry.
    @param meshes: SubdomainMesh per subdomain, ordered by subdomain id.
    @param flip_interfaces: orient interfaces along the higher-numbered subdomain instead.
    @returns Skeleton.
    """
    if len(meshes) != geometry.numSubdomains():
        raise GeometryError("need exactly one mesh per subdomain")
    normal = geometry.normal(0)
    raw = []  # (start, end, left, right)

    for j in range(geometry.numSubdomains()):
        for p, q in geometry.edges(j):
            length = np.linalg.norm(q - p)
            t = (q - p) / length
            covered = []
            for i in range(geometry.numSubdomains()):
                if i == j:
                    continue
                for p2, q2 in geometry.edges(i):
                    overlap = _collinear_overlap(p, t, length, p2, q2)
                    if overlap is None:
                        continue
                    s0, s1 = overlap
                    covered.append((s0, s1))
                    owner = j < i if not flip_interfaces else j > i
                    if owner:
                        raw.append((p + s0 * t, p + s1 * t, j, i))
            for s0, s1 in _uncovered(covered, length):
                raw.append((p + s0 * t, p + s1 * t, j, None))

    segments = []
    for start, end, left, right in raw:
        tangent = (end - start) / np.linalg.norm(end - start)
        inward = np.cross(normal, tangent)
        sides = [left] if right is None else [left, right]
        side_edges = tuple(_side_edges(meshes[s], s, start, tangent, np.linalg.norm(end - start)) for s in sides)
        for s, edges in zip(sides, side_edges):
            covered = sum(e.s1 - e.s0 for e in edges)
            if abs(covered - np.linalg.norm(end - start)) > SNAP_TOL:
                raise GeometryError(f"mesh of subdomain {s} does not cover skeleton segment {start}->{end}")
        # left side must lie on the n x t side
        centre = meshes[left].centres().mean(axis=0)
        if np.dot(centre - start, inward) <= 0.0:
            raise GeometryError("skeleton orientation inconsistent with the subdomain normal")
        segments.append(Segment(start, end, tangent, left, right, side_edges))

    pieces = []
    for index, seg in enumerate(segments):
        pieces.extend(_pieces(index, seg, meshes))
    return Skeleton(segments, pieces)


def _collinear_overlap(p, t, length, p2, q2) -> Optional[Tuple[float, float]]:
    """Parameter interval of [p2, q2] on the line p + s t, clipped to [0, length], if collinear and of positive length."""
    for point in (p2, q2):
        d = point - p
        off = d - np.dot(d, t) * t
        if np.linalg.norm(off) > SNAP_TOL:
            return None
    a, b = sorted((float(np.dot(p2 - p, t)), float(np.dot(q2 - p, t))))
    s0, s1 = max(a, 0.0), min(b, length)
    if s1 - s0 <= SNAP_TOL:
        return None
    return s0, s1


def _uncovered(covered, length) -> List[Tuple[float, float]]:
    gaps = []
    cursor = 0.0
    for s0, s1 in sorted(covered):
        if s0 - cursor > SNAP_TOL:
            gaps.append((cursor, s0))
        cursor = max(cursor, s1)
    if length - cursor > SNAP_TOL:
        gaps.append((cursor, length))
    return gaps


# local edges of a reference element as (from node, to node)
LOCAL_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))


def _side_edges(mesh, subdomain, start, tangent, length) -> Tuple[SideEdge, ...]:
    corners = mesh.nodes[mesh.elements]
    heads = corners[:, [a for a, _ in LOCAL_EDGES]]
    tails = corners[:, [b for _, b in LOCAL_EDGES]]
    da = heads - start
    db = tails - start
    sa = da @ tangent
    sb = db @ tangent
    off_a = np.linalg.norm(da - sa[..., None] * tangent, axis=-1)
    off_b = np.linalg.norm(db - sb[..., None] * tangent, axis=-1)
    lo = np.minimum(sa, sb)
    hi = np.maximum(sa, sb)
    on_segment = ((off_a <= SNAP_TOL) & (off_b <= SNAP_TOL)
                  & (lo >= -SNAP_TOL) & (hi <= length + SNAP_TOL) & (hi - lo > SNAP_TOL))
    found = [SideEdge(subdomain, int(e), int(le), max(float(lo[e, le]), 0.0), min(float(hi[e, le]), length))
             for e, le in zip(*np.nonzero(on_segment))]
    found.sort(key=lambda edge: edge.s0)
    return tuple(found)


def _pieces(index: int, seg: Segment, meshes) -> List[SkeletonPiece]:
    breaks = sorted({round(v / SNAP_TOL) * SNAP_TOL for side in seg.side_edges for e in side for v in (e.s0, e.s1)})
    merged = [breaks[0]]
    for b in breaks[1:]:
        if b - merged[-1] > SNAP_TOL:
            merged.append(b)
    merged[0] = 0.0
    merged[-1] = seg.length
    pieces = []
    for s0, s1 in zip(merged[:-1], merged[1:]):
        mid = 0.5 * (s0 + s1)
        start = seg.start + s0 * seg.tangent
        end = seg.start + s1 * seg.tangent
        sides = []
        for number, side in enumerate(seg.side_edges):
            edge = next(e for e in side if e.s0 - SNAP_TOL <= mid <= e.s1 + SNAP_TOL)
            mesh = meshes[edge.subdomain]
            ref = mesh.toReference(edge.element, np.stack([start, end]))
            sides.append(PieceSide(edge.subdomain, edge.element, 1.0 if number == 0 else -1.0,
                                   tuple(ref[0]), tuple(ref[1])))
        pieces.append(SkeletonPiece(index, start, end, seg.tangent, float(s1 - s0), tuple(sides)))
    return pieces
