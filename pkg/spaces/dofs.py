# -------------------------------------------------
# Degrees of freedom of the discrete spaces:
#   nonconforming  X_h = prod_j X_h,j, every subdomain node has its own index
#                  (coincident interface nodes are duplicated per side);
#   conforming     continuous on Gamma, zero trace on the screen boundary;
#                  needs matching meshes across interfaces.
# -------------------------------------------------

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from helpers.errors import ConfigurationError

NONCONFORMING = "nonconforming"
CONFORMING = "conforming"
DOF_KINDS = (NONCONFORMING, CONFORMING)

# coordinates are merged after rounding to this many decimals
_MERGE_DECIMALS = 10


@dataclass(frozen=True, eq=False)
class DofSystem:
    """
    @param kind: 'nonconforming' or 'conforming'.
    @param meshes: the SubdomainMesh list the maps refer to.
    @param node_maps: per subdomain, global index of every local node (-1 = no dof).
    @param num_dofs: N.
    """
    kind: str
    meshes: Tuple
    node_maps: Tuple[np.ndarray, ...]
    num_dofs: int

    def isConforming(self) -> bool:
        return self.kind == CONFORMING

    def elementDofs(self, j: int) -> np.ndarray:
        """(m, 4) global dofs of the elements of subdomain j, -1 where none."""
        return self.node_maps[j][self.meshes[j].elements]

    def allElementDofs(self) -> np.ndarray:
        return np.concatenate([self.elementDofs(j) for j in range(len(self.meshes))])

    def dofCoordinates(self) -> np.ndarray:
        """(N, 3) position of the node of every dof."""
        coords = np.zeros((self.num_dofs, 3))
        for mesh, node_map in zip(self.meshes, self.node_maps):
            used = node_map >= 0
            coords[node_map[used]] = mesh.nodes[used]
        return coords

    def subdomainDofs(self, j: int) -> np.ndarray:
        node_map = self.node_maps[j]
        return np.unique(node_map[node_map >= 0])

    def __repr__(self):
        return f"DofSystem(kind={self.kind}, subdomains={len(self.meshes)}, N={self.num_dofs})"


def _lexicographic(nodes: np.ndarray) -> np.ndarray:
    rounded = np.round(nodes, _MERGE_DECIMALS)
    return np.lexsort((rounded[:, 2], rounded[:, 1], rounded[:, 0]))


def build_dofs(meshes: Sequence, kind: str = NONCONFORMING) -> DofSystem:
    """
    Numbers the nodal basis functions: subdomain-major, then lexicographic
    in the node coordinates (x, then y, then z).

    @raises ConfigurationError: unknown kind, or conforming on nonmatching meshes.
    """
    if kind not in DOF_KINDS:
        raise ConfigurationError([f"unknown space kind '{kind}' (expected one of {', '.join(DOF_KINDS)})"])
    if kind == NONCONFORMING:
        maps, offset = [], 0
        for mesh in meshes:
            node_map = np.empty(mesh.numNodes(), dtype=int)
            node_map[_lexicographic(mesh.nodes)] = offset + np.arange(mesh.numNodes())
            maps.append(node_map)
            offset += mesh.numNodes()
        return DofSystem(kind, tuple(meshes), tuple(maps), offset)
    return _build_conforming(meshes)


def _build_conforming(meshes: Sequence) -> DofSystem:
    merged_ids, merged_coords = _merge_nodes(meshes)
    boundary = _boundary_nodes(meshes, merged_ids, merged_coords)

    global_index: Dict[int, int] = {}
    maps = []
    for mesh, ids in zip(meshes, merged_ids):
        node_map = np.full(mesh.numNodes(), -1, dtype=int)
        for local in _lexicographic(mesh.nodes):
            m = int(ids[local])
            if m in boundary:
                continue
            if m not in global_index:
                global_index[m] = len(global_index)
            node_map[local] = global_index[m]
        maps.append(node_map)
    return DofSystem(CONFORMING, tuple(meshes), tuple(maps), len(global_index))


def _merge_nodes(meshes) -> Tuple[List[np.ndarray], np.ndarray]:
    """Identifies physically coincident nodes of all subdomains."""
    all_nodes = np.concatenate([m.nodes for m in meshes])
    rounded = np.round(all_nodes, _MERGE_DECIMALS) + 0.0
    coords, inverse = np.unique(rounded, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    ids, start = [], 0
    for mesh in meshes:
        ids.append(inverse[start:start + mesh.numNodes()])
        start += mesh.numNodes()
    return ids, coords


def _boundary_nodes(meshes, merged_ids, coords) -> set:
    """
    Nodes on edges used by a single element after merging. A node strictly
    inside such an edge is a hanging node: the meshes do not match.
    """
    counts: Dict[Tuple[int, int], int] = {}
    for mesh, ids in zip(meshes, merged_ids):
        for element in ids[mesh.elements]:
            for a, b in ((0, 1), (1, 2), (2, 3), (3, 0)):
                key = (min(element[a], element[b]), max(element[a], element[b]))
                counts[key] = counts.get(key, 0) + 1
    single = [key for key, c in counts.items() if c == 1]
    if not single:
        return set()

    tree = cKDTree(coords)
    hanging = []
    for a, b in single:
        pa, pb = coords[a], coords[b]
        half = 0.5 * np.linalg.norm(pb - pa)
        for m in tree.query_ball_point(0.5 * (pa + pb), half * (1.0 + 1e-9)):
            if m in (a, b):
                continue
            d = pb - pa
            tau = np.dot(coords[m] - pa, d) / np.dot(d, d)
            off = np.linalg.norm(coords[m] - pa - tau * d)
            if 0.0 < tau < 1.0 and off <= 1e-10 * half:
                hanging.append(tuple(coords[m]))
    if hanging:
        raise ConfigurationError([f"conforming space needs matching meshes; {len(hanging)} hanging node(s), "
                                  f"first at {hanging[0]}"])
    return {n for key in single for n in key}


def injection(conforming: DofSystem, nonconforming: DofSystem) -> sparse.csr_matrix:
    """
    Sparse (N_nc x N_c) matrix writing a conforming coefficient vector as an
    element of X_h on the same meshes.
    """
    if conforming.kind != CONFORMING or nonconforming.kind != NONCONFORMING:
        raise ConfigurationError(["injection maps a conforming space into a nonconforming one"])
    rows, cols = [], []
    for c_map, nc_map in zip(conforming.node_maps, nonconforming.node_maps):
        used = c_map >= 0
        rows.append(nc_map[used])
        cols.append(c_map[used])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)),
                             shape=(nonconforming.num_dofs, conforming.num_dofs))


def mass_matrix(dofs) -> sparse.csr_matrix:
    """L2(Gamma) Gram matrix of the nodal basis, exact on parallelograms."""
    local = np.array([[4.0, 2.0, 1.0, 2.0],
                      [2.0, 4.0, 2.0, 1.0],
                      [1.0, 2.0, 4.0, 2.0],
                      [2.0, 1.0, 2.0, 4.0]]) / 36.0
    rows, cols, vals = [], [], []
    for j, mesh in enumerate(dofs.meshes):
        edofs = dofs.elementDofs(j)
        blocks = mesh.areas[:, None, None] * local[None]
        r = np.broadcast_to(edofs[:, :, None], blocks.shape)
        c = np.broadcast_to(edofs[:, None, :], blocks.shape)
        keep = (r >= 0) & (c >= 0)
        rows.append(r[keep])
        cols.append(c[keep])
        vals.append(blocks[keep])
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(dofs.num_dofs, dofs.num_dofs))
