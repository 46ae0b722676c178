# -------------------------------------------------
# Near/far splitting of the Galerkin work items.
#
# Element pairs (and skeleton piece / element pairs) whose centres are at
# least far_ratio x the larger diameter apart are integrated with a low-order
# tensor rule, in batches: one row block of test items against all trial
# elements per task. Near pairs are masked out of the batch and integrated
# one by one elsewhere. Each task returns the rows it owns; they are added
# into the caller's matrices in block order, at most `threads` tasks held at
# a time, so results do not depend on the thread schedule.
# -------------------------------------------------

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from kernels.helmholtz import full_kernel
from quadrature.gauss import gauss_rule, square_rule
from quadrature.panels import Panel
from spaces.shapes import element_curls, shape_values

logger = logging.getLogger(__name__)

# complex entries of one kernel batch, per task
BATCH_ENTRIES = 1_000_000


@dataclass(frozen=True, eq=False)
class ElementTable:
    """Geometry, curls and global dofs of every element, in global element order."""
    panels: List[Panel]
    dofs: np.ndarray          # (E, 4), -1 = no dof
    origins: np.ndarray       # (E, 3)
    e1: np.ndarray
    e2: np.ndarray
    centres: np.ndarray
    diameters: np.ndarray
    areas: np.ndarray
    curls: List             # BasisCurl per element
    num_dofs: int

    def __len__(self):
        return len(self.panels)

    def selection(self, elements: np.ndarray) -> sparse.csr_matrix:
        """Sparse (4 |elements| x N) matrix picking the dofs of the listed elements' shapes."""
        d = self.dofs[elements].ravel()
        rows = np.nonzero(d >= 0)[0]
        return sparse.csr_matrix((np.ones(len(rows)), (rows, d[rows])), shape=(len(d), self.num_dofs))


def element_table(dofs) -> ElementTable:
    panels, curls, element_dofs = [], [], []
    for j, mesh in enumerate(dofs.meshes):
        edofs = dofs.elementDofs(j)
        for e in range(mesh.numElements()):
            g = len(panels)
            panels.append(Panel.fromElement(mesh, e, g))
            curls.append(element_curls(mesh.e1[e], mesh.e2[e], mesh.normal, g))
            element_dofs.append(edofs[e])
    origins = np.array([p.origin for p in panels])
    e1 = np.array([p.e1 for p in panels])
    e2 = np.array([p.e2 for p in panels])
    return ElementTable(panels, np.array(element_dofs, dtype=int), origins, e1, e2,
                        origins + 0.5 * (e1 + e2),
                        np.maximum(np.linalg.norm(e1 + e2, axis=1), np.linalg.norm(e1 - e2, axis=1)),
                        np.linalg.norm(np.cross(e1, e2), axis=1), curls, dofs.num_dofs)


def near_pairs(centres_a: np.ndarray, sizes_a: np.ndarray, centres_b: np.ndarray, sizes_b: np.ndarray,
               ratio: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Index pairs (ia, ib) with |c_a - c_b| < ratio * max(size_a, size_b).

    @returns arrays sorted by (ib, ia).
    """
    if not np.isfinite(ratio):
        ib, ia = np.meshgrid(np.arange(len(centres_b)), np.arange(len(centres_a)), indexing="ij")
        return ia.ravel(), ib.ravel()
    radius = ratio * max(float(sizes_a.max()), float(sizes_b.max()))
    tree_a = cKDTree(centres_a)
    tree_b = cKDTree(centres_b)
    ia, ib = [], []
    for b, found in enumerate(tree_b.query_ball_tree(tree_a, radius)):
        found = np.array(sorted(found), dtype=int)
        if len(found) == 0:
            continue
        dist = np.linalg.norm(centres_a[found] - centres_b[b], axis=1)
        keep = found[dist < ratio * np.maximum(sizes_a[found], sizes_b[b])]
        ia.append(keep)
        ib.append(np.full(len(keep), b))
    if not ia:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    return np.concatenate(ia), np.concatenate(ib)


def _element_points(table: ElementTable, order: int):
    """Tensor Gauss points of every element with weighted curls and shapes: features (E, q^2, 4, 4)."""
    pts, w = square_rule(order)
    y = (table.origins[:, None, :] + pts[None, :, :1] * table.e1[:, None, :]
         + pts[None, :, 1:] * table.e2[:, None, :])
    wa = w[None, :] * table.areas[:, None]                                    # (E, q^2)
    curls = np.stack([c.evaluate(pts) for c in table.curls])                  # (E, q^2, 4, 3)
    shapes = np.broadcast_to(shape_values(pts)[None], curls.shape[:3])        # (E, q^2, 4)
    features = np.concatenate([curls, shapes[..., None]], axis=3) * wa[..., None, None]
    return y, features


def _kernel_batch(k, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """G[e, p, j] = G_k(x_p, y[e, j]) for x (n, 3), y (E, q, 3)."""
    xx = np.sum(x * x, axis=1)
    yy = np.sum(y * y, axis=2)
    r2 = xx[None, :, None] + yy[:, None, :] - 2.0 * np.einsum("pd,ejd->epj", x, y)
    return full_kernel(k, np.sqrt(np.maximum(r2, 0.0)))


def _blocks(n_items: int, per_item: int, n_cols: int) -> List[np.ndarray]:
    size = max(1, BATCH_ENTRIES // max(1, per_item * n_cols))
    return [np.arange(s, min(s + size, n_items)) for s in range(0, n_items, size)]


def weighted_sum(curl: np.ndarray, scalar: np.ndarray, curl_weight: float, scalar_weight: float) -> np.ndarray:
    if scalar_weight == 0.0:
        return curl_weight * curl
    if curl_weight == 0.0:
        return scalar_weight * scalar
    return curl_weight * curl + scalar_weight * scalar


def run_tasks(tasks, work, threads: int):
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(work, tasks))


def for_each_result(tasks, work, threads: int, consume: Callable):
    """Runs work on the tasks, `threads` at a time, and hands every result to consume in task order."""
    threads = max(1, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for start in range(0, len(tasks), threads):
            for result in pool.map(work, tasks[start:start + threads]):
                consume(result)


def far_single_layer(k, table: ElementTable, near_ia: np.ndarray, near_ib: np.ndarray,
                     order: int, targets: Sequence[Tuple[np.ndarray, float, float]], threads: int = 1):
    """
    Adds the far-pair part of the curl-curl matrix <V curl phi_j, curl phi_i>
    and of the scalar matrix <V phi_j, phi_i> into every target.

    @param near_ia, near_ib: (trial, test) element pairs to leave out.
    @param targets: (out N x N, curl weight, scalar weight) triples, added in place.
    """
    E = len(table)
    y, features = _element_points(table, order)
    q2 = y.shape[1]
    flat = features.reshape(E, q2, 16)
    near = sparse.csr_matrix((np.ones(len(near_ia), dtype=bool), (near_ib, near_ia)), shape=(E, E))
    trial_select = table.selection(np.arange(E))

    def work(block):
        x = y[block].reshape(-1, 3)
        g = _kernel_batch(k, x, y)                                            # (E, nb q2, q2)
        mask = near[block].toarray().T                                        # (E, nb)
        g = g.reshape(E, len(block), q2, q2)
        g[mask] = 0.0
        h = np.matmul(g.reshape(E, len(block) * q2, q2), flat)               # (E, nb q2, 16)
        h = h.reshape(E, len(block), q2, 4, 4)
        ft = features[block]                                                  # (nb, q2, 4, 4)
        curl = np.einsum("ebiac,bidc->bdea", h[..., :3], ft[..., :3], optimize=True)
        scalar = np.einsum("ebia,bid->bdea", h[..., 3], ft[..., 3], optimize=True)
        rows = table.selection(block)
        owned = np.unique(table.dofs[block][table.dofs[block] >= 0])
        pick = rows.T.tocsr()[owned]                                          # (|owned|, 4 nb)
        picked = []
        for local in (curl, scalar):
            local = local.reshape(4 * len(block), 4 * E)
            spread = (trial_select.T @ local.T).T                             # (4 nb, N)
            picked.append(np.asarray(pick @ spread))
        return owned, picked[0], picked[1]

    def consume(result):
        owned, curl_rows, scalar_rows = result
        for out, curl_weight, scalar_weight in targets:
            out[owned] += weighted_sum(curl_rows, scalar_rows, curl_weight, scalar_weight)

    blocks = _blocks(E, q2, E * q2)
    logger.debug("far single layer: %d elements, %d blocks, order %d", E, len(blocks), order)
    for_each_result(blocks, work, threads, consume)


def piece_points(pieces, order: int):
    """Gauss points on every skeleton piece: (P, q, 3) points, (P, q, 2) weighted hats."""
    rule = gauss_rule(order)
    starts = np.array([p.start for p in pieces])
    ends = np.array([p.end for p in pieces])
    lengths = np.array([p.length for p in pieces])
    x = starts[:, None, :] + rule.points[None, :, None] * (ends - starts)[:, None, :]
    hats = np.stack([1.0 - rule.points, rule.points], axis=1)                # (q, 2)
    weighted = rule.weights[None, :, None] * lengths[:, None, None] * hats[None]
    return x, weighted


def far_skeleton(k, table: ElementTable, pieces, near_ie: np.ndarray, near_ip: np.ndarray,
                 order: int, threads: int = 1) -> np.ndarray:
    """
    Far part of K[(p, l), j] = int_piece_p hat_l t . (V_k curl phi_j) ds.

    @param near_ie, near_ip: (element, piece) pairs to leave out.
    @returns (2P x N) dense complex matrix.
    """
    E = len(table)
    P = len(pieces)
    y, features = _element_points(table, order)
    q2 = y.shape[1]
    curls = features[..., :3].reshape(E, q2, 12)
    x, hats = piece_points(pieces, order)
    qo = x.shape[1]
    tangents = np.array([p.tangent for p in pieces])
    near = sparse.csr_matrix((np.ones(len(near_ie), dtype=bool), (near_ip, near_ie)), shape=(P, E))
    trial_select = table.selection(np.arange(E))

    def work(block):
        g = _kernel_batch(k, x[block].reshape(-1, 3), y)                      # (E, nb qo, q2)
        mask = near[block].toarray().T
        g = g.reshape(E, len(block), qo, q2)
        g[mask] = 0.0
        h = np.matmul(g.reshape(E, len(block) * qo, q2), curls)
        h = h.reshape(E, len(block), qo, 4, 3)
        local = np.einsum("ebiad,bd,bil->blea", h, tangents[block], hats[block], optimize=True)
        local = local.reshape(2 * len(block), 4 * E)
        return block, np.asarray((trial_select.T @ local.T).T)

    out = np.zeros((2 * P, table.num_dofs), dtype=complex)

    def consume(result):
        block, rows = result
        out[(2 * block[:, None] + np.arange(2)[None, :]).ravel()] += rows

    for_each_result(_blocks(P, qo, E * q2), work, threads, consume)
    return out
