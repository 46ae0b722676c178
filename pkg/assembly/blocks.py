# -------------------------------------------------
# The four terms of the Nitsche form, convention A[i][j] = A_k(phi_j, phi_i):
#
#   curl-curl   <V_k curl_T phi_j, curl_T phi_i>_T
#   normal      -k^2 <V_k n phi_j, n phi_i>_Gamma
#   coupling    C1[i][j] = <T_k phi_j, [phi_i]>_gamma,  C2[i][j] = <[phi_j], T_-k phi_i>_gamma
#   penalty     nu <[phi_j], [phi_i]>_gamma
#
# The system adds every term in place into one dense N x N array; the
# assemble_*_block functions give each term on its own for inspection.
# Near pairs are integrated one by one (values cached by relative geometry,
# the kernel being translation invariant), far pairs in batches.
# -------------------------------------------------

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from assembly.far_field import (ElementTable, element_table, far_single_layer, far_skeleton, near_pairs,
                                run_tasks, weighted_sum)
from kernels.helmholtz import WaveNumber
from quadrature.panels import pair_nodes, panel_pair_block
from quadrature.segment import segment_panel_block
from spaces.jumps import jump_mass, jump_operator, piece_hats
from spaces.shapes import shape_values

logger = logging.getLogger(__name__)

# columns of the coupling formed per step
COUPLING_CHUNK = 256

# relative tolerance for recognising congruent (translated) pairs
KEY_TOL = 1e-10


def _k(k) -> float:
    return float(k.value) if isinstance(k, WaveNumber) else float(k)


def _scalar_shapes(ref):
    return shape_values(ref)[..., None]


def _geometry_keys(columns, scale: float) -> np.ndarray:
    return np.round(np.concatenate(columns, axis=1) / (KEY_TOL * scale)).astype(np.int64)


def _unique_work(keys: np.ndarray):
    """@returns (index of one representative per distinct key, representative index of every row)."""
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    return first, np.asarray(inverse).ravel()


def _add_blocks(out: np.ndarray, blocks: np.ndarray, row_dofs: np.ndarray, col_dofs: np.ndarray):
    """out[row, col] += block entries in pair order, skipping -1 dofs."""
    rows = np.broadcast_to(row_dofs[:, :, None], blocks.shape)
    cols = np.broadcast_to(col_dofs[:, None, :], blocks.shape)
    keep = (rows >= 0) & (cols >= 0)
    np.add.at(out, (rows[keep], cols[keep]), blocks[keep])


def add_sparse(out: np.ndarray, matrix: sparse.spmatrix, scale: float = 1.0):
    """out += scale * matrix for a sparse matrix, in place."""
    coo = sparse.coo_matrix(matrix)
    np.add.at(out, (coo.row, coo.col), scale * coo.data)


def near_single_layer(k, table: ElementTable, ia: np.ndarray, ib: np.ndarray, orders,
                      targets: Sequence[Tuple[np.ndarray, float, float]], threads: int = 1):
    """
    Adds the curl-curl and scalar single layer integrals of the listed
    (trial ia, test ib) element pairs, with the singular panel rules, into
    every (out, curl weight, scalar weight) target.
    """
    if len(ia) == 0:
        return
    keys = _geometry_keys([table.e1[ia], table.e2[ia], table.e1[ib], table.e2[ib],
                           table.origins[ib] - table.origins[ia]], float(table.diameters.max()))
    first, inverse = _unique_work(keys)
    logger.debug("near pairs: %d, distinct geometries: %d", len(ia), len(first))

    def work(index):
        a, b = ia[index], ib[index]
        trial, test = table.panels[a], table.panels[b]
        nodes = pair_nodes(trial, test, orders)
        curl = panel_pair_block(k, trial, test, table.curls[a], table.curls[b], nodes=nodes)
        scalar = panel_pair_block(k, trial, test, _scalar_shapes, _scalar_shapes, nodes=nodes)
        return curl, scalar

    results = run_tasks(first, work, threads)
    curl = np.array([r[0] for r in results])
    scalar = np.array([r[1] for r in results])
    for out, curl_weight, scalar_weight in targets:
        contribution = weighted_sum(curl, scalar, curl_weight, scalar_weight)
        _add_blocks(out, contribution[inverse], table.dofs[ib], table.dofs[ia])


def _add_single_layer(k, table: ElementTable, orders, targets, threads: int = 1):
    ia, ib = near_pairs(table.centres, table.diameters, table.centres, table.diameters, orders.far_ratio)
    near_single_layer(k, table, ia, ib, orders, targets, threads)
    if len(ia) < len(table) ** 2:
        far_single_layer(k, table, ia, ib, orders.far, targets, threads)


def single_layer_blocks(k, dofs, orders, threads: int = 1,
                        table: Optional[ElementTable] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    @returns (curl-curl matrix, scalar single layer matrix <V_k phi_j, phi_i>).
    """
    table = element_table(dofs) if table is None else table
    curl = np.zeros((table.num_dofs, table.num_dofs), dtype=complex)
    scalar = np.zeros_like(curl)
    _add_single_layer(k, table, orders, [(curl, 1.0, 0.0), (scalar, 0.0, 1.0)], threads)
    return curl, scalar


def hypersingular_matrix(k, dofs, orders, threads: int = 1, table: Optional[ElementTable] = None) -> np.ndarray:
    """
    Curl-curl plus normal block, accumulated into one N x N array:
    <V_k curl phi_j, curl phi_i> - k^2 <V_k phi_j, phi_i>.
    """
    table = element_table(dofs) if table is None else table
    out = np.zeros((table.num_dofs, table.num_dofs), dtype=complex)
    _add_single_layer(k, table, orders, [(out, 1.0, -_k(k) ** 2)], threads)
    return out


def assemble_curl_curl_block(k, dofs, orders, threads: int = 1) -> np.ndarray:
    """M[i][j] = <V_k curl_T phi_j, curl_T phi_i>_T over all element pairs of all subdomains."""
    table = element_table(dofs)
    out = np.zeros((table.num_dofs, table.num_dofs), dtype=complex)
    _add_single_layer(k, table, orders, [(out, 1.0, 0.0)], threads)
    return out


def assemble_normal_block(k, dofs, orders, threads: int = 1) -> np.ndarray:
    """
    -k^2 <V_k n phi_j, n phi_i>_Gamma. All subdomains share one normal, so
    n(x).n(y) = 1 and this is -k^2 times the scalar single layer matrix.
    """
    if _k(k) == 0.0:
        return np.zeros((dofs.num_dofs, dofs.num_dofs), dtype=complex)
    table = element_table(dofs)
    out = np.zeros((table.num_dofs, table.num_dofs), dtype=complex)
    _add_single_layer(k, table, orders, [(out, 0.0, -_k(k) ** 2)], threads)
    return out


def skeleton_operator(k, dofs, skeleton, orders, threads: int = 1,
                      table: Optional[ElementTable] = None) -> np.ndarray:
    """
    K[(p, l), j] = int_piece_p hat_l(x) t . (V_k curl_T phi_j)(x) ds_x, (2P x N).
    """
    table = element_table(dofs) if table is None else table
    pieces = skeleton.pieces
    starts = np.array([p.start for p in pieces])
    ends = np.array([p.end for p in pieces])
    lengths = np.array([p.length for p in pieces])
    ie, ip = near_pairs(table.centres, table.diameters, 0.5 * (starts + ends), lengths, orders.far_ratio)

    if len(ie) < len(table) * len(pieces):
        result = far_skeleton(k, table, pieces, ie, ip, orders.far, threads)
    else:
        result = np.zeros((2 * len(pieces), table.num_dofs), dtype=complex)
    if len(ie):
        origins = table.origins[ie]
        keys = _geometry_keys([starts[ip] - origins, ends[ip] - origins, table.e1[ie], table.e2[ie]],
                              float(table.diameters.max()))
        first, inverse = _unique_work(keys)
        logger.debug("near piece/element pairs: %d, distinct geometries: %d", len(ie), len(first))

        def work(index):
            e, p = ie[index], ip[index]
            piece = pieces[p]
            return segment_panel_block(k, piece.start, piece.end, piece.tangent, table.panels[e],
                                       piece_hats, table.curls[e], order=orders.edge)

        blocks = np.array(run_tasks(first, work, threads))[inverse]               # (pairs, 2, 4)
        rows = (2 * ip[:, None] + np.arange(2)[None, :])
        _add_blocks(result, blocks, rows, table.dofs[ie])
    return result


def add_coupling(out: np.ndarray, jumps: sparse.spmatrix, operator: np.ndarray,
                 adjoint_operator: Optional[np.ndarray] = None):
    """
    out += C1 + C2 with C1 = J^T K, a column chunk at a time. C2 is C1^T, or
    (J^T K(-k))^H when the skeleton operator at -k is given.
    """
    jumps_t = sparse.csr_matrix(jumps.T)
    n = out.shape[1]
    for start in range(0, n, COUPLING_CHUNK):
        cols = slice(start, min(start + COUPLING_CHUNK, n))
        c1 = np.asarray(jumps_t @ operator[:, cols])
        out[:, cols] += c1
        if adjoint_operator is None:
            out[cols, :] += c1.T
        else:
            out[cols, :] += np.asarray(jumps_t @ adjoint_operator[:, cols]).conj().T


def assemble_coupling_blocks(k, dofs, skeleton, orders, threads: int = 1,
                             explicit_adjoint: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    @returns (C1, C2) as dense matrices. For real basis functions
        C2(k) = C1(k)^T; with explicit_adjoint=True C2 is instead built as
        C1(-k)^H from the skeleton operator at -k.
    """
    table = element_table(dofs)
    jumps = jump_operator(dofs, skeleton)
    c1 = np.asarray(jumps.T @ skeleton_operator(k, dofs, skeleton, orders, threads, table))
    if explicit_adjoint:
        c1_adjoint = np.asarray(jumps.T @ skeleton_operator(-_k(k), dofs, skeleton, orders, threads, table))
        c2 = c1_adjoint.conj().T.copy()
    else:
        c2 = c1.T.copy()
    return c1, c2


def jump_gram(dofs, skeleton) -> sparse.csr_matrix:
    """<[phi_j], [phi_i]>_gamma as a sparse matrix, exact for piecewise linear jumps."""
    jumps = jump_operator(dofs, skeleton)
    return sparse.csr_matrix(jumps.T @ jump_mass(skeleton) @ jumps)


def assemble_penalty_block(dofs, skeleton, nu: float) -> np.ndarray:
    return nu * jump_gram(dofs, skeleton).toarray()
