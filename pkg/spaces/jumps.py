# -------------------------------------------------
# Jumps of discrete functions across the skeleton gamma.
#
# On every skeleton piece the jump [v] = v_left - v_right of a nodal function
# is linear, so it is stored by its values at the two piece endpoints. On the
# screen boundary only the left (owning) side exists and [v] is the trace.
# -------------------------------------------------

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from spaces.shapes import shape_values


@dataclass(frozen=True, eq=False)
class JumpTrace:
    """
    Piecewise linear function on gamma.

    @param values: (P, 2) values at (start, end) of every skeleton piece.
    @param lengths: (P,) piece lengths.
    """
    values: np.ndarray
    lengths: np.ndarray

    def at(self, piece: int, tau) -> np.ndarray:
        """Value at parameter tau in [0, 1] along piece `piece`."""
        a, b = self.values[piece]
        return (1.0 - np.asarray(tau)) * a + np.asarray(tau) * b

    def l2Norm(self) -> float:
        """Exact L2(gamma) norm of the piecewise linear jump."""
        a, b = self.values[:, 0], self.values[:, 1]
        integrand = np.abs(a) ** 2 + np.abs(b) ** 2 + np.real(a * np.conj(b))
        return float(np.sqrt(max(np.sum(self.lengths * integrand) / 3.0, 0.0)))


def piece_hats(tau: np.ndarray) -> np.ndarray:
    """Linear hat functions (1 - tau, tau) of a skeleton piece, shape (n, 2)."""
    tau = np.asarray(tau, dtype=float)
    return np.stack([1.0 - tau, tau], axis=-1)


def jump_operator(dofs, skeleton) -> sparse.csr_matrix:
    """
    Sparse (2P x N) map from coefficients to jump values at the piece
    endpoints: row 2p + l is the endpoint l (0 = start, 1 = end) of piece p.
    """
    rows, cols, vals = [], [], []
    for p, piece in enumerate(skeleton.pieces):
        for side in piece.sides:
            element_dofs = dofs.elementDofs(side.subdomain)[side.element]
            shapes = shape_values(np.array([side.ref_start, side.ref_end]))
            for l in range(2):
                for a in range(4):
                    if element_dofs[a] < 0 or abs(shapes[l, a]) < 1e-14:
                        continue
                    rows.append(2 * p + l)
                    cols.append(element_dofs[a])
                    vals.append(side.sign * shapes[l, a])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(2 * len(skeleton.pieces), dofs.num_dofs))


def jump_mass(skeleton) -> sparse.csr_matrix:
    """L2(gamma) Gram matrix of the piece hats: blocks length/6 [[2, 1], [1, 2]]."""
    lengths = np.array([p.length for p in skeleton.pieces])
    local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    return sparse.block_diag([L * local for L in lengths], format="csr")


def jump_trace(dofs, skeleton, coefficients: np.ndarray) -> JumpTrace:
    """
    [v] of the discrete function with the given coefficients, as per-piece
    endpoint values.
    """
    coefficients = np.asarray(coefficients)
    values = (jump_operator(dofs, skeleton) @ coefficients).reshape(-1, 2)
    lengths = np.array([p.length for p in skeleton.pieces])
    return JumpTrace(values, lengths)


def jump_l2_norm(dofs, skeleton, coefficients: np.ndarray) -> float:
    return jump_trace(dofs, skeleton, coefficients).l2Norm()
