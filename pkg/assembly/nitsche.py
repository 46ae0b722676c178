# -------------------------------------------------
# Full Galerkin system of the Nitsche scheme
#
#   A_k(u, v) = <V_k curl_T u, curl_T v>_T - k^2 <V_k n u, n v>_Gamma
#             + <T_k(u), [v]>_gamma + <[u], T_-k(v)>_gamma + nu <[u], [v]>_gamma
#
# and of the conforming reference scheme (first two terms only, zero trace
# dofs), with the load vector <f, v>_Gamma.
# -------------------------------------------------

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy import sparse

from assembly.blocks import add_coupling, add_sparse, hypersingular_matrix, jump_gram, skeleton_operator
from assembly.far_field import element_table
from helpers.errors import ConfigurationError
from kernels.helmholtz import WaveNumber
from quadrature.gauss import square_rule
from spaces.jumps import jump_operator
from spaces.shapes import shape_values

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureOrders:
    """
    Gauss orders per adjacency class, plus the low-order rule and the
    separation ratio of the far-field tier (far_ratio = inf disables it).
    """
    disjoint: int = 8
    vertex: int = 10
    edge: int = 10
    coincident: int = 12
    far: int = 3
    far_ratio: float = 2.0

    def __post_init__(self):
        bad = [f"{name} order must be >= 1" for name in ("disjoint", "vertex", "edge", "coincident", "far")
               if getattr(self, name) < 1]
        if not self.far_ratio > 1.0:
            bad.append("far_ratio must be > 1")
        if bad:
            raise ConfigurationError(bad)

    @classmethod
    def fromString(cls, text: str, **kwargs) -> "QuadratureOrders":
        """Parses 'd,v,e,c' as in the command line flag."""
        try:
            d, v, e, c = (int(part) for part in text.split(","))
        except ValueError:
            raise ConfigurationError([f"quadrature orders must be four integers 'd,v,e,c', got '{text}'"])
        return cls(d, v, e, c, **kwargs)

    def label(self) -> str:
        return f"{self.disjoint},{self.vertex},{self.edge},{self.coincident}"


@dataclass(frozen=True)
class NitscheParams:
    """
    Penalty parameter: either a fixed nu, or the policy nu = nu0 * h^(-epsilon)
    evaluated per mesh level.
    """
    nu: Optional[float] = None
    nu0: Optional[float] = None
    epsilon: float = 0.0

    def __post_init__(self):
        bad = []
        if self.nu is None and self.nu0 is None:
            bad.append("nitsche needs nu or nu0")
        if self.nu is not None and not self.nu > 0.0:
            bad.append("nu must be > 0")
        if self.nu0 is not None and not self.nu0 > 0.0:
            bad.append("nu0 must be > 0")
        if not self.epsilon >= 0.0:
            bad.append("epsilon must be >= 0")
        if bad:
            raise ConfigurationError(bad)

    def value(self, h: float) -> float:
        if self.nu is not None:
            return float(self.nu)
        return float(self.nu0) * h ** (-self.epsilon)


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """
    A = M_curl + M_normal + C1 + C2 + nu G as one dense matrix, and b.

    The coupling is kept as the sparse jump operator J and the (2P x N)
    skeleton operator K, with C1 = J^T K, and the Gram matrix G as sparse,
    so the penalty can be changed and the terms taken apart without another
    N x N array.

    @param adjoint_operator: K at -k when C2 was built as C1(-k)^H.
    """
    matrix: np.ndarray
    rhs: np.ndarray
    k: float
    kind: str
    jumps: Optional[sparse.csr_matrix] = None
    skeleton_operator: Optional[np.ndarray] = None
    adjoint_operator: Optional[np.ndarray] = None
    gram: Optional[sparse.csr_matrix] = None
    nu: Optional[float] = None
    h: Optional[float] = None
    level: Optional[int] = None
    meta: Dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.rhs)

    @property
    def coupling_c1(self) -> Optional[np.ndarray]:
        if self.jumps is None:
            return None
        return np.asarray(self.jumps.T @ self.skeleton_operator)

    @property
    def coupling_c2(self) -> Optional[np.ndarray]:
        if self.jumps is None:
            return None
        if self.adjoint_operator is None:
            return self.coupling_c1.T
        return np.asarray(self.jumps.T @ self.adjoint_operator).conj().T

    def penalty(self) -> Optional[sparse.csr_matrix]:
        return None if self.gram is None else self.nu * self.gram

    def coupling(self) -> Optional[np.ndarray]:
        return None if self.jumps is None else self.coupling_c1 + self.coupling_c2

    def applyHypersingular(self, u: np.ndarray) -> np.ndarray:
        """(M_curl + M_normal) u, as A u minus the coupling and penalty products."""
        u = np.asarray(u)
        out = self.matrix @ u
        if self.jumps is None:
            return out
        ju = self.jumps @ u
        out -= self.jumps.T @ (self.skeleton_operator @ u)
        if self.adjoint_operator is None:
            out -= self.skeleton_operator.T @ ju
        else:
            out -= self.adjoint_operator.conj().T @ ju
        out -= self.nu * (self.gram @ u)
        return out

    def terms(self) -> Dict[str, np.ndarray]:
        """Dense hypersingular, coupling and penalty terms; meant for small systems."""
        if self.jumps is None:
            return {"hypersingular": self.matrix}
        coupling = self.coupling()
        penalty = self.penalty().toarray()
        return {"hypersingular": self.matrix - coupling - penalty, "coupling": coupling, "penalty": penalty}

    def withPenalty(self, nu: float) -> "AssembledSystem":
        if self.gram is None:
            raise ConfigurationError(["the conforming system has no penalty term"])
        if not nu > 0.0:
            raise ConfigurationError(["nu must be > 0"])
        matrix = self.matrix.copy()
        add_sparse(matrix, self.gram, float(nu) - self.nu)
        return replace(self, matrix=matrix, nu=float(nu))


def assemble_rhs(f: Union[Callable, float, complex], dofs, order: int = 4) -> np.ndarray:
    """
    b[i] = int_Gamma f conj(phi_i) with tensor Gauss on every element.

    @param f: callable on (n, 3) points returning (n,) values, or a constant.
    """
    pts, w = square_rule(order)
    values = shape_values(pts)                                                # (q, 4)
    b = np.zeros(dofs.num_dofs, dtype=complex)
    for j, mesh in enumerate(dofs.meshes):
        x = (mesh.origins[:, None, :] + pts[None, :, :1] * mesh.e1[:, None, :]
             + pts[None, :, 1:] * mesh.e2[:, None, :])                        # (m, q, 3)
        if callable(f):
            fx = np.asarray(f(x.reshape(-1, 3)), dtype=complex).reshape(x.shape[:2])
        else:
            fx = np.full(x.shape[:2], complex(f))
        local = np.einsum("eq,q,qa,e->ea", fx, w, values, mesh.areas)         # (m, 4)
        edofs = dofs.elementDofs(j)
        keep = edofs >= 0
        np.add.at(b, edofs[keep], local[keep])
    return b


def _k(k) -> float:
    return float(k.value) if isinstance(k, WaveNumber) else float(k)


def assemble_full(k, dofs, skeleton, params: Optional[NitscheParams], orders: Optional[QuadratureOrders] = None,
                  f: Union[Callable, float] = 1.0, threads: int = 1, h: Optional[float] = None,
                  level: Optional[int] = None, explicit_adjoint: bool = False) -> AssembledSystem:
    """
    Assembles A and b. For the conforming kind the coupling and penalty terms
    are left out; the zero-trace dofs carry the boundary condition.

    @param params: penalty policy (ignored for the conforming kind).
    @param h: mesh size feeding the nu = nu0 h^-epsilon policy.
    """
    k = _k(k)
    orders = QuadratureOrders() if orders is None else orders
    conforming = dofs.isConforming()
    if not conforming:
        if params is None:
            raise ConfigurationError(["nitsche assembly needs a penalty parameter"])
        if params.nu is None and h is None:
            raise ConfigurationError(["the nu0 h^-epsilon policy needs the mesh size h"])
    table = element_table(dofs)
    logger.info("assembling %s system: N=%d, k=%g, %d elements", dofs.kind, dofs.num_dofs, k, len(table))

    matrix = hypersingular_matrix(k, dofs, orders, threads, table)
    rhs = assemble_rhs(f, dofs)
    if conforming:
        return AssembledSystem(matrix, rhs, k, dofs.kind, h=h, level=level)

    nu = params.value(h if h is not None else math.nan)
    jumps = jump_operator(dofs, skeleton)
    operator = skeleton_operator(k, dofs, skeleton, orders, threads, table)
    adjoint = skeleton_operator(-k, dofs, skeleton, orders, threads, table) if explicit_adjoint else None
    add_coupling(matrix, jumps, operator, adjoint)
    gram = jump_gram(dofs, skeleton)
    add_sparse(matrix, gram, nu)
    logger.debug("assembled: |A|_max=%.3e, nu=%g", np.abs(matrix).max(), nu)
    return AssembledSystem(matrix, rhs, k, dofs.kind, jumps, operator, adjoint, gram, nu, h, level)
