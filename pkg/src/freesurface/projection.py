"""
SUPG-gewichtete L2-Projektion auf Γʷ und Strand-Energiebilanz
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .conditions import BeachParams, beach_mu
from ..mesh.surface import QuadratureData
from ..utils.errors import SingularSystemError

logger = logging.getLogger(__name__)


@dataclass
class SupgProjection:
    """M^ij = ∫ φ^j (φ^i + d·∇_s φ^i) dΓ mit den Lasten b_φ, b_η"""

    M: sparse.csr_matrix
    b_phi: np.ndarray
    b_eta: np.ndarray

    def solve(self, rhs: np.ndarray, dofs: np.ndarray) -> np.ndarray:
        """Löst M x = rhs auf den angegebenen DOFs"""
        sub = self.M[dofs][:, dofs].tocsc()
        try:
            lu = splu(sub)
        except RuntimeError as e:
            raise SingularSystemError(f"SUPG-Massenmatrix singulär: {e}") from e
        return lu.solve(rhs[dofs])


def assemble_supg_projection(quad: QuadratureData, d: np.ndarray,
                             V_phi: np.ndarray, V_eta: np.ndarray,
                             n_dofs: int) -> SupgProjection:
    """
    Assembliert Massenmatrix und Lasten der gewichteten Projektion

    Args:
        quad: Quadraturdaten der Γʷ-Zellen (cells indiziert DOFs)
        d: SUPG-Richtung je Punkt (nc, nq, 3); d = 0 ergibt Galerkin
        V_phi, V_eta: rechte Seiten je Punkt (nc, nq)
        n_dofs: Gesamtzahl der DOFs (Matrixgröße)
    """
    test = quad.shape[None] + np.einsum('cqd,cqld->cql', d, quad.grads)
    dA = quad.dA

    local = np.einsum('cqi,cqj,cq->cij', test, np.broadcast_to(quad.shape[None], test.shape), dA)
    cells = quad.cells
    rows = np.repeat(cells, 4, axis=1).ravel()
    cols = np.tile(cells, (1, 4)).ravel()
    M = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n_dofs, n_dofs)).tocsr()

    b_phi = np.bincount(cells.ravel(), weights=np.einsum('cq,cqi,cq->ci', V_phi, test, dA).ravel(),
                        minlength=n_dofs)
    b_eta = np.bincount(cells.ravel(), weights=np.einsum('cq,cqi,cq->ci', V_eta, test, dA).ravel(),
                        minlength=n_dofs)

    return SupgProjection(M, b_phi, b_eta)


def energy_absorption_rate(quad: QuadratureData, phin: np.ndarray,
                           beach: BeachParams) -> float:
    """∫_Γʷ μ φn² dΓ ≥ 0 (durch ρ geteilte Leistung des Strandes)"""
    mu = beach_mu(quad.geometry.point[..., 0], beach)
    phin_q = quad.interpolate(phin)
    return quad.integrate(mu * phin_q ** 2)
