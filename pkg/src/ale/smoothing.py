"""
Laplace-Beltrami-Glättung der Knotenlagen auf dem Referenznetz

Löst komponentenweise −Δ_Γ g = f mit g = x̄ auf dem Drahtgitter.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, cg, splu

from ..mesh.dofs import HangingConstraints
from ..mesh.surface import quadrature_data
from ..utils.config import config
from ..utils.errors import ConvergenceError, SingularSystemError

logger = logging.getLogger(__name__)

ForcingFn = Callable[[np.ndarray], np.ndarray]


def assemble_laplace_beltrami(positions: np.ndarray, cell_dofs: np.ndarray,
                              order: int = 3) -> sparse.csr_matrix:
    """
    Steifigkeitsmatrix K_ij = ∫ ∇_Γ φ^i · ∇_Γ φ^j dA

    Args:
        positions: Referenzlagen je DOF (n, 3)
        cell_dofs: DOFs je Panel (nc, 4)
        order: Gauß-Ordnung je Richtung
    """
    quad = quadrature_data(positions, cell_dofs, order)
    local = np.einsum('cqid,cqjd,cq->cij', quad.grads, quad.grads, quad.dA)
    rows = np.repeat(cell_dofs, 4, axis=1).ravel()
    cols = np.tile(cell_dofs, (1, 4)).ravel()
    n = len(positions)
    return sparse.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def assemble_forcing(positions: np.ndarray, cell_dofs: np.ndarray,
                     forcing: Optional[ForcingFn], order: int = 3) -> np.ndarray:
    """Lastvektor ∫ f φ^i dA (n, 3); forcing bildet Quadraturpunkte (nc, nq, 3) auf f ab"""
    n = len(positions)
    if forcing is None:
        return np.zeros((n, 3))
    quad = quadrature_data(positions, cell_dofs, order)
    f = forcing(quad.geometry.point)
    local = np.einsum('ql,cqd,cq->cld', quad.shape, f, quad.dA)
    load = np.zeros((n, 3))
    np.add.at(load, cell_dofs.ravel(), local.reshape(-1, 3))
    return load


@dataclass
class SmoothingSystem:
    """
    Glättungsproblem mit Dirichlet-Daten auf dem Drahtgitter

    K wird einmal je Referenznetz aufgebaut; hängende DOFs werden über
    CᵀKC kondensiert.
    """

    K: sparse.csr_matrix
    dirichlet: np.ndarray
    load: np.ndarray
    constraints: HangingConstraints = field(default_factory=HangingConstraints)
    method: str = 'cg'
    rtol: float = 1e-12

    def __post_init__(self):
        n = self.K.shape[0]
        self.dirichlet = np.asarray(self.dirichlet, dtype=bool).copy()
        constrained = self.constraints.constrained
        self.dirichlet[constrained] = False
        self._C = self.constraints.matrix(n)
        self._Kc = (self._C.T @ self.K @ self._C).tocsr()
        self._load_c = self._C.T @ self.load

        active = np.ones(n, dtype=bool)
        active[constrained] = False
        self._free = np.flatnonzero(active & ~self.dirichlet)
        self._bound = np.flatnonzero(self.dirichlet)
        self._check_components(active)

        self._A = self._Kc[self._free][:, self._free].tocsc()
        self._coupling = self._Kc[self._free][:, self._bound].tocsr()
        self._lu = None
        diag = self._A.diagonal()
        self._jacobi = LinearOperator(self._A.shape, matvec=lambda x: x / diag, dtype=float)

    @property
    def n(self) -> int:
        return self.K.shape[0]

    def _check_components(self, active: np.ndarray):
        idx = np.flatnonzero(active)
        graph = self._Kc[idx][:, idx]
        n_comp, labels = connected_components(graph, directed=False)
        has_bc = np.zeros(n_comp, dtype=bool)
        has_bc[labels[self.dirichlet[idx]]] = True
        if not np.all(has_bc):
            missing = int(np.sum(~has_bc))
            raise SingularSystemError(f"Glättung: {missing} Netzkomponente(n) ohne Dirichlet-Rand")

    def _solve_free(self, rhs: np.ndarray, label: str) -> np.ndarray:
        if self.method == 'direct':
            if self._lu is None:
                self._lu = splu(self._A)
            return self._lu.solve(rhs)

        if not np.any(rhs):
            return np.zeros_like(rhs)
        x, info = cg(self._A, rhs, rtol=self.rtol, atol=0.0, M=self._jacobi,
                     maxiter=10 * max(len(rhs), 10))
        if info != 0:
            raise ConvergenceError(f"CG der Glättung ({label}) nicht konvergiert", iterations=info)
        return x

    def solve(self, boundary: np.ndarray) -> np.ndarray:
        """
        Glättet die Lagen

        Args:
            boundary: (n, 3), verwendet werden nur Dirichlet-DOFs

        Returns:
            g (n, 3) mit interpolierten hängenden DOFs
        """
        boundary = np.asarray(boundary, dtype=float)
        g_hat = np.zeros((self.n, 3))
        g_hat[self._bound] = boundary[self._bound]
        if len(self._free):
            for k, label in enumerate('xyz'):
                rhs = self._load_c[self._free, k] - self._coupling @ boundary[self._bound, k]
                g_hat[self._free, k] = self._solve_free(rhs, label)
        return self._C @ g_hat


def build_smoothing_system(positions: np.ndarray, cell_dofs: np.ndarray,
                           dirichlet: np.ndarray,
                           forcing: Optional[ForcingFn] = None,
                           constraints: Optional[HangingConstraints] = None,
                           method: Optional[str] = None) -> SmoothingSystem:
    """
    Baut das Glättungsproblem aus der Referenzkonfiguration

    Raises:
        SingularSystemError: Netzkomponente ohne Dirichlet-Daten
    """
    order = int(config.get('solver.smoothing_order', 3))
    K = assemble_laplace_beltrami(positions, cell_dofs, order)
    load = assemble_forcing(positions, cell_dofs, forcing, order)
    system = SmoothingSystem(K, dirichlet, load,
                             constraints if constraints is not None else HangingConstraints(),
                             method=method or config.get('solver.smoothing_method', 'cg'),
                             rtol=float(config.get('solver.smoothing_rtol', 1e-12)))
    logger.debug(f"Glättung: {system.n} DOFs, {int(np.sum(system.dirichlet))} Dirichlet")
    return system


def solve_smoothing(system: SmoothingSystem, boundary: np.ndarray) -> np.ndarray:
    return system.solve(boundary)
