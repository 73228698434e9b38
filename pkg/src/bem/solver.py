"""
Lösung des gemischten Randwertproblems und Potentialauswertung im Inneren
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, gmres

from .kernels import kernels_unchecked
from ..mesh.dofs import DofHandler
from ..mesh.shapes import gauss_rule, shape_table
from ..mesh.surface import CurrentConfiguration, Region, cell_diameters, map_points
from ..utils.config import config
from ..utils.errors import ConvergenceError, SingularSystemError

logger = logging.getLogger(__name__)


@dataclass
class MixedBcAssignment:
    """
    Randbedingungstyp je DOF

    dirichlet[i] = True: φ̄_i gegeben, φn_i unbekannt (freie Oberfläche).
    Sonst φ̄n_i gegeben, φ_i unbekannt.
    """

    dirichlet: np.ndarray
    phi_bar: np.ndarray
    phin_bar: np.ndarray

    def __post_init__(self):
        self.dirichlet = np.asarray(self.dirichlet, dtype=bool)
        n = len(self.dirichlet)
        self.phi_bar = np.broadcast_to(np.asarray(self.phi_bar, dtype=float), (n,)).copy()
        self.phin_bar = np.broadcast_to(np.asarray(self.phin_bar, dtype=float), (n,)).copy()

    @classmethod
    def from_regions(cls, dofs: DofHandler, phi_bar, phin_bar) -> 'MixedBcAssignment':
        """Dirichlet auf Γʷ, Neumann auf Rumpf, Boden und Fernfeld"""
        return cls(dofs.dof_region == int(Region.FREE_SURFACE), phi_bar, phin_bar)

    @property
    def neumann(self) -> np.ndarray:
        return ~self.dirichlet


@dataclass(frozen=True)
class LinearSolverParams:
    """GMRES-Einstellungen"""

    restart: int = 100
    rtol: float = 1e-10
    maxiter: int = 2000
    lu_fallback: bool = True

    @classmethod
    def from_config(cls) -> 'LinearSolverParams':
        return cls(
            restart=int(config.get('solver.gmres_restart', 100)),
            rtol=float(config.get('solver.gmres_rtol', 1e-10)),
            maxiter=int(config.get('solver.gmres_maxiter', 2000)),
            lu_fallback=bool(config.get('solver.lu_fallback', True)),
        )


def jacobi_preconditioner(A: np.ndarray) -> LinearOperator:
    """Diagonal-Vorkonditionierer, Nulldiagonalen werden durch 1 ersetzt"""
    d = np.diag(A).copy()
    d[np.abs(d) < 1e-300] = 1.0
    inv = 1.0 / d
    return LinearOperator(A.shape, matvec=lambda x: inv * np.ravel(x), dtype=float)


def solve_dense(A: np.ndarray, b: np.ndarray, params: LinearSolverParams,
                label: str = 'BEM') -> np.ndarray:
    """
    Löst A x = b mit Jacobi-vorkonditioniertem GMRES, optional LU-Fallback

    Raises:
        ConvergenceError: GMRES nicht konvergiert und kein Fallback
        SingularSystemError: LU-Fallback findet singuläre Matrix
    """
    n = len(b)
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros(n)

    restart = max(1, min(params.restart, n))
    cycles = max(1, int(np.ceil(params.maxiter / restart)))
    x, info = gmres(A, b, rtol=params.rtol, atol=0.0, restart=restart, maxiter=cycles,
                    M=jacobi_preconditioner(A))

    residual = np.linalg.norm(A @ x - b) / b_norm
    if info == 0 and np.isfinite(residual):
        logger.debug(f"{label}: GMRES konvergiert, rel. Residuum {residual:.2e}")
        return x

    if not params.lu_fallback:
        raise ConvergenceError(f"{label}: GMRES nicht konvergiert (info={info}, "
                               f"rel. Residuum {residual:.2e})", residual=residual)

    logger.warning(f"{label}: GMRES nicht konvergiert (info={info}), verwende LU")
    try:
        lu = scipy.linalg.lu_factor(A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise SingularSystemError(f"{label}: LU-Zerlegung fehlgeschlagen: {e}") from e
    if np.any(np.abs(np.diag(lu[0])) <= 1e-14 * np.max(np.abs(np.diag(lu[0])))):
        raise SingularSystemError(f"{label}: System ist singulär")
    return scipy.linalg.lu_solve(lu, b)


def solve_mixed_bvp(system, bc: MixedBcAssignment,
                    params: Optional[LinearSolverParams] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Löst (α + N) φ = D φn mit gemischten Randbedingungen

    Unbekannt sind φn auf Dirichlet-DOFs und φ auf Neumann-DOFs.

    Args:
        system: BemSystem
        bc: Randbedingungen je DOF
        params: GMRES-Einstellungen

    Returns:
        (φ, φn) auf allen DOFs

    Raises:
        SingularSystemError: reines Neumann-Problem (Konstante im Kern)
    """
    params = params or LinearSolverParams.from_config()
    dirichlet = bc.dirichlet
    if len(dirichlet) != system.n:
        raise ValueError(f"Randbedingungen für {len(dirichlet)} DOFs, System hat {system.n}")
    if not np.any(dirichlet):
        raise SingularSystemError("Reines Neumann-Problem: φ nur bis auf eine Konstante bestimmt")

    lhs = system.lhs_phi()
    neumann = ~dirichlet

    A = np.empty_like(lhs)
    A[:, neumann] = lhs[:, neumann]
    A[:, dirichlet] = -system.D[:, dirichlet]
    rhs = (system.D[:, neumann] @ bc.phin_bar[neumann]
           - lhs[:, dirichlet] @ bc.phi_bar[dirichlet])

    x = solve_dense(A, rhs, params)

    phi = np.where(dirichlet, bc.phi_bar, x)
    phin = np.where(dirichlet, x, bc.phin_bar)
    return phi, phin


def evaluate_interior_potential(point, phi: np.ndarray, phin: np.ndarray,
                                configuration: CurrentConfiguration,
                                order: int = 8) -> float:
    """
    Darstellungsformel φ(x₀) = ∫ (φn G − ∂G/∂n φ) dΓ

    Punkte näher als eine Paneldiagonale am Rand werden mit Warnung
    ausgewertet (Genauigkeit sinkt).
    """
    point = np.asarray(point, dtype=float)
    vertices = configuration.vertices()
    pts, w = gauss_rule(order)
    geo = map_points(vertices, pts)
    N = shape_table(pts)

    distance = float(np.min(np.linalg.norm(geo.point - point, axis=-1)))
    diam = float(np.max(cell_diameters(vertices)))
    if distance < diam:
        logger.warning(f"Punkt {point.tolist()} liegt {distance:.3e} m vom Rand entfernt "
                       f"(Paneldiagonale {diam:.3e} m)")

    r = geo.point - point
    G, dG = kernels_unchecked(r, geo.normal)
    cells = configuration.cells
    phi_q = np.einsum('ql,cl->cq', N, phi[cells])
    phin_q = np.einsum('ql,cl->cq', N, phin[cells])

    integrand = (phin_q * G - dG * phi_q) * geo.jacobian
    return float(np.sum(integrand @ w))
