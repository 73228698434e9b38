"""
Newton-Krylov-Löser mit matrixfreier Jacobi-Wirkung
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from ..utils.config import config
from ..utils.errors import ConvergenceError

logger = logging.getLogger(__name__)

Residual = Callable[[np.ndarray], np.ndarray]
JacobianAction = Callable[[np.ndarray, np.ndarray], np.ndarray]

EPS_SQRT = np.sqrt(np.finfo(float).eps)


@dataclass(frozen=True)
class NewtonParams:
    """Toleranz auf gewichtete Normen, Iterationsgrenze und GMRES-Einstellungen"""

    tol: float = 1e-3
    maxiter: int = 8
    gmres_rtol: float = 1e-4
    gmres_restart: int = 100
    gmres_maxiter: int = 20
    divergence_rate: float = 0.9

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"Newton-Toleranz muss positiv sein (ist {self.tol})")
        if self.maxiter < 1:
            raise ValueError("Newton braucht mindestens eine Iteration")

    @classmethod
    def from_config(cls) -> 'NewtonParams':
        return cls(tol=float(config.get('solver.newton_tol', 1e-3)),
                   maxiter=int(config.get('solver.newton_maxiter', 8)),
                   gmres_rtol=float(config.get('solver.newton_gmres_rtol', 1e-4)),
                   gmres_restart=int(config.get('solver.gmres_restart', 100)))


@dataclass
class NewtonResult:
    y: np.ndarray
    iterations: int
    residual_norm: float


def error_weights(y: np.ndarray, rtol: float, atol) -> np.ndarray:
    """w_i = 1/(atol_i + rtol·|y_i|)"""
    return 1.0 / (np.asarray(atol, dtype=float) + rtol * np.abs(y))


def weighted_rms_norm(v: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return 0.0
    if weights is not None:
        v = v * weights
    return float(np.sqrt(np.mean(v ** 2)))


def fd_increment(y: np.ndarray, p: np.ndarray) -> float:
    """σ = √ε (1 + ‖y‖∞)/‖p‖∞"""
    p_norm = np.linalg.norm(p, np.inf)
    if p_norm == 0.0:
        return 0.0
    return EPS_SQRT * (1.0 + np.linalg.norm(y, np.inf)) / p_norm


def finite_difference_jvp(residual: Residual) -> JacobianAction:
    """
    Richtungsableitung J(y)·v durch einseitige Differenzen

    Der Basiswert R(y) wird für das zuletzt verwendete y zwischengespeichert.
    """
    cache = {'y': None, 'r': None}

    def jvp(y: np.ndarray, v: np.ndarray) -> np.ndarray:
        sigma = fd_increment(y, v)
        if sigma == 0.0:
            return np.zeros_like(v)
        if cache['y'] is None or not np.array_equal(cache['y'], y):
            cache['y'] = np.array(y, copy=True)
            cache['r'] = residual(y)
        return (residual(y + sigma * v) - cache['r']) / sigma

    return jvp


def _as_operator(preconditioner, n: int) -> Optional[LinearOperator]:
    if preconditioner is None:
        return None
    if isinstance(preconditioner, LinearOperator):
        return preconditioner
    if hasattr(preconditioner, 'solve'):
        return LinearOperator((n, n), matvec=preconditioner.solve, dtype=float)
    return LinearOperator((n, n), matvec=preconditioner, dtype=float)


def newton_solve(residual: Residual, y0: np.ndarray, params: NewtonParams,
                 weights: Optional[np.ndarray] = None, preconditioner=None,
                 jvp: Optional[JacobianAction] = None) -> NewtonResult:
    """
    Inexaktes Newton-Verfahren mit GMRES

    Das Abbruchkriterium misst die gewichtete Korrektur, nicht das
    Residuum: konvergiert, wenn rate/(1 − rate)·‖Δy‖ ≤ tol, wenn ‖Δy‖ auf
    Rundungsniveau liegt, oder wenn die Korrekturen unterhalb von tol nicht
    mehr kleiner werden. Die Rate ist (‖Δy_k‖/‖Δy_1‖)^(1/(k−1)).

    Args:
        residual: R(y)
        y0: Startwert (Prädiktor)
        params: Toleranzen
        weights: Fehlergewichte, None = ungewichtete RMS-Norm
        preconditioner: LinearOperator, splu-Objekt oder Funktion v → P⁻¹v
        jvp: J(y)·v; Standard sind Differenzen von residual

    Raises:
        ConvergenceError: keine Konvergenz, Divergenz oder GMRES-Zusammenbruch
    """
    y = np.array(y0, dtype=float, copy=True)
    n = len(y)
    M = _as_operator(preconditioner, n)
    scaled = y if weights is None else y * weights
    floor = 100.0 * np.finfo(float).eps * (float(np.max(np.abs(scaled))) if n else 0.0)
    first_update = None
    residual_norm = np.inf

    for iteration in range(1, params.maxiter + 1):
        r = residual(y)
        residual_norm = weighted_rms_norm(r, weights)
        if not np.isfinite(residual_norm):
            raise ConvergenceError("Newton: Residuum nicht endlich", iterations=iteration - 1)
        if not np.any(r):
            return NewtonResult(y, iteration - 1, 0.0)

        if jvp is None:
            def matvec(v, base_y=y, base_r=r):
                sigma = fd_increment(base_y, v)
                if sigma == 0.0:
                    return np.zeros_like(v)
                return (residual(base_y + sigma * v) - base_r) / sigma
        else:
            def matvec(v, base_y=y):
                return jvp(base_y, v)

        A = LinearOperator((n, n), matvec=matvec, dtype=float)
        delta, info = gmres(A, -r, rtol=params.gmres_rtol, atol=0.0,
                            restart=min(params.gmres_restart, n),
                            maxiter=params.gmres_maxiter, M=M)
        if info < 0:
            raise ConvergenceError(f"GMRES-Zusammenbruch (info={info})", iterations=iteration,
                                   residual=residual_norm)
        if info > 0:
            logger.debug(f"GMRES nach {info} Iterationen nicht auf rtol={params.gmres_rtol} "
                         f"konvergiert, verwende Näherung")

        update_norm = weighted_rms_norm(delta, weights)
        if not np.isfinite(update_norm):
            raise ConvergenceError("Newton: Korrektur nicht endlich", iterations=iteration,
                                   residual=residual_norm)
        y = y + delta

        if update_norm <= floor:
            return NewtonResult(y, iteration, residual_norm)
        if first_update is None:
            first_update = update_norm
            continue

        rate = (update_norm / first_update) ** (1.0 / (iteration - 1))
        if rate >= params.divergence_rate:
            if update_norm <= params.tol:
                # Korrekturen stagnieren auf Rundungsniveau
                return NewtonResult(y, iteration, residual_norm)
            raise ConvergenceError(f"Newton divergiert (Rate {rate:.2f})",
                                   iterations=iteration, residual=residual_norm)
        if rate / (1.0 - rate) * update_norm <= params.tol:
            return NewtonResult(y, iteration, residual_norm)

    raise ConvergenceError(f"Newton nicht konvergiert nach {params.maxiter} Iterationen "
                           f"(Residuum {residual_norm:.3e})",
                           iterations=params.maxiter, residual=residual_norm)
