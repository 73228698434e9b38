"""
Druck aus der instationären Bernoulli-Gleichung und Rumpfkräfte
"""

import numpy as np

from .conditions import GRAVITY, FrameKinematics
from ..mesh.surface import QuadratureData


def pressure_bernoulli(dphi_dt, grad_phi, w, x, frame: FrameKinematics,
                       rho: float = 1000.0, p_atm: float = 0.0, g: float = GRAVITY):
    """
    p = p_a − ρ(∂φ/∂t + V∞·∇φ + ½|∇φ|² + g z − a∞·x)

    Args:
        dphi_dt: ALE-Ableitung δφ/δt; ∂φ/∂t = δφ/δt − w·∇φ
        grad_phi: voller Gradient ∇φ
        w: Knoten-/Punktgeschwindigkeit
        x: Punkte (..., 3)
    """
    grad_phi = np.asarray(grad_phi, dtype=float)
    x = np.asarray(x, dtype=float)
    dphi_partial = np.asarray(dphi_dt) - np.sum(np.asarray(w) * grad_phi, axis=-1)
    dynamic = (dphi_partial + grad_phi @ frame.v_inf + 0.5 * np.sum(grad_phi ** 2, axis=-1)
               + g * x[..., 2] - x @ frame.a_inf)
    return p_atm - rho * dynamic


def integrate_hull_force(quad: QuadratureData, pressure, p_atm: float = 0.0) -> np.ndarray:
    """
    F = ∫_Γʰ (p − p_a) n dΓ

    Args:
        quad: Quadraturdaten der Rumpfzellen
        pressure: Druck je Punkt (nc, nq) oder Funktion der Punkte
        p_atm: Atmosphärendruck
    """
    geo = quad.geometry
    p = pressure(geo.point) if callable(pressure) else np.asarray(pressure)
    return np.einsum('cq,cqd,cq->d', p - p_atm, geo.normal, quad.dA)


def drag_coefficient(force_x: float, speed: float, wetted_area: float,
                     rho: float = 1000.0) -> float:
    """C_w = F_x / (½ ρ V∞² S); 0 bei ruhendem Schiff"""
    if speed == 0.0 or wetted_area <= 0.0:
        return 0.0
    return float(force_x / (0.5 * rho * speed ** 2 * wetted_area))
