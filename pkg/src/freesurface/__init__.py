"""Freie Oberfläche: Randbedingungen, Strand, SUPG-Projektion, Druck"""

from .conditions import (GRAVITY, FrameKinematics, BeachParams, SupgParams, FreeSurfaceState,
                         beach_mu, total_velocity, eta_gradient, v_phi, v_eta, supg_direction)
from .projection import SupgProjection, assemble_supg_projection, energy_absorption_rate
from .pressure import pressure_bernoulli, integrate_hull_force, drag_coefficient

__all__ = [
    'GRAVITY', 'FrameKinematics', 'BeachParams', 'SupgParams', 'FreeSurfaceState',
    'beach_mu', 'total_velocity', 'eta_gradient', 'v_phi', 'v_eta', 'supg_direction',
    'SupgProjection', 'assemble_supg_projection', 'energy_absorption_rate',
    'pressure_bernoulli', 'integrate_hull_force', 'drag_coefficient',
]
