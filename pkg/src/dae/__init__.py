"""Zeitintegration: BDF, Newton-Krylov und das semidiskrete Residuum"""

from .bdf import (BdfHistory, BdfIntegrator, BdfOptions, ControllerParams, Linearization,
                  StepDecision, StepRecord, backward_euler_step, bdf_derivative,
                  fornberg_weights, order_of_accuracy, step_controller)
from .newton import (NewtonParams, NewtonResult, error_weights, finite_difference_jvp,
                     newton_solve, weighted_rms_norm)
from .layout import DofRoles, Role, StateLayout, classify_dofs
from .residual import HullForce, ShipWaveProblem

__all__ = [
    'BdfHistory', 'BdfIntegrator', 'BdfOptions', 'ControllerParams', 'Linearization',
    'StepDecision', 'StepRecord', 'backward_euler_step', 'bdf_derivative',
    'fornberg_weights', 'order_of_accuracy', 'step_controller',
    'NewtonParams', 'NewtonResult', 'error_weights', 'finite_difference_jvp',
    'newton_solve', 'weighted_rms_norm',
    'DofRoles', 'Role', 'StateLayout', 'classify_dofs',
    'HullForce', 'ShipWaveProblem',
]
