"""Kollokations-BEM für das Laplace-Problem"""

from .kernels import green_function, green_normal_gradient
from .quadrature import QuadratureRule, duffy_vertex_rule
from .assembly import BemSystem, assemble_system, compute_alpha_rbm, resolve_threads
from .solver import (MixedBcAssignment, LinearSolverParams, solve_mixed_bvp,
                     evaluate_interior_potential, solve_dense)

__all__ = [
    'green_function', 'green_normal_gradient', 'QuadratureRule', 'duffy_vertex_rule',
    'BemSystem', 'assemble_system', 'compute_alpha_rbm', 'resolve_threads',
    'MixedBcAssignment', 'LinearSolverParams', 'solve_mixed_bvp',
    'evaluate_interior_potential', 'solve_dense',
]
