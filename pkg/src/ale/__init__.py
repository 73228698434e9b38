"""ALE-Netzbewegung: Drahtgitter, Glättung und Projektion"""

from .waterline import MIN_ANGLE_DEG, Wireframe, build_wireframe, waterline_velocity
from .smoothing import (SmoothingSystem, assemble_forcing, assemble_laplace_beltrami,
                        build_smoothing_system, solve_smoothing)
from .projection import ProjectionOps, apply_projection

__all__ = [
    'MIN_ANGLE_DEG', 'Wireframe', 'build_wireframe', 'waterline_velocity',
    'SmoothingSystem', 'assemble_forcing', 'assemble_laplace_beltrami',
    'build_smoothing_system', 'solve_smoothing',
    'ProjectionOps', 'apply_projection',
]
