"""Netzadaption: Kelly-Schätzer, Quadtree-Verfeinerung, Lösungstransfer"""

from .kelly import CellError, kelly_estimate
from .refinement import (AdaptReport, Flag, RefinementFlags, execute_refinement,
                         flag_fixed_fraction, hull_placement, limit_flags, one_level_violations)
from .transfer import restart_after_adapt, transfer_field, transfer_solution
from .cycle import AdaptOutcome, AdaptParams, adapt_problem

__all__ = [
    'CellError', 'kelly_estimate',
    'AdaptReport', 'Flag', 'RefinementFlags', 'execute_refinement', 'flag_fixed_fraction',
    'hull_placement', 'limit_flags', 'one_level_violations',
    'restart_after_adapt', 'transfer_field', 'transfer_solution',
    'AdaptOutcome', 'AdaptParams', 'adapt_problem',
]
