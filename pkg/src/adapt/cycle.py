"""
Ein vollständiger Adaptionszyklus: schätzen, markieren, ausführen, übertragen
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .kelly import CellError, kelly_estimate
from .refinement import (AdaptReport, RefinementFlags, execute_refinement, flag_fixed_fraction,
                         hull_placement, limit_flags)
from .transfer import transfer_solution
from ..dae.residual import ShipWaveProblem
from ..utils.config import config

logger = logging.getLogger(__name__)


@dataclass
class AdaptParams:
    refine_fraction: float = 0.3
    coarsen_fraction: float = 0.1
    h_min: float = 2.5 / 200.0
    max_dofs: int = 8000

    @classmethod
    def from_config(cls, length: float) -> 'AdaptParams':
        return cls(refine_fraction=float(config.get('adapt.refine_fraction', 0.3)),
                   coarsen_fraction=float(config.get('adapt.coarsen_fraction', 0.1)),
                   h_min=float(config.get('adapt.h_min_lengths', 1.0 / 200.0)) * length,
                   max_dofs=int(config.get('adapt.max_dofs', 8000)))


@dataclass
class AdaptOutcome:
    problem: ShipWaveProblem
    y: np.ndarray
    yp: np.ndarray
    errors: CellError
    flags: RefinementFlags
    report: AdaptReport

    @property
    def changed(self) -> bool:
        return self.report.refined > 0 or self.report.coarsened > 0


def adapt_problem(problem: ShipWaveProblem, y: np.ndarray, yp: np.ndarray,
                  params: Optional[AdaptParams] = None) -> AdaptOutcome:
    """
    Adaptiert das Netz nach dem Kelly-Schätzer von φ und überträgt den Zustand

    Ohne Änderung am Netz wird das alte Problem mit unverändertem Zustand
    zurückgegeben.
    """
    domain = problem.domain
    params = params or AdaptParams.from_config(domain.hull.length)

    x, phi, _ = problem.layout.unpack(y)
    errors = kelly_estimate(problem.mesh, problem.dofs, problem.geometry(x), phi)
    flags = flag_fixed_fraction(errors, params.refine_fraction, params.coarsen_fraction)
    flags = limit_flags(flags, errors, params.h_min, problem.n_dofs, params.max_dofs)

    placement = hull_placement(domain.hull, domain.patch_sides, problem.mesh.patch_regions,
                               tol=problem.projection.tol, maxiter=problem.projection.maxiter)
    mesh, report = execute_refinement(problem.mesh, flags, placement)
    if report.refined == 0 and report.coarsened == 0:
        logger.info("Adaption ohne Netzänderung")
        return AdaptOutcome(problem, y, yp, errors, flags, report)

    new_problem = ShipWaveProblem(replace(domain, mesh=mesh), problem.scenario)
    y_new, yp_new = transfer_solution(problem, new_problem, y, yp)
    logger.info(f"Adaption: τ_max={errors.max:.3e}, τ_min={errors.min:.3e}, "
                f"{problem.n_dofs} → {new_problem.n_dofs} DOFs")
    return AdaptOutcome(new_problem, y_new, yp_new, errors, flags, report)
