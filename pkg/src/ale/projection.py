"""
Projektion geglätteter Lagen auf Rumpf und freie Oberfläche
"""

import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from ..hull.wigley import WigleyHull, project_to_hull
from ..mesh.surface import Region
from ..utils.config import config

logger = logging.getLogger(__name__)

EtaField = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


@dataclass
class ProjectionOps:
    """
    Projektionen P_h (Rumpf) und P_η (z = η(x, y)) je DOF

    dof_region: Region je DOF; dof_side: Rumpfseite je DOF (0 außerhalb)
    """

    hull: WigleyHull
    dof_region: np.ndarray
    dof_side: np.ndarray
    tol: float = 1e-10
    maxiter: int = 50

    @classmethod
    def from_config(cls, hull: WigleyHull, dof_region, dof_side) -> 'ProjectionOps':
        return cls(hull, np.asarray(dof_region), np.asarray(dof_side, dtype=float),
                   tol=float(config.get('solver.projection_tol', 1e-10)),
                   maxiter=int(config.get('solver.projection_maxiter', 50)))

    @property
    def hull_dofs(self) -> np.ndarray:
        return np.flatnonzero(self.dof_region == Region.HULL)

    @property
    def free_surface_dofs(self) -> np.ndarray:
        return np.flatnonzero(self.dof_region == Region.FREE_SURFACE)

    def project_hull(self, points: np.ndarray, dofs: np.ndarray) -> np.ndarray:
        if len(dofs) == 0:
            return np.zeros((0, 3))
        return project_to_hull(points, self.dof_side[dofs], self.hull,
                               tol=self.tol, maxiter=self.maxiter)


def apply_projection(g: np.ndarray, ops: ProjectionOps, eta: EtaField = None) -> np.ndarray:
    """
    Bildet geglättete Lagen g auf die Randflächen ab

    Rumpf-DOFs werden auf die Wigley-Fläche projiziert, DOFs der freien
    Oberfläche erhalten z = η. Übrige DOFs bleiben unverändert.

    Args:
        g: geglättete Lagen (n, 3)
        ops: Projektionsdaten
        eta: η je DOF (n,) oder Funktion η(x, y); None lässt z unverändert

    Raises:
        ProjectionError: Rumpfprojektion konvergiert nicht
    """
    x = np.array(g, dtype=float, copy=True)

    hull = ops.hull_dofs
    if len(hull):
        x[hull] = ops.project_hull(x[hull], hull)

    fs = ops.free_surface_dofs
    if eta is not None and len(fs):
        if callable(eta):
            x[fs, 2] = eta(x[fs, 0], x[fs, 1])
        else:
            x[fs, 2] = np.asarray(eta, dtype=float)[fs]
    return x
