"""
Übertragung des Zustands auf ein adaptiertes Netz und Neustart der Zeitintegration
"""

import logging
from typing import Tuple

import numpy as np

from ..dae.bdf import BdfIntegrator
from ..dae.residual import ShipWaveProblem
from ..mesh.dofs import DofHandler
from ..mesh.surface import ReferenceMesh
from ..utils.errors import MeshError

logger = logging.getLogger(__name__)


def transfer_field(old_dofs: DofHandler, new_dofs: DofHandler, new_mesh: ReferenceMesh,
                   values: np.ndarray) -> np.ndarray:
    """
    Nodale Interpolation eines DOF-Felds (n,) oder (n, k) auf neue DOFs

    Vorhandene (Knoten, Fläche)-Paare werden kopiert. Neue DOFs erhalten
    den Mittelwert ihrer Elternknoten auf derselben Fläche (Kantenmitte:
    zwei, Zellmitte: vier), was die bilineare Elterninterpolation exakt
    wiedergibt. Hängende Werte werden danach aus den Mastern gesetzt.

    Raises:
        MeshError: neuer DOF ohne auflösbare Eltern
    """
    values = np.asarray(values, dtype=float)
    out = np.zeros((new_dofs.n_dofs,) + values.shape[1:])
    done = np.zeros(new_dofs.n_dofs, dtype=bool)

    for i, (node, patch) in enumerate(zip(new_dofs.dof_node, new_dofs.dof_patch)):
        j = old_dofs.dof_of(node, patch)
        if j is not None:
            out[i] = values[j]
            done[i] = True

    # Eltern haben kleinere Knotennummern als ihre Kinder
    pending = sorted(np.flatnonzero(~done), key=lambda i: int(new_dofs.dof_node[i]))
    for i in pending:
        node, patch = int(new_dofs.dof_node[i]), int(new_dofs.dof_patch[i])
        parents = new_mesh.node_parents.get(node)
        if parents is None:
            raise MeshError(f"Knoten {node} ist neu, hat aber keine Eltern")
        parent_dofs = [new_dofs.dof_of(p, patch) for p in parents]
        if any(d is None or not done[d] for d in parent_dofs):
            raise MeshError(f"Eltern von Knoten {node} fehlen auf Fläche {patch}")
        out[i] = np.mean(out[parent_dofs], axis=0)
        done[i] = True

    return new_dofs.constraints.apply(out)


def transfer_solution(old: ShipWaveProblem, new: ShipWaveProblem, y: np.ndarray,
                      yp: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Überträgt Zustand und Zeitableitung auf das neue Problem

    Die Lagen werden anschließend an die neue Geometrie angepasst
    (Rumpfprojektion, Doppelknoten, Glättung).
    """
    fields = []
    for vector in (y, yp):
        x, phi, phin = old.layout.unpack(vector)
        fields.append([transfer_field(old.dofs, new.dofs, new.mesh, f) for f in (x, phi, phin)])

    (x, phi, phin), (xdot, phidot, phindot) = fields
    x = new.conform_positions(x)
    y_new = new.layout.pack(x, phi, phin)
    yp_new = new.layout.pack(xdot, phidot, phindot)
    logger.info(f"Zustand übertragen: {old.n_dofs} → {new.n_dofs} DOFs")
    return y_new, yp_new


def restart_after_adapt(integrator: BdfIntegrator, problem: ShipWaveProblem,
                        y: np.ndarray, yp: np.ndarray) -> BdfIntegrator:
    """
    Setzt den Integrator auf das neue Problem zurück

    Historie gelöscht, Ordnung 1, danach Konsistenzlösung der algebraischen
    Komponenten.

    Raises:
        ConvergenceError: Konsistenzlösung fehlgeschlagen
    """
    integrator.fun = problem.residual
    integrator.linearize = problem.linearize
    integrator.reset(integrator.t, y, yp, problem.differential, problem.atol)
    integrator.make_consistent()
    logger.info(f"Integrator nach Adaption neu gestartet bei t={integrator.t:.4f} s")
    return integrator
