"""
Kelly-Fehlerschätzer: Sprung des Flächengradienten über Panelkanten
"""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..mesh.dofs import DofHandler
from ..mesh.shapes import REFERENCE_NODES, gauss_line
from ..mesh.surface import (LOCAL_EDGES, ReferenceMesh, basis_surface_gradients,
                            cell_diameters, edge_parameters)

logger = logging.getLogger(__name__)


@dataclass
class CellError:
    """τ_K je Zelle und Zelldurchmesser h"""

    tau: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if np.any(self.tau < 0):
            raise ValueError("Fehlerindikatoren müssen >= 0 sein")

    @property
    def max(self) -> float:
        return float(self.tau.max()) if len(self.tau) else 0.0

    @property
    def min(self) -> float:
        return float(self.tau.min()) if len(self.tau) else 0.0


@dataclass
class _EdgeTrace:
    """Gradient, Konormale und Linienelement je Zelle an den Kanten-Gauß-Punkten"""

    grad: np.ndarray      # (4, nc, nq, 3)
    conormal: np.ndarray  # (4, nc, nq, 3)
    length: np.ndarray    # (4, nc, nq)


def _conormal(tangent: np.ndarray, normal: np.ndarray, point: np.ndarray,
              center: np.ndarray) -> np.ndarray:
    """Nach außen zeigende Einheitsnormale der Kante in der Panelebene"""
    nu = np.cross(tangent, normal)
    nu /= np.linalg.norm(nu, axis=-1, keepdims=True)
    inward = np.sum(nu * (center - point), axis=-1) > 0
    return np.where(inward[..., None], -nu, nu)


def _edge_trace(vertices: np.ndarray, values: np.ndarray, local_edge: int,
                s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient, Konormale und |dx/ds| an den Parametern s einer lokalen Kante"""
    params = edge_parameters(local_edge, s)
    grads, geometry = basis_surface_gradients(vertices, params)
    grad = np.einsum('cqld,cl->cqd', grads, values)
    a, b = LOCAL_EDGES[local_edge]
    du, dv = REFERENCE_NODES[b] - REFERENCE_NODES[a]
    tangent = du * geometry.t_u + dv * geometry.t_v
    center = vertices.mean(axis=1)[:, None, :]
    nu = _conormal(tangent, geometry.normal, geometry.point, center)
    return grad, nu, np.linalg.norm(tangent, axis=-1)


def kelly_estimate(mesh: ReferenceMesh, dofs: DofHandler, positions: np.ndarray,
                   phi: np.ndarray, order: int = 3) -> CellError:
    """
    τ_K² = Σ_{e ⊂ ∂K} (h_K/24) ∫_e [∇_s φ·ν]² dγ

    Der Sprung ist ∇φ_K·ν_K + ∇φ_K'·ν_K' mit den nach außen zeigenden
    Konormalen beider Zellen. Kanten zwischen Flächen und Randkanten
    tragen nichts bei; an hängenden Kanten wird jede Halbkante mit der
    groben Nachbarzelle gepaart.

    Args:
        positions: Lagen je DOF
        phi: Potential je DOF
    """
    cells = dofs.cell_dofs
    vertices = positions[cells]
    values = np.asarray(phi, dtype=float)[cells]
    h = cell_diameters(vertices)
    s, w = gauss_line(order)

    traces = [_edge_trace(vertices, values, e, s) for e in range(4)]
    trace = _EdgeTrace(np.stack([t[0] for t in traces]), np.stack([t[1] for t in traces]),
                       np.stack([t[2] for t in traces]))

    tau_sq = np.zeros(len(cells))
    edge_map = mesh.edge_map()

    def start_node(c, e):
        return int(mesh.cells[c, LOCAL_EDGES[e][0]])

    for (a, b), owners in edge_map.items():
        if len(owners) != 2:
            continue
        (c1, e1), (c2, e2) = owners
        if mesh.patches[c1] != mesh.patches[c2]:
            continue
        # Gegenläufige Parametrisierung in der Nachbarzelle
        idx2 = slice(None) if start_node(c1, e1) == start_node(c2, e2) else slice(None, None, -1)
        jump = (np.sum(trace.grad[e1, c1] * trace.conormal[e1, c1], axis=-1)
                + np.sum(trace.grad[e2, c2][idx2] * trace.conormal[e2, c2][idx2], axis=-1))
        integral = float(np.sum(w * jump ** 2 * trace.length[e1, c1]))
        tau_sq[c1] += h[c1] / 24.0 * integral
        tau_sq[c2] += h[c2] / 24.0 * integral

    _hanging_contributions(mesh, vertices, values, h, s, w, trace, edge_map, tau_sq)

    logger.debug(f"Kelly-Schätzer: max τ = {np.sqrt(tau_sq.max()) if len(tau_sq) else 0:.3e}")
    return CellError(np.sqrt(tau_sq), h)


def _hanging_contributions(mesh, vertices, values, h, s, w, trace, edge_map, tau_sq):
    """Halbkanten an hängenden Knoten gegen die grobe Nachbarzelle"""
    parents: Dict[int, Tuple[int, int]] = {m: edge for edge, m in mesh.edge_midpoints.items()}

    for (a, b), owners in edge_map.items():
        if len(owners) != 1:
            continue
        fine_cell, fine_edge = owners[0]
        for m in (a, b):
            coarse_edge = parents.get(m)
            if coarse_edge is None or m not in mesh.hanging:
                continue
            other = b if m == a else a
            if other not in coarse_edge:
                continue
            coarse_owners = edge_map.get(coarse_edge, [])
            if len(coarse_owners) != 1:
                continue
            coarse_cell, coarse_local = coarse_owners[0]
            if mesh.patches[coarse_cell] != mesh.patches[fine_cell]:
                continue

            coarse_start = int(mesh.cells[coarse_cell, LOCAL_EDGES[coarse_local][0]])
            fine_start = int(mesh.cells[fine_cell, LOCAL_EDGES[fine_edge][0]])
            fine_end = int(mesh.cells[fine_cell, LOCAL_EDGES[fine_edge][1]])

            def coarse_param(node):
                if node == m:
                    return 0.5
                return 0.0 if node == coarse_start else 1.0

            s_c = coarse_param(fine_start) + s * (coarse_param(fine_end) - coarse_param(fine_start))
            grad_c, nu_c, _ = _edge_trace(vertices[coarse_cell][None], values[coarse_cell][None],
                                          coarse_local, s_c)
            jump = (np.sum(trace.grad[fine_edge, fine_cell] * trace.conormal[fine_edge, fine_cell],
                           axis=-1)
                    + np.sum(grad_c[0] * nu_c[0], axis=-1))
            integral = float(np.sum(w * jump ** 2 * trace.length[fine_edge, fine_cell]))
            tau_sq[fine_cell] += h[fine_cell] / 24.0 * integral
            tau_sq[coarse_cell] += h[coarse_cell] / 24.0 * integral
            break
