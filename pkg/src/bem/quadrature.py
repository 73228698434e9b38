"""
Quadraturregeln für die BEM-Assemblierung
Reguläre Tensor-Gauß-Regeln und Duffy-Regeln für Eckensingularitäten
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from ..mesh.shapes import REFERENCE_NODES, gauss_line, gauss_rule
from ..utils.config import config

# Ecken des Einheitsquadrats gegen den Uhrzeigersinn, als lokale Knotennummern
_CCW = (0, 1, 3, 2)


@dataclass(frozen=True)
class QuadratureRule:
    """
    Auswahl der Quadraturordnungen

    regular: Gauß-Ordnung je Richtung für ferne Panels
    near: Ordnung für Panels innerhalb near_factor Diagonalen
    singular: Ordnung je Richtung der Duffy-Regel
    """

    regular: int = 4
    near: int = 8
    singular: int = 8
    near_factor: float = 2.0

    @classmethod
    def from_config(cls) -> 'QuadratureRule':
        return cls(
            regular=int(config.get('solver.bem_quad_order', 4)),
            near=int(config.get('solver.bem_near_order', 8)),
            singular=int(config.get('solver.bem_singular_order', 8)),
            near_factor=float(config.get('solver.bem_near_factor', 2.0)),
        )

    def regular_points(self) -> Tuple[np.ndarray, np.ndarray]:
        return gauss_rule(self.regular)

    def near_points(self) -> Tuple[np.ndarray, np.ndarray]:
        return gauss_rule(self.near)

    def singular_points(self, vertex: int) -> Tuple[np.ndarray, np.ndarray]:
        return duffy_vertex_rule(vertex, self.singular)


@lru_cache(maxsize=None)
def duffy_vertex_rule(vertex: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Regel für ∫∫_[0,1]² f(u,v) du dv mit 1/r-Singularität an einer Ecke

    Das Quadrat wird in zwei Dreiecke mit Spitze an der singulären Ecke
    zerlegt. Jedes Dreieck (s, a, b) wird über
    x(ξ, η) = s + ξ[(a − s) + η(b − a)] aus dem Einheitsquadrat
    abgebildet; die Jacobi-Determinante ξ·|det| hebt 1/r auf.

    Args:
        vertex: lokale Knotennummer der singulären Ecke (0..3)
        order: Gauß-Ordnung je Richtung

    Returns:
        (Punkte (2·order², 2), Gewichte), schreibgeschützt
    """
    if vertex not in range(4):
        raise ValueError(f"Ungültige Ecke {vertex}")

    s_line, w_line = gauss_line(order)
    xi, eta = np.meshgrid(s_line, s_line, indexing='ij')
    xi = xi.ravel()
    eta = eta.ravel()
    w_tensor = np.outer(w_line, w_line).ravel()

    k = _CCW.index(vertex)
    ring = [REFERENCE_NODES[_CCW[(k + j) % 4]] for j in range(4)]
    s = ring[0]

    points = []
    weights = []
    for a, b in ((ring[1], ring[2]), (ring[2], ring[3])):
        det = abs((a - s)[0] * (b - a)[1] - (a - s)[1] * (b - a)[0])
        p = s[None, :] + xi[:, None] * ((a - s)[None, :] + eta[:, None] * (b - a)[None, :])
        points.append(p)
        weights.append(w_tensor * xi * det)

    points = np.concatenate(points)
    weights = np.concatenate(weights)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights
