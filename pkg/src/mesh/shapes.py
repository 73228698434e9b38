"""
Iso-parametrische Formfunktionen und Gauß-Regeln
Bilineare Lagrange-Funktionen auf dem Einheitsquadrat [0,1]²
"""

from functools import lru_cache
from typing import Tuple

import numpy as np

# Knotenreihenfolge in (u, v): (0,0), (1,0), (0,1), (1,1)
REFERENCE_NODES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

_RANGE_TOL = 1e-14


def shape_values(u: float, v: float) -> np.ndarray:
    """
    Wertet die vier bilinearen Formfunktionen aus

    Args:
        u: Einheitskoordinate in [0, 1]
        v: Einheitskoordinate in [0, 1]

    Returns:
        Array (4,) mit N_l(u, v)
    """
    if not (-_RANGE_TOL <= u <= 1 + _RANGE_TOL and -_RANGE_TOL <= v <= 1 + _RANGE_TOL):
        raise ValueError(f"(u, v) = ({u}, {v}) liegt außerhalb von [0,1]²")

    return np.array([(1 - u) * (1 - v), u * (1 - v), (1 - u) * v, u * v])


def shape_table(points: np.ndarray) -> np.ndarray:
    """Formfunktionen an mehreren Punkten, Ergebnis (n, 4)"""
    u = points[:, 0]
    v = points[:, 1]
    return np.stack([(1 - u) * (1 - v), u * (1 - v), (1 - u) * v, u * v], axis=1)


def shape_gradient_table(points: np.ndarray) -> np.ndarray:
    """(u, v)-Gradienten der Formfunktionen, Ergebnis (n, 4, 2)"""
    u = points[:, 0]
    v = points[:, 1]
    du = np.stack([-(1 - v), 1 - v, -v, v], axis=1)
    dv = np.stack([-(1 - u), -u, 1 - u, u], axis=1)
    return np.stack([du, dv], axis=2)


@lru_cache(maxsize=None)
def gauss_line(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauß-Legendre-Regel auf [0, 1]"""
    if order < 1:
        raise ValueError(f"Quadraturordnung muss >= 1 sein (ist {order})")

    x, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    s.setflags(write=False)
    w.setflags(write=False)
    return s, w


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Tensor-Gauß-Regel auf [0,1]²

    Returns:
        (Punkte (order², 2), Gewichte (order²,)), schreibgeschützt
    """
    s, w = gauss_line(order)
    uu, vv = np.meshgrid(s, s, indexing='ij')
    points = np.stack([uu.ravel(), vv.ravel()], axis=1)
    weights = np.outer(w, w).ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights
