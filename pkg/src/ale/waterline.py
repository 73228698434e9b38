"""
Drahtgitter (Kurven zwischen Randteilen) und Wasserlinien-Kinematik
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..mesh.surface import ReferenceMesh, Region
from ..utils.errors import GeometryError

logger = logging.getLogger(__name__)

# Mindestwinkel zwischen n^w und n^h bzw. n^ff
MIN_ANGLE_DEG = 5.0


@dataclass
class Wireframe:
    """
    Knotenmengen der Kurven γ zwischen Randteilen

    waterline: γ^{w,h}; free_surface_edge: γ^{w,ff} (Rand von Γʷ an den
    Wänden); static: übrige Kanten (γ^{b,ff}, Kiel, Steven, Wandecken).
    Jeder Knoten gehört genau einer Kurvenfamilie an.
    """

    waterline: np.ndarray
    free_surface_edge: np.ndarray
    static: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return np.sort(np.concatenate([self.waterline, self.free_surface_edge, self.static]))

    @property
    def moving(self) -> np.ndarray:
        return np.sort(np.concatenate([self.waterline, self.free_surface_edge]))

    def curve_of(self) -> Dict[int, str]:
        result = {}
        for name in ('waterline', 'free_surface_edge', 'static'):
            for node in getattr(self, name):
                result[int(node)] = name
        return result


def build_wireframe(mesh: ReferenceMesh) -> Wireframe:
    """Ordnet alle Knoten mit mehreren Flächen einer Kurvenfamilie zu"""
    waterline, fs_edge, static = [], [], []
    for node, patches in sorted(mesh.node_patches().items()):
        if len(patches) < 2:
            continue
        regions = {mesh.patch_regions[p] for p in patches}
        if Region.FREE_SURFACE in regions and Region.HULL in regions:
            waterline.append(node)
        elif Region.FREE_SURFACE in regions:
            fs_edge.append(node)
        else:
            static.append(node)

    wireframe = Wireframe(np.array(waterline, dtype=np.int64),
                          np.array(fs_edge, dtype=np.int64),
                          np.array(static, dtype=np.int64))
    logger.debug(f"Drahtgitter: {len(waterline)} Wasserlinien-, {len(fs_edge)} Rand-, "
                 f"{len(static)} feste Knoten")
    return wireframe


def waterline_velocity(v, n_w, n_h, n_extra: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Knotengeschwindigkeit auf γ^{w,h} bzw. γ^{w,ff}

    Löst w·n^w = v·n^w, w·n^h = 0 und w·t = 0 mit t = n^h × n^w
    (tangentiale Geschwindigkeit null). Mit n_extra (Ecken mit drei
    Flächen) ersetzt w·n_extra = 0 die Tangentialbedingung.

    Args:
        v: Fluidgeschwindigkeit (..., 3)
        n_w: Normale der freien Oberfläche (..., 3)
        n_h: Normale von Rumpf oder Wand (..., 3)
        n_extra: optionale dritte Normale (..., 3)

    Raises:
        GeometryError: n^w und n^h nahezu parallel (< 5°)
    """
    squeeze = np.ndim(v) == 1
    v = np.atleast_2d(np.asarray(v, dtype=float))
    n_w = np.broadcast_to(np.atleast_2d(np.asarray(n_w, dtype=float)), v.shape)
    n_h = np.broadcast_to(np.atleast_2d(np.asarray(n_h, dtype=float)), v.shape)

    t = np.cross(n_h, n_w)
    sin_angle = np.linalg.norm(t, axis=-1) / (np.linalg.norm(n_h, axis=-1)
                                              * np.linalg.norm(n_w, axis=-1))
    if np.any(sin_angle < np.sin(np.radians(MIN_ANGLE_DEG))):
        raise GeometryError(f"Normalen an der Wasserlinie nahezu parallel "
                            f"(min. Winkel {np.degrees(np.arcsin(sin_angle.min())):.2f}°)")

    third = t if n_extra is None else np.broadcast_to(
        np.atleast_2d(np.asarray(n_extra, dtype=float)), v.shape)
    A = np.stack([n_w, n_h, third], axis=-2)
    rhs = np.zeros(v.shape)
    rhs[..., 0] = np.sum(v * n_w, axis=-1)

    try:
        w = np.linalg.solve(A, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as e:
        raise GeometryError(f"Wasserlinien-System singulär: {e}") from e

    return w[0] if squeeze else w
