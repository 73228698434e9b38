"""
Viereck-Oberflächennetze in 3D
Referenznetz, aktuelle Konfiguration und Geometrie-Abfragen
"""

import copy
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, List, NamedTuple, Optional, Set, Tuple

import numpy as np

from .shapes import REFERENCE_NODES, gauss_rule, shape_gradient_table, shape_table
from ..utils.errors import DegeneratePanelError, MeshError

logger = logging.getLogger(__name__)

# Lokale Kanten (Anfang, Ende) gegen den Uhrzeigersinn in (u, v)
LOCAL_EDGES = ((0, 1), (1, 3), (3, 2), (2, 0))

# Relative Toleranz der Jacobi-Determinante: ε_J = 1e-12·diam²
JACOBIAN_TOL = 1e-12


class Region(IntEnum):
    """Randteile des Gebiets"""

    FREE_SURFACE = 0
    HULL = 1
    BOTTOM = 2
    FAR_FIELD = 3

    @property
    def label(self) -> str:
        return self.name.lower()


class Family(NamedTuple):
    """Eltern-Eintrag einer Verfeinerung (vier Kinder)"""

    corners: Tuple[int, int, int, int]
    patch: int
    level: int
    family: int          # Familie der Elternzelle, -1 für Wurzeln
    center: int


@dataclass(frozen=True)
class PanelGeometry:
    """Geometrie an Quadraturpunkten, Arrays (n_cells, n_points, ...)"""

    point: np.ndarray
    t_u: np.ndarray
    t_v: np.ndarray
    normal: np.ndarray
    jacobian: np.ndarray


def edge_parameters(local_edge: int, s: np.ndarray) -> np.ndarray:
    """(u, v)-Punkte entlang einer lokalen Kante, s ∈ [0,1] vom Anfang zum Ende"""
    a, b = LOCAL_EDGES[local_edge]
    pa = REFERENCE_NODES[a]
    pb = REFERENCE_NODES[b]
    return pa[None, :] + np.asarray(s)[:, None] * (pb - pa)[None, :]


def map_points(vertices: np.ndarray, points: np.ndarray) -> PanelGeometry:
    """
    Bildet Einheitspunkte auf alle Panels ab

    Args:
        vertices: Eckpunkte (n_cells, 4, 3)
        points: (u, v)-Punkte (n_points, 2)
    """
    N = shape_table(points)
    dN = shape_gradient_table(points)

    point = np.einsum('ql,cld->cqd', N, vertices)
    t_u = np.einsum('ql,cld->cqd', dN[:, :, 0], vertices)
    t_v = np.einsum('ql,cld->cqd', dN[:, :, 1], vertices)
    cross = np.cross(t_u, t_v)
    jacobian = np.linalg.norm(cross, axis=-1)
    safe = np.where(jacobian > 0, jacobian, 1.0)
    normal = cross / safe[..., None]

    return PanelGeometry(point, t_u, t_v, normal, jacobian)


def cell_diameters(vertices: np.ndarray) -> np.ndarray:
    """Längste Paneldiagonale je Zelle"""
    d1 = np.linalg.norm(vertices[:, 3] - vertices[:, 0], axis=-1)
    d2 = np.linalg.norm(vertices[:, 2] - vertices[:, 1], axis=-1)
    return np.maximum(d1, d2)


def check_jacobians(vertices: np.ndarray, geometry: PanelGeometry,
                    cell_ids: Optional[np.ndarray] = None):
    """Wirft DegeneratePanelError für das erste Panel mit J ≤ ε_J"""
    eps = JACOBIAN_TOL * cell_diameters(vertices) ** 2
    bad = geometry.jacobian <= eps[:, None]
    if np.any(bad):
        local = int(np.argmax(bad.any(axis=1)))
        panel = int(cell_ids[local]) if cell_ids is not None else local
        raise DegeneratePanelError(panel, float(geometry.jacobian[local].min()))


def basis_surface_gradients(vertices: np.ndarray, points: np.ndarray,
                            cell_ids: Optional[np.ndarray] = None
                            ) -> Tuple[np.ndarray, PanelGeometry]:
    """
    Flächengradienten der vier Basisfunktionen

    Berechnet D (G)⁻¹ ∇_uv N_l mit der ersten Fundamentalform G.

    Returns:
        (Gradienten (n_cells, n_points, 4, 3), Geometrie)
    """
    geometry = map_points(vertices, points)
    check_jacobians(vertices, geometry, cell_ids)

    t_u, t_v = geometry.t_u, geometry.t_v
    g11 = np.einsum('cqd,cqd->cq', t_u, t_u)
    g12 = np.einsum('cqd,cqd->cq', t_u, t_v)
    g22 = np.einsum('cqd,cqd->cq', t_v, t_v)
    det = g11 * g22 - g12 ** 2

    bad = det <= JACOBIAN_TOL * (g11 + g22) ** 2
    if np.any(bad):
        local = int(np.argmax(bad.any(axis=1)))
        panel = int(cell_ids[local]) if cell_ids is not None else local
        raise DegeneratePanelError(panel, float(np.sqrt(max(det[local].min(), 0.0))),
                                   f"Singuläre erste Fundamentalform auf Panel {panel}")

    dN = shape_gradient_table(points)
    du = dN[None, :, :, 0]
    dv = dN[None, :, :, 1]
    a_u = (g22[..., None] * du - g12[..., None] * dv) / det[..., None]
    a_v = (g11[..., None] * dv - g12[..., None] * du) / det[..., None]
    grads = a_u[..., None] * t_u[:, :, None, :] + a_v[..., None] * t_v[:, :, None, :]

    return grads, geometry


@dataclass
class QuadratureData:
    """Formfunktionen, Gradienten und Gewichte einer Zellmenge an Gauß-Punkten"""

    cells: np.ndarray              # (nc, 4) Indizes in das Lagen-Array
    shape: np.ndarray              # (nq, 4)
    grads: np.ndarray              # (nc, nq, 4, 3)
    geometry: PanelGeometry
    weights: np.ndarray            # (nq,)

    @property
    def dA(self) -> np.ndarray:
        """J·w je Zelle und Punkt"""
        return self.geometry.jacobian * self.weights[None, :]

    def interpolate(self, values: np.ndarray) -> np.ndarray:
        """Knotenwerte → Werte an Quadraturpunkten, (nc, nq[, k])"""
        return np.einsum('ql,cl...->cq...', self.shape, values[self.cells])

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """Flächengradient eines Skalarfelds, (nc, nq, 3)"""
        return np.einsum('cqld,cl->cqd', self.grads, values[self.cells])

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.dA))


def quadrature_data(positions: np.ndarray, cells: np.ndarray, order: int = 4,
                    cell_ids: Optional[np.ndarray] = None) -> QuadratureData:
    """Baut QuadratureData für die gegebenen Zellen"""
    points, weights = gauss_rule(order)
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 4)
    grads, geometry = basis_surface_gradients(positions[cells], points, cell_ids)
    return QuadratureData(cells, shape_table(points), grads, geometry, weights)


@dataclass
class CurrentConfiguration:
    """
    Knotenlagen x^k(t) samt Zuordnung Panel → Lagen

    positions kann knoten- oder DOF-basiert sein; cells indiziert positions.
    """

    positions: np.ndarray
    cells: np.ndarray

    def vertices(self, panels=None) -> np.ndarray:
        cells = self.cells if panels is None else self.cells[np.atleast_1d(panels)]
        return self.positions[cells]


def panel_geometry(panel: int, u: float, v: float,
                   config: CurrentConfiguration) -> Dict[str, np.ndarray]:
    """
    Punkt, Tangenten, Normale und Jacobi-Determinante an (u, v)

    Raises:
        DegeneratePanelError: J ≤ ε_J
    """
    vertices = config.vertices(panel)
    geometry = map_points(vertices, np.array([[u, v]], dtype=float))
    check_jacobians(vertices, geometry, np.array([panel]))

    return {
        'point': geometry.point[0, 0],
        't_u': geometry.t_u[0, 0],
        't_v': geometry.t_v[0, 0],
        'n': geometry.normal[0, 0],
        'J': float(geometry.jacobian[0, 0]),
    }


def surface_gradient_basis(panel: int, u: float, v: float,
                           config: CurrentConfiguration) -> np.ndarray:
    """Flächengradienten der vier Basisfunktionen an (u, v), Ergebnis (4, 3)"""
    vertices = config.vertices(panel)
    grads, _ = basis_surface_gradients(vertices, np.array([[u, v]], dtype=float),
                                       np.array([panel]))
    return grads[0, 0]


@dataclass
class ReferenceMesh:
    """
    Referenznetz Γ̃ aus bilinearen Vierecken

    Jede Zelle trägt eine Flächen-ID (patch) und über patch_regions eine
    Region. Verfeinerungsdaten (Level, Familien, Kantenmittelpunkte) werden
    von src.adapt gepflegt.
    """

    nodes: np.ndarray
    cells: np.ndarray
    patches: np.ndarray
    patch_regions: Dict[int, Region]
    levels: np.ndarray = None
    families: np.ndarray = None
    family_table: Dict[int, Family] = field(default_factory=dict)
    edge_midpoints: Dict[Tuple[int, int], int] = field(default_factory=dict)
    node_parents: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    hanging: Dict[int, Tuple[Tuple[int, ...], Tuple[float, ...]]] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 3)
        self.cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 4)
        self.patches = np.asarray(self.patches, dtype=np.int64).reshape(-1)
        self.patch_regions = {int(k): Region(v) for k, v in self.patch_regions.items()}
        if self.levels is None:
            self.levels = np.zeros(len(self.cells), dtype=np.int64)
        if self.families is None:
            self.families = np.full(len(self.cells), -1, dtype=np.int64)
        self.levels = np.asarray(self.levels, dtype=np.int64)
        self.families = np.asarray(self.families, dtype=np.int64)

        if len(self.patches) != len(self.cells):
            raise MeshError("Anzahl Flächen-IDs passt nicht zur Anzahl Zellen")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def regions(self) -> np.ndarray:
        """Region je Zelle"""
        lookup = np.zeros(max(self.patch_regions) + 1, dtype=np.int64)
        for patch, region in self.patch_regions.items():
            lookup[patch] = int(region)
        return lookup[self.patches]

    def configuration(self) -> CurrentConfiguration:
        return CurrentConfiguration(self.nodes, self.cells)

    def cell_vertices(self, positions: np.ndarray = None) -> np.ndarray:
        positions = self.nodes if positions is None else positions
        return positions[self.cells]

    def used_nodes(self) -> np.ndarray:
        return np.unique(self.cells)

    def edge_map(self) -> Dict[Tuple[int, int], List[Tuple[int, int]]]:
        """Kante (sortiertes Knotenpaar) → Liste (Zelle, lokale Kante)"""
        edges: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
        for c, cell in enumerate(self.cells):
            for e, (a, b) in enumerate(LOCAL_EDGES):
                key = (min(cell[a], cell[b]), max(cell[a], cell[b]))
                edges.setdefault((int(key[0]), int(key[1])), []).append((c, e))
        return edges

    def node_patches(self) -> Dict[int, Set[int]]:
        """Knoten → Menge der angrenzenden Flächen-IDs"""
        result: Dict[int, Set[int]] = {}
        for cell, patch in zip(self.cells, self.patches):
            for node in cell:
                result.setdefault(int(node), set()).add(int(patch))
        return result

    def update_hanging(self):
        """Bestimmt hängende Knoten aus Kantenmittelpunkten und aktiven Zellen"""
        used = set(int(n) for n in self.used_nodes())
        hanging = {}
        for (a, b) in self.edge_map():
            m = self.edge_midpoints.get((a, b))
            if m is not None and m in used:
                hanging[m] = ((a, b), (0.5, 0.5))
        self.hanging = hanging
        if hanging:
            logger.debug(f"{len(hanging)} hängende Knoten")

    def validate(self, order: int = 4):
        """
        Prüft die Netz-Invarianten

        Raises:
            DegeneratePanelError: Jacobi-Determinante ≤ ε_J an einem Quadraturpunkt
            MeshError: Regionen unvollständig oder Gewichte ungültig
        """
        missing = set(int(p) for p in np.unique(self.patches)) - set(self.patch_regions)
        if missing:
            raise MeshError(f"Flächen ohne Region: {sorted(missing)}")

        points, _ = gauss_rule(order)
        vertices = self.cell_vertices()
        geometry = map_points(vertices, points)
        check_jacobians(vertices, geometry)

        for node, (masters, weights) in self.hanging.items():
            if abs(sum(weights) - 1.0) > 1e-14:
                raise MeshError(f"Gewichte des hängenden Knotens {node} summieren nicht zu 1")
            if node in masters:
                raise MeshError(f"Hängender Knoten {node} ist sein eigener Master")

    def surface_area(self, order: int = 2) -> float:
        points, weights = gauss_rule(order)
        geometry = map_points(self.cell_vertices(), points)
        return float(np.sum(geometry.jacobian @ weights))

    def copy(self) -> 'ReferenceMesh':
        return copy.deepcopy(self)
