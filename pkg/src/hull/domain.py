"""
Strukturiertes Startnetz des Schlepptanks um den Wigley-Rumpf
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .scenario import Scenario
from .wigley import WigleyHull
from ..mesh.surface import ReferenceMesh, Region
from ..utils.errors import MeshError

logger = logging.getLogger(__name__)

# Flächen-IDs
FREE_SURFACE = 0
HULL_PORT = 1
HULL_STARBOARD = 2
BOTTOM = 3
INFLOW = 4
OUTFLOW = 5
WALL_PORT = 6
WALL_STARBOARD = 7

PATCH_NAMES = {
    FREE_SURFACE: 'free_surface',
    HULL_PORT: 'hull_port',
    HULL_STARBOARD: 'hull_starboard',
    BOTTOM: 'bottom',
    INFLOW: 'inflow',
    OUTFLOW: 'outflow',
    WALL_PORT: 'wall_port',
    WALL_STARBOARD: 'wall_starboard',
}

PATCH_REGIONS = {
    FREE_SURFACE: Region.FREE_SURFACE,
    HULL_PORT: Region.HULL,
    HULL_STARBOARD: Region.HULL,
    BOTTOM: Region.BOTTOM,
    INFLOW: Region.FAR_FIELD,
    OUTFLOW: Region.FAR_FIELD,
    WALL_PORT: Region.FAR_FIELD,
    WALL_STARBOARD: Region.FAR_FIELD,
}

# Rumpfseite je Fläche: +1 Backbord (y > 0), −1 Steuerbord
HULL_SIDES = {HULL_PORT: 1, HULL_STARBOARD: -1}


@dataclass
class Domain:
    """Referenznetz samt Rumpf und Flächenzuordnung"""

    mesh: ReferenceMesh
    hull: WigleyHull
    patch_sides: Dict[int, int] = field(default_factory=lambda: dict(HULL_SIDES))
    patch_names: Dict[int, str] = field(default_factory=lambda: dict(PATCH_NAMES))

    def side_of_patch(self, patches: np.ndarray) -> np.ndarray:
        """Rumpfseite je Fläche, 0 für Nicht-Rumpfflächen"""
        lookup = np.zeros(max(self.patch_names) + 1)
        for patch, side in self.patch_sides.items():
            lookup[patch] = side
        return lookup[np.asarray(patches)]


class _NodeRegistry:
    """Vergibt Knotennummern, identische Punkte werden zusammengeführt"""

    def __init__(self, decimals: int = 9):
        self.decimals = decimals
        self.points: List[np.ndarray] = []
        self.index: Dict[tuple, int] = {}

    def add(self, p: np.ndarray) -> int:
        key = tuple(np.round(p, self.decimals) + 0.0)
        node = self.index.get(key)
        if node is None:
            node = len(self.points)
            self.index[key] = node
            self.points.append(np.array(p, dtype=float))
        return node


def _graded(n: int, ratio: float) -> np.ndarray:
    """Stützstellen auf [0, 1], Breiten wachsen geometrisch mit ratio"""
    widths = ratio ** np.arange(n)
    s = np.concatenate([[0.0], np.cumsum(widths)])
    s /= s[-1]
    s[-1] = 1.0
    return s


def _add_grid(registry: _NodeRegistry, grid: np.ndarray, expected: np.ndarray,
              cells: list, patches: list, patch: int):
    """Zellen eines (ni+1, nj+1, 3)-Gitters mit Normale in Richtung expected"""
    ids = np.array([[registry.add(p) for p in row] for row in grid])
    for i in range(grid.shape[0] - 1):
        for j in range(grid.shape[1] - 1):
            c00, c10, c01, c11 = ids[i, j], ids[i + 1, j], ids[i, j + 1], ids[i + 1, j + 1]
            p00, p10, p01, p11 = grid[i, j], grid[i + 1, j], grid[i, j + 1], grid[i + 1, j + 1]
            t_u = 0.5 * (p10 + p11 - p00 - p01)
            t_v = 0.5 * (p01 + p11 - p00 - p10)
            if np.dot(np.cross(t_u, t_v), expected) < 0:
                c10, c01 = c01, c10
            cells.append((c00, c10, c01, c11))
            patches.append(patch)


def check_watertight(mesh: ReferenceMesh):
    """Jede Kante gehört zu genau zwei Panels"""
    bad = [edge for edge, owners in mesh.edge_map().items() if len(owners) != 2]
    if bad:
        raise MeshError(f"Netz ist nicht geschlossen: {len(bad)} Kanten mit != 2 Panels "
                        f"(z. B. {bad[:3]})")


def build_initial_domain(hull: WigleyHull, scenario: Scenario) -> Domain:
    """
    Baut das strukturierte Startnetz

    Freie Oberfläche um den Rumpf (Backbord/Steuerbord gespiegelt), Rumpf
    aus der Wigley-Fläche, ebener Boden und vier senkrechte Wände. Knoten
    entlang der Wasserlinie werden von Γʷ und Γʰ geteilt; die Duplizierung
    übernimmt die DOF-Verwaltung. Startzustand: η = 0.

    Raises:
        ConfigError: Rumpf schneidet das Becken
        MeshError: Netz nicht geschlossen oder entartet
    """
    basin = scenario.basin
    basin.check(hull)
    res = scenario.mesh
    L, T = hull.length, hull.draft
    W, D = basin.half_width, basin.depth

    x_ahead = np.linspace(basin.x_in, -0.5 * L, res.ahead_nx + 1)
    x_hull = np.linspace(-0.5 * L, 0.5 * L, res.hull_nx + 1)
    x_behind = np.linspace(0.5 * L, basin.x_out, res.behind_nx + 1)
    X = np.concatenate([x_ahead[:-1], x_hull, x_behind[1:]])
    s = _graded(res.side_ny, res.side_grading)
    z_hull = np.linspace(-T, 0.0, res.hull_nz + 1)
    Z = np.linspace(-D, 0.0, res.depth_nz + 1)
    Y = np.concatenate([-(W * s)[::-1], (W * s)[1:]])

    registry = _NodeRegistry()
    cells: list = []
    patches: list = []

    y0 = np.where(np.abs(X) <= 0.5 * L, hull.half_beam(X, 0.0), 0.0)
    for side in (1.0, -1.0):
        grid = np.zeros((len(X), len(s), 3))
        grid[:, :, 0] = X[:, None]
        grid[:, :, 1] = side * (y0[:, None] + (W - y0[:, None]) * s[None, :])
        _add_grid(registry, grid, np.array([0.0, 0.0, 1.0]), cells, patches, FREE_SURFACE)

    for patch, side in HULL_SIDES.items():
        grid = np.zeros((len(x_hull), len(z_hull), 3))
        grid[:, :, 0] = x_hull[:, None]
        grid[:, :, 1] = side * hull.half_beam(x_hull[:, None], z_hull[None, :])
        grid[:, :, 2] = z_hull[None, :]
        _add_grid(registry, grid, np.array([0.0, -side, 0.0]), cells, patches, patch)

    grid = np.zeros((len(X), len(Y), 3))
    grid[:, :, 0] = X[:, None]
    grid[:, :, 1] = Y[None, :]
    grid[:, :, 2] = -D
    _add_grid(registry, grid, np.array([0.0, 0.0, -1.0]), cells, patches, BOTTOM)

    for patch, y_wall in ((WALL_PORT, W), (WALL_STARBOARD, -W)):
        grid = np.zeros((len(X), len(Z), 3))
        grid[:, :, 0] = X[:, None]
        grid[:, :, 1] = y_wall
        grid[:, :, 2] = Z[None, :]
        _add_grid(registry, grid, np.array([0.0, np.sign(y_wall), 0.0]), cells, patches, patch)

    for patch, x_wall in ((INFLOW, basin.x_in), (OUTFLOW, basin.x_out)):
        grid = np.zeros((len(Y), len(Z), 3))
        grid[:, :, 0] = x_wall
        grid[:, :, 1] = Y[:, None]
        grid[:, :, 2] = Z[None, :]
        _add_grid(registry, grid, np.array([np.sign(x_wall), 0.0, 0.0]), cells, patches, patch)

    mesh = ReferenceMesh(np.array(registry.points), np.array(cells), np.array(patches),
                         PATCH_REGIONS)
    check_watertight(mesh)
    mesh.validate()

    logger.info(f"Startnetz: {mesh.n_nodes} Knoten, {mesh.n_cells} Panels "
                f"(Becken x∈[{basin.x_in:.2f}, {basin.x_out:.2f}] m, "
                f"Breite ±{W:.2f} m, Tiefe {D:.2f} m)")
    return Domain(mesh, hull)
