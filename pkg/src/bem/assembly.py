"""
Assemblierung der kollokierten Randintegralgleichung
α_i φ_i + Σ_j N_ij φ_j − Σ_j D_ij φn_j = 0 für jeden DOF i
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import psutil
from scipy import io as scipy_io
from scipy import sparse

from .kernels import kernels_unchecked
from .quadrature import QuadratureRule
from ..mesh.shapes import shape_table
from ..mesh.surface import CurrentConfiguration, cell_diameters, check_jacobians, map_points
from ..utils.config import config

logger = logging.getLogger(__name__)


def resolve_threads(threads: Optional[int] = None) -> int:
    """
    Anzahl Threads für die Zeilen-Assemblierung

    Reihenfolge: Argument, performance.threads, physische Kerne;
    WAVEBEM_THREADS begrenzt das Ergebnis nach oben.
    """
    if threads is None:
        threads = config.get('performance.threads')
    if threads is None:
        threads = psutil.cpu_count(logical=False) or 1

    cap = os.environ.get('WAVEBEM_THREADS')
    if cap:
        try:
            threads = min(int(threads), int(cap))
        except ValueError:
            logger.warning(f"WAVEBEM_THREADS={cap!r} ist keine Ganzzahl, wird ignoriert")

    return max(1, int(threads))


@dataclass(frozen=True)
class BemSystem:
    """Diagonale α sowie dichte Neumann- (N) und Dirichlet-Matrix (D)"""

    alpha: np.ndarray
    N: np.ndarray
    D: np.ndarray

    @property
    def n(self) -> int:
        return len(self.alpha)

    def lhs_phi(self) -> np.ndarray:
        """α + N"""
        A = self.N.copy()
        A[np.diag_indices_from(A)] += self.alpha
        return A

    def residual(self, phi: np.ndarray, phin: np.ndarray) -> np.ndarray:
        return self.alpha * phi + self.N @ phi - self.D @ phin

    def rigid_mode_defect(self) -> float:
        """max_i |(α + N)·1|_i"""
        return float(np.max(np.abs(self.alpha + self.N @ np.ones(self.n))))

    def dump_matrix_market(self, directory, prefix: str = 'bem'):
        """Schreibt N, D und α im Matrix-Market-Koordinatenformat"""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        scipy_io.mmwrite(str(directory / f'{prefix}_N.mtx'), sparse.coo_matrix(self.N),
                         precision=17)
        scipy_io.mmwrite(str(directory / f'{prefix}_D.mtx'), sparse.coo_matrix(self.D),
                         precision=17)
        scipy_io.mmwrite(str(directory / f'{prefix}_alpha.mtx'),
                         sparse.coo_matrix(self.alpha[:, None]), precision=17)
        logger.info(f"BEM-Matrizen nach {directory} geschrieben")


def compute_alpha_rbm(N: np.ndarray) -> np.ndarray:
    """Raumwinkelanteil aus der Starrkörpermode: α_i = −Σ_j N_ij"""
    return -np.sum(N, axis=1)


def _singular_pairs(cells: np.ndarray, point_ids: np.ndarray):
    """(Zeile, Zelle, lokale Ecke) für jeden DOF, der auf einer Panelecke kollokiert"""
    order = np.argsort(point_ids, kind='stable')
    sorted_ids = point_ids[order]
    cell_points = point_ids[cells]

    rows, pair_cells, vertices = [], [], []
    for k in range(4):
        lo = np.searchsorted(sorted_ids, cell_points[:, k], side='left')
        hi = np.searchsorted(sorted_ids, cell_points[:, k], side='right')
        for c in range(len(cells)):
            for idx in range(lo[c], hi[c]):
                rows.append(order[idx])
                pair_cells.append(c)
                vertices.append(k)

    return (np.array(rows, dtype=np.int64), np.array(pair_cells, dtype=np.int64),
            np.array(vertices, dtype=np.int64))


def assemble_system(configuration: CurrentConfiguration,
                    point_ids: Optional[np.ndarray] = None,
                    quad: Optional[QuadratureRule] = None,
                    threads: Optional[int] = None,
                    row_block: Optional[int] = None) -> BemSystem:
    """
    Assembliert α, N und D auf der aktuellen Konfiguration

    Zeile i kollokiert am Ort von DOF i; Spalte j gehört zur Basisfunktion
    von DOF j. Doppelknoten kollokieren am selben Punkt, integrieren aber
    die Basis ihrer eigenen Fläche. Panels mit dem Kollokationspunkt als
    Ecke werden mit der Duffy-Regel integriert, nahe Panels mit erhöhter
    Gauß-Ordnung.

    Args:
        configuration: DOF-Lagen und Zellen → DOFs
        point_ids: geometrischer Punkt je DOF (Doppelknoten gleich),
            Default: exakt gleiche Koordinaten
        quad: Quadraturauswahl, Default aus der Konfiguration
        threads: Thread-Anzahl, Default resolve_threads()
        row_block: Zeilen je Block

    Returns:
        BemSystem mit α aus der Starrkörpermode
    """
    quad = quad or QuadratureRule.from_config()
    positions = np.asarray(configuration.positions, dtype=float)
    cells = np.asarray(configuration.cells, dtype=np.int64)
    n = len(positions)
    nc = len(cells)
    if point_ids is None:
        _, point_ids = np.unique(positions, axis=0, return_inverse=True)
    point_ids = np.asarray(point_ids).reshape(-1)
    row_block = int(row_block or config.get('performance.row_block', 64))

    vertices = positions[cells]
    reg_pts, reg_w = quad.regular_points()
    geo = map_points(vertices, reg_pts)
    check_jacobians(vertices, geo)
    wsh = geo.jacobian[:, :, None] * reg_w[None, :, None] * shape_table(reg_pts)[None]

    near_pts, near_w = quad.near_points()
    geo_near = map_points(vertices, near_pts)
    wsh_near = (geo_near.jacobian[:, :, None] * near_w[None, :, None]
                * shape_table(near_pts)[None])

    scatter_t = sparse.csr_matrix(
        (np.ones(4 * nc), (cells.ravel(), np.arange(4 * nc))), shape=(n, 4 * nc))

    diam = cell_diameters(vertices)
    centroid = vertices.mean(axis=1)

    s_rows, s_cells, s_vertex = _singular_pairs(cells, point_ids)
    singular_mask = np.zeros((n, nc), dtype=bool)
    singular_mask[s_rows, s_cells] = True

    D = np.zeros((n, n))
    N = np.zeros((n, n))

    def assemble_rows(start: int):
        rows = np.arange(start, min(start + row_block, n))
        x = positions[rows]
        r = geo.point[None] - x[:, None, None, :]
        G, dG = kernels_unchecked(r, geo.normal[None])

        dist = np.linalg.norm(centroid[None] - x[:, None, :], axis=-1)
        sing = singular_mask[rows]
        near = (dist < quad.near_factor * diam[None]) & ~sing
        skip = sing | near
        G[skip] = 0.0
        dG[skip] = 0.0

        b = len(rows)
        Dc = np.einsum('bcq,cql->bcl', G, wsh).reshape(b, -1)
        Nc = np.einsum('bcq,cql->bcl', dG, wsh).reshape(b, -1)
        D_rows = np.asarray((scatter_t @ Dc.T).T)
        N_rows = np.asarray((scatter_t @ Nc.T).T)

        bi, ci = np.nonzero(near)
        if len(bi):
            rn = geo_near.point[ci] - x[bi][:, None, :]
            Gn, dGn = kernels_unchecked(rn, geo_near.normal[ci])
            np.add.at(D_rows, (bi[:, None], cells[ci]), np.einsum('pq,pql->pl', Gn, wsh_near[ci]))
            np.add.at(N_rows, (bi[:, None], cells[ci]), np.einsum('pq,pql->pl', dGn, wsh_near[ci]))

        D[rows] = D_rows
        N[rows] = N_rows
        return len(bi)

    starts = range(0, n, row_block)
    n_threads = resolve_threads(threads)
    if n_threads > 1 and n > row_block:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            n_near = sum(pool.map(assemble_rows, starts))
    else:
        n_near = sum(assemble_rows(s) for s in starts)

    for k in range(4):
        sel = np.flatnonzero(s_vertex == k)
        if not len(sel):
            continue
        rows = s_rows[sel]
        pcells = s_cells[sel]
        pts, w = quad.singular_points(k)
        geo_s = map_points(vertices[pcells], pts)
        wsh_s = geo_s.jacobian[:, :, None] * w[None, :, None] * shape_table(pts)[None]
        rs = geo_s.point - positions[rows][:, None, :]
        Gs, dGs = kernels_unchecked(rs, geo_s.normal)
        np.add.at(D, (rows[:, None], cells[pcells]), np.einsum('pq,pql->pl', Gs, wsh_s))
        np.add.at(N, (rows[:, None], cells[pcells]), np.einsum('pq,pql->pl', dGs, wsh_s))

    alpha = compute_alpha_rbm(N)
    logger.debug(f"BEM assembliert: {n} DOFs, {nc} Panels, {len(s_rows)} singuläre, "
                 f"{n_near} nahe Paare, {n_threads} Threads")

    return BemSystem(alpha, N, D)
