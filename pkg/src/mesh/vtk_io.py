"""
Netz-Ein-/Ausgabe
Legacy-ASCII-VTK über meshio (UNSTRUCTURED_GRID, Zelltyp 9) und Klartext-Listing
"""

import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import meshio
import numpy as np

from .surface import ReferenceMesh, Region
from ..utils.errors import MeshError

logger = logging.getLogger(__name__)

# Tensor-Reihenfolge (0,0),(1,0),(0,1),(1,1) ↔ VTK-Umlaufreihenfolge
TO_VTK = np.array([0, 1, 3, 2])
FROM_VTK = np.array([0, 1, 3, 2])

LISTING_HEADER = '# wavebem mesh listing 1'


def _fmt(value: float) -> str:
    return f"{value:.17g}"


@dataclass
class VtkData:
    """Inhalt einer gelesenen VTK-Datei"""

    positions: np.ndarray
    cells: np.ndarray
    point_data: Dict[str, np.ndarray] = field(default_factory=dict)
    cell_data: Dict[str, np.ndarray] = field(default_factory=dict)


def _checked(kind: str, data: Optional[Dict[str, np.ndarray]], count: int) -> Dict[str, np.ndarray]:
    checked = {}
    for name, values in (data or {}).items():
        values = np.asarray(values)
        if values.shape != (count,):
            msg = f"{kind}['{name}'] hat Form {values.shape}, erwartet ({count},)"
            logger.error(f"write_vtk: {msg}")
            raise ValueError(msg)
        checked[name] = values.astype(np.int64 if np.issubdtype(values.dtype, np.integer)
                                      else float)
    return checked


def write_vtk(path, positions: np.ndarray, cells: np.ndarray,
              point_data: Optional[Dict[str, np.ndarray]] = None,
              cell_data: Optional[Dict[str, np.ndarray]] = None):
    """
    Schreibt ein Viereck-Netz als Legacy-ASCII-VTK

    Args:
        path: Zieldatei
        positions: Punkte (n, 3)
        cells: Zellen (nc, 4) in Tensor-Reihenfolge
        point_data: Skalarfelder je Punkt
        cell_data: Skalarfelder je Zelle (Ganzzahl-Arrays bleiben ganzzahlig)

    Raises:
        ValueError: Feldlänge passt nicht zu Punkten bzw. Zellen
    """
    positions = np.asarray(positions, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    points = _checked('point_data', point_data, len(positions))
    cell_fields = _checked('cell_data', cell_data, len(cells))

    mesh = meshio.Mesh(points=positions, cells=[('quad', cells[:, TO_VTK])],
                       point_data=points,
                       cell_data={name: [values] for name, values in cell_fields.items()})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meshio.write(path, mesh, file_format='vtk', binary=False)
    logger.debug(f"VTK geschrieben: {path} ({len(positions)} Punkte, {len(cells)} Zellen)")


def read_vtk(path) -> VtkData:
    """
    Liest eine Viereck-VTK-Datei

    Raises:
        MeshError: Datei unlesbar oder nicht nur aus Vierecken
    """
    try:
        mesh = meshio.read(path, file_format='vtk')
    except (meshio.ReadError, ValueError, KeyError) as e:
        raise MeshError(f"{path} ist keine lesbare VTK-Datei: {e}") from e

    kinds = [block.type for block in mesh.cells]
    if kinds != ['quad']:
        raise MeshError(f"{path}: nur ein Block aus Vierecken wird unterstützt (gefunden: {kinds})")
    cells = np.asarray(mesh.cells[0].data, dtype=np.int64)[:, FROM_VTK]
    return VtkData(
        positions=np.asarray(mesh.points, dtype=float),
        cells=cells,
        point_data={name: np.asarray(values) for name, values in mesh.point_data.items()},
        cell_data={name: np.asarray(blocks[0]) for name, blocks in mesh.cell_data.items()},
    )


def write_listing(path, mesh: ReferenceMesh):
    """Klartext-Listing von Knoten, Panels und Regionen"""
    lines = [LISTING_HEADER, f'nodes {mesh.n_nodes}']
    lines.extend(' '.join(_fmt(c) for c in p) for p in mesh.nodes)
    lines.append(f'panels {mesh.n_cells}')
    lines.extend(f"{' '.join(str(int(i)) for i in cell)} {int(patch)} {int(level)}"
                 for cell, patch, level in zip(mesh.cells, mesh.patches, mesh.levels))
    lines.append(f'regions {len(mesh.patch_regions)}')
    lines.extend(f'{patch} {region.label}' for patch, region in sorted(mesh.patch_regions.items()))

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')


def read_listing(path) -> ReferenceMesh:
    """Liest ein Listing (ohne Verfeinerungshistorie)"""
    lines = Path(path).read_text(encoding='utf-8').splitlines()
    if not lines or lines[0] != LISTING_HEADER:
        raise MeshError(f"{path} ist kein Netz-Listing")

    pos = 1
    n_nodes = int(lines[pos].split()[1])
    nodes = np.array([l.split() for l in lines[pos + 1:pos + 1 + n_nodes]], dtype=float)
    pos += 1 + n_nodes
    n_cells = int(lines[pos].split()[1])
    panel_rows = np.array([l.split() for l in lines[pos + 1:pos + 1 + n_cells]],
                          dtype=np.int64).reshape(n_cells, 6)
    pos += 1 + n_cells
    n_regions = int(lines[pos].split()[1])
    regions = {}
    for line in lines[pos + 1:pos + 1 + n_regions]:
        patch, label = line.split()
        regions[int(patch)] = Region[label.upper()]

    return ReferenceMesh(nodes.reshape(-1, 3), panel_rows[:, :4], panel_rows[:, 4], regions,
                         levels=panel_rows[:, 5])


def main(argv=None) -> int:
    """Kommandozeile: info <datei>"""
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2 or argv[0] != 'info':
        print("Verwendung: python -m src.mesh.vtk_io info <datei.vtk>")
        return 2

    try:
        data = read_vtk(argv[1])
    except (OSError, MeshError) as e:
        print(f"✗ {e}")
        return 1

    print(f"Datei:  {argv[1]}")
    print(f"Punkte: {len(data.positions)}")
    print(f"Zellen: {len(data.cells)}")
    for name, values in data.point_data.items():
        print(f"  POINT {name}: [{values.min():.6g}, {values.max():.6g}]")
    for name, values in data.cell_data.items():
        print(f"  CELL  {name}: [{values.min():.6g}, {values.max():.6g}]")
    return 0


if __name__ == '__main__':
    sys.exit(main())
