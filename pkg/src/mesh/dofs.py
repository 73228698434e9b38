"""
DOF-Verwaltung für Oberflächennetze
Doppelknoten an Flächenkanten und Zwangsbedingungen hängender Knoten
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from .shapes import REFERENCE_NODES
from .surface import ReferenceMesh, map_points
from ..utils.errors import MeshError

logger = logging.getLogger(__name__)

# Maximal erlaubte Flächen je Knoten (Beckenecken: drei)
MAX_PATCHES_PER_NODE = 3


class HangingConstraints:
    """
    Zwangsbedingungen y_c = Σ w_m y_m für hängende DOFs

    Ketten (Master, die selbst hängen) werden beim Aufbau aufgelöst,
    sodass alle Master frei sind.
    """

    def __init__(self, entries: Mapping[int, Tuple[Sequence[int], Sequence[float]]] = None):
        raw = {int(c): (tuple(int(m) for m in masters), tuple(float(w) for w in weights))
               for c, (masters, weights) in (entries or {}).items()}
        self._entries = self._resolve(raw)

    @staticmethod
    def _resolve(raw):
        resolved: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

        def expand(node, stack):
            if node in resolved:
                return resolved[node]
            if node in stack:
                raise MeshError(f"Zyklische Zwangsbedingung bei Knoten {node}")
            masters, weights = raw[node]
            acc: Dict[int, float] = {}
            for m, w in zip(masters, weights):
                if m in raw:
                    sub_m, sub_w = expand(m, stack | {node})
                    for sm, sw in zip(sub_m, sub_w):
                        acc[int(sm)] = acc.get(int(sm), 0.0) + w * sw
                else:
                    acc[m] = acc.get(m, 0.0) + w
            keys = sorted(acc)
            result = (np.array(keys, dtype=np.int64), np.array([acc[k] for k in keys]))
            resolved[node] = result
            return result

        for node in sorted(raw):
            expand(node, frozenset())
        return resolved

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, dof) -> bool:
        return int(dof) in self._entries

    def items(self) -> Iterator[Tuple[int, Tuple[np.ndarray, np.ndarray]]]:
        for c in sorted(self._entries):
            yield c, self._entries[c]

    @property
    def constrained(self) -> np.ndarray:
        return np.array(sorted(self._entries), dtype=np.int64)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Setzt hängende Werte auf die Interpolation ihrer Master"""
        out = np.array(values, dtype=float, copy=True)
        for c, (masters, weights) in self.items():
            out[c] = np.tensordot(weights, out[masters], axes=1)
        return out

    def condense(self, rows: np.ndarray) -> np.ndarray:
        """Addiert Galerkin-Zeilen hängender DOFs gewichtet auf ihre Master"""
        out = np.array(rows, dtype=float, copy=True)
        for c, (masters, weights) in self.items():
            contribution = np.multiply.outer(weights, out[c]) if out.ndim > 1 else weights * out[c]
            np.add.at(out, masters, contribution)
            out[c] = 0.0
        return out

    def matrix(self, n: int) -> sparse.csr_matrix:
        """Einbettung C (n × n): freie DOFs auf sich, hängende auf ihre Master"""
        rows, cols, vals = [], [], []
        constrained = set(self._entries)
        for i in range(n):
            if i not in constrained:
                rows.append(i)
                cols.append(i)
                vals.append(1.0)
        for c, (masters, weights) in self.items():
            rows.extend([c] * len(masters))
            cols.extend(masters.tolist())
            vals.extend(weights.tolist())
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def constrain_hanging(values: np.ndarray,
                      constraints: Union[HangingConstraints, Mapping]) -> np.ndarray:
    """
    Erzwingt Stetigkeit an hängenden Knoten

    Args:
        values: Knoten- oder DOF-Feld (n,) oder (n, k)
        constraints: HangingConstraints oder Mapping c → (Master, Gewichte)

    Returns:
        Feld mit interpolierten hängenden Werten
    """
    if not isinstance(constraints, HangingConstraints):
        constraints = HangingConstraints(constraints)
    return constraints.apply(values)


def vertex_normals(cell_dofs: np.ndarray, positions: np.ndarray, n_dofs: int) -> np.ndarray:
    """Mittel der Panelnormalen an den Ecken jedes DOFs (normiert)"""
    geometry = map_points(positions[cell_dofs], REFERENCE_NODES)
    acc = np.zeros((n_dofs, 3))
    np.add.at(acc, cell_dofs.ravel(), geometry.normal.reshape(-1, 3))
    norm = np.linalg.norm(acc, axis=1)
    return acc / np.where(norm > 0, norm, 1.0)[:, None]


@dataclass
class DofHandler:
    """
    Globale DOF-Nummerierung, ein DOF je (Knoten, Fläche)

    Die Vektor-DOFs (Lagen) sind DOF-major nummeriert: 3·dof + Komponente.
    """

    dof_node: np.ndarray
    dof_patch: np.ndarray
    dof_region: np.ndarray
    cell_dofs: np.ndarray
    normals: np.ndarray
    constraints: HangingConstraints = field(default_factory=HangingConstraints)

    def __post_init__(self):
        self._index = {(int(n), int(p)): i
                       for i, (n, p) in enumerate(zip(self.dof_node, self.dof_patch))}
        node_dofs: Dict[int, list] = {}
        for i, n in enumerate(self.dof_node):
            node_dofs.setdefault(int(n), []).append(i)
        self.node_dofs = {n: tuple(d) for n, d in node_dofs.items()}

    @property
    def n_dofs(self) -> int:
        return len(self.dof_node)

    @property
    def n_vector_dofs(self) -> int:
        return 3 * self.n_dofs

    @property
    def duplicates(self) -> Dict[int, Tuple[int, ...]]:
        """Knoten → DOFs für Knoten mit mehr als einem DOF"""
        return {n: d for n, d in self.node_dofs.items() if len(d) > 1}

    def dof_of(self, node: int, patch: int) -> Optional[int]:
        return self._index.get((int(node), int(patch)))

    def dofs_in_region(self, region) -> np.ndarray:
        return np.flatnonzero(self.dof_region == int(region))

    def wireframe_mask(self) -> np.ndarray:
        """DOFs auf Kanten zwischen Flächen"""
        counts = np.bincount(self.dof_node, minlength=self.dof_node.max() + 1)
        return counts[self.dof_node] > 1

    def free_mask(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.constraints.constrained] = False
        return mask

    def update_normals(self, positions: np.ndarray) -> np.ndarray:
        self.normals = vertex_normals(self.cell_dofs, positions, self.n_dofs)
        return self.normals


def duplicate_edge_nodes(mesh: ReferenceMesh) -> DofHandler:
    """
    Erzeugt die DOF-Nummerierung mit Doppelknoten

    Jeder Knoten erhält einen DOF je angrenzender Fläche. Die DOFs sind
    nach (Knoten, Fläche) sortiert und damit deterministisch.

    Raises:
        MeshError: Knoten grenzt an mehr als drei Flächen
    """
    n_patches = int(mesh.patches.max()) + 1
    keys = mesh.cells * n_patches + mesh.patches[:, None]
    unique_keys, inverse = np.unique(keys.ravel(), return_inverse=True)
    cell_dofs = inverse.reshape(-1, 4).astype(np.int64)

    dof_node = (unique_keys // n_patches).astype(np.int64)
    dof_patch = (unique_keys % n_patches).astype(np.int64)
    region_lookup = np.zeros(n_patches, dtype=np.int64)
    for patch, region in mesh.patch_regions.items():
        if patch < n_patches:
            region_lookup[patch] = int(region)
    dof_region = region_lookup[dof_patch]

    counts = np.bincount(dof_node)
    too_many = np.flatnonzero(counts > MAX_PATCHES_PER_NODE)
    if len(too_many):
        raise MeshError(f"Knoten {too_many[:5].tolist()} grenzen an mehr als "
                        f"{MAX_PATCHES_PER_NODE} Flächen")
    n_triple = int(np.sum(counts == 3))
    if n_triple:
        logger.debug(f"{n_triple} Knoten mit dreifacher Duplizierung")

    positions = mesh.nodes[dof_node]
    normals = vertex_normals(cell_dofs, positions, len(dof_node))

    dofs = DofHandler(dof_node, dof_patch, dof_region, cell_dofs, normals)

    entries = {}
    for node, (masters, weights) in mesh.hanging.items():
        for d in dofs.node_dofs.get(node, ()):
            patch = dof_patch[d]
            master_dofs = [dofs.dof_of(m, patch) for m in masters]
            if any(m is None for m in master_dofs):
                raise MeshError(f"Master von Knoten {node} fehlen auf Fläche {patch}")
            entries[d] = (master_dofs, weights)
    dofs.constraints = HangingConstraints(entries)

    logger.debug(f"DOFs: {dofs.n_dofs} ({len(dofs.duplicates)} Doppelknoten, "
                 f"{len(dofs.constraints)} hängend)")
    return dofs
