"""
Markierung und Ausführung von Verfeinerung/Vergröberung (Quadtree je Panel)
"""

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Dict, List, Optional, Set, Tuple

import numpy as np

from .kelly import CellError
from ..mesh.surface import Family, ReferenceMesh, Region

logger = logging.getLogger(__name__)

# Punkt → Punkt auf der Referenzfläche (z. B. Rumpfprojektion) je Fläche
PlacementFn = Callable[[np.ndarray, int], np.ndarray]


class Flag(IntEnum):
    KEEP = 0
    REFINE = 1
    COARSEN = 2


@dataclass
class RefinementFlags:
    flags: np.ndarray
    refine_fraction: float
    coarsen_fraction: float

    @property
    def n_refine(self) -> int:
        return int(np.sum(self.flags == Flag.REFINE))

    @property
    def n_coarsen(self) -> int:
        return int(np.sum(self.flags == Flag.COARSEN))


def flag_fixed_fraction(errors: CellError, refine_fraction: float,
                        coarsen_fraction: float) -> RefinementFlags:
    """
    Markiert die ⌈f_r·n⌉ größten Fehler zur Verfeinerung und die ⌈f_c·n⌉ kleinsten zur Vergröberung

    Gleichstände entscheidet der kleinere Zellindex. Eine Zelle in beiden
    Mengen wird verfeinert.

    Raises:
        ValueError: Anteile außerhalb von [0, 1] oder Summe > 1
    """
    if refine_fraction < 0 or coarsen_fraction < 0 or refine_fraction + coarsen_fraction > 1:
        raise ValueError(f"Ungültige Anteile f_r={refine_fraction}, f_c={coarsen_fraction}")

    tau = np.asarray(errors.tau, dtype=float)
    n = len(tau)
    index = np.arange(n)
    flags = np.full(n, Flag.KEEP, dtype=np.int64)

    n_coarsen = math.ceil(coarsen_fraction * n - 1e-12) if coarsen_fraction > 0 else 0
    n_refine = math.ceil(refine_fraction * n - 1e-12) if refine_fraction > 0 else 0

    ascending = np.lexsort((index, tau))
    flags[ascending[:n_coarsen]] = Flag.COARSEN
    descending = np.lexsort((index, -tau))
    flags[descending[:n_refine]] = Flag.REFINE

    return RefinementFlags(flags, refine_fraction, coarsen_fraction)


def limit_flags(flags: RefinementFlags, errors: CellError, h_min: float,
                n_dofs: int, max_dofs: int) -> RefinementFlags:
    """
    Verwirft Verfeinerungen unter der Mindestzellgröße und über der DOF-Grenze

    Pro verfeinerter Zelle werden etwa drei neue DOFs angenommen; die
    Zellen mit den kleinsten Fehlern fallen zuerst weg.
    """
    result = flags.flags.copy()
    too_small = (result == Flag.REFINE) & (0.5 * errors.h < h_min)
    if np.any(too_small):
        logger.info(f"{int(np.sum(too_small))} Verfeinerungen unter h_min={h_min:.4g} m verworfen")
        result[too_small] = Flag.KEEP

    budget = max(0, (max_dofs - n_dofs) // 3)
    refine = np.flatnonzero(result == Flag.REFINE)
    if len(refine) > budget:
        order = refine[np.lexsort((refine, -errors.tau[refine]))]
        result[order[budget:]] = Flag.KEEP
        logger.info(f"DOF-Grenze {max_dofs}: {len(refine) - budget} Verfeinerungen verworfen")
    return RefinementFlags(result, flags.refine_fraction, flags.coarsen_fraction)


@dataclass
class AdaptReport:
    refined: int = 0
    coarsened: int = 0
    closure: int = 0
    blocked: int = 0
    new_nodes: List[int] = field(default_factory=list)


def _edge_key(a: int, b: int) -> Tuple[int, int]:
    return (int(min(a, b)), int(max(a, b)))


class _MeshEditor:
    """Arbeitskopie eines Netzes während eines Adaptionsschritts"""

    def __init__(self, mesh: ReferenceMesh, placement: Optional[PlacementFn], edge_owners):
        self.mesh = mesh.copy()
        self.placement = placement
        self.edge_owners = edge_owners
        self.nodes: List[np.ndarray] = list(self.mesh.nodes)
        self.new_nodes: List[int] = []

    def _place(self, point: np.ndarray, patch: int) -> np.ndarray:
        if self.placement is None:
            return point
        return self.placement(point, patch)

    def _add_node(self, point: np.ndarray, parents: Tuple[int, ...], patch: int) -> int:
        node = len(self.nodes)
        self.nodes.append(self._place(point, patch))
        self.mesh.node_parents[node] = tuple(int(p) for p in parents)
        self.new_nodes.append(node)
        return node

    def midpoint(self, a: int, b: int, patch: int) -> int:
        key = _edge_key(a, b)
        node = self.mesh.edge_midpoints.get(key)
        if node is None:
            # Kanten am Rumpf werden immer auf den Rumpf gesetzt
            owners = [int(self.mesh.patches[c]) for c, _ in self.edge_owners.get(key, [])]
            hull = [p for p in owners if self.mesh.patch_regions.get(p) == Region.HULL]
            node = self._add_node(0.5 * (self.nodes[a] + self.nodes[b]), key,
                                  hull[0] if hull else patch)
            self.mesh.edge_midpoints[key] = node
        return node

    def refine(self, cell: np.ndarray, patch: int, level: int, family: int
               ) -> Tuple[List[Tuple[int, int, int, int]], int]:
        c00, c10, c01, c11 = (int(c) for c in cell)
        eb = self.midpoint(c00, c10, patch)
        er = self.midpoint(c10, c11, patch)
        et = self.midpoint(c01, c11, patch)
        el = self.midpoint(c00, c01, patch)
        center = 0.25 * (self.nodes[c00] + self.nodes[c10] + self.nodes[c01] + self.nodes[c11])
        ctr = self._add_node(center, (c00, c10, c01, c11), patch)

        family_id = max(self.mesh.family_table, default=-1) + 1
        self.mesh.family_table[family_id] = Family((c00, c10, c01, c11), patch, level,
                                                   family, ctr)
        children = [(c00, eb, el, ctr), (eb, c10, ctr, er), (el, ctr, c01, et),
                    (ctr, er, et, c11)]
        return children, family_id


def _neighbour_levels(mesh: ReferenceMesh, edge_owners) -> Dict[int, Set[int]]:
    """Zelle → Nachbarzellen über gemeinsame Kanten oder Halbkanten"""
    neighbours: Dict[int, Set[int]] = {c: set() for c in range(mesh.n_cells)}
    for edge, owners in edge_owners.items():
        cells = [c for c, _ in owners]
        for c in cells:
            neighbours[c].update(o for o in cells if o != c)
    for edge, m in mesh.edge_midpoints.items():
        coarse = [c for c, _ in edge_owners.get(edge, [])]
        if not coarse:
            continue
        fine = [c for half in (_edge_key(edge[0], m), _edge_key(m, edge[1]))
                for c, _ in edge_owners.get(half, [])]
        for c in coarse:
            neighbours[c].update(fine)
        for f in fine:
            neighbours[f].update(coarse)
    return neighbours


def _closure(mesh: ReferenceMesh, flags: np.ndarray, neighbours) -> int:
    """Verfeinert gröbere Nachbarn, bis die Ein-Level-Regel nach dem Schritt gilt"""
    added = 0
    changed = True
    while changed:
        changed = False
        for c in np.flatnonzero(flags == Flag.REFINE):
            target = mesh.levels[c] + 1
            for nb in neighbours[c]:
                if flags[nb] != Flag.REFINE and mesh.levels[nb] + 1 < target:
                    flags[nb] = Flag.REFINE
                    added += 1
                    changed = True
    return added


def _coarsenable_families(mesh: ReferenceMesh, flags: np.ndarray, neighbours,
                          report: AdaptReport) -> Dict[int, List[int]]:
    """Familien, deren vier Kinder aktiv und markiert sind und die Ein-Level-Regel erlauben"""
    children: Dict[int, List[int]] = {}
    for c in range(mesh.n_cells):
        if mesh.families[c] >= 0:
            children.setdefault(int(mesh.families[c]), []).append(c)

    result = {}
    for family, members in sorted(children.items()):
        if len(members) != 4 or not all(flags[c] == Flag.COARSEN for c in members):
            continue
        child_level = int(mesh.levels[members[0]])
        after = {nb: mesh.levels[nb] + (1 if flags[nb] == Flag.REFINE else 0)
                 for c in members for nb in neighbours[c] if nb not in members}
        if any(level > child_level for level in after.values()):
            report.blocked += 1
            logger.debug(f"Vergröberung von Familie {family} blockiert (Ein-Level-Regel)")
            continue
        result[family] = sorted(members)
    return result


def execute_refinement(mesh: ReferenceMesh, flags: RefinementFlags,
                       placement: Optional[PlacementFn] = None) -> Tuple[ReferenceMesh, AdaptReport]:
    """
    Führt einen Adaptionsschritt aus

    Verfeinerung teilt ein Panel in vier Kinder; neue Knoten werden über
    placement auf die Referenzfläche gesetzt (Rumpf projiziert, sonst
    bilineare Mittelpunkte). Vergröberung stellt die Elternzelle wieder her,
    wenn alle vier Kinder markiert sind und die Ein-Level-Regel es zulässt.

    Args:
        mesh: aktuelles Referenznetz (unverändert)
        flags: Markierungen je Zelle
        placement: Abbildung (Punkt, Fläche) → Punkt auf der Fläche

    Returns:
        (neues Netz mit aktualisierten hängenden Knoten, Bericht)
    """
    report = AdaptReport()
    marks = np.asarray(flags.flags, dtype=np.int64).copy()
    if len(marks) != mesh.n_cells:
        raise ValueError("Markierungen passen nicht zur Zellenzahl")

    edge_owners = mesh.edge_map()
    neighbours = _neighbour_levels(mesh, edge_owners)
    report.closure = _closure(mesh, marks, neighbours)
    coarsen = _coarsenable_families(mesh, marks, neighbours, report)
    first_child = {members[0]: family for family, members in coarsen.items()}
    dropped = {c for members in coarsen.values() for c in members}

    editor = _MeshEditor(mesh, placement, edge_owners)
    cells, patches, levels, families = [], [], [], []

    for c in range(mesh.n_cells):
        patch = int(mesh.patches[c])
        if c in first_child:
            parent = mesh.family_table[first_child[c]]
            cells.append(parent.corners)
            patches.append(parent.patch)
            levels.append(parent.level)
            families.append(parent.family)
            report.coarsened += 1
            continue
        if c in dropped:
            continue
        if marks[c] == Flag.REFINE:
            children, family_id = editor.refine(mesh.cells[c], patch, int(mesh.levels[c]),
                                                int(mesh.families[c]))
            cells.extend(children)
            patches.extend([patch] * 4)
            levels.extend([int(mesh.levels[c]) + 1] * 4)
            families.extend([family_id] * 4)
            report.refined += 1
            continue
        cells.append(tuple(int(n) for n in mesh.cells[c]))
        patches.append(patch)
        levels.append(int(mesh.levels[c]))
        families.append(int(mesh.families[c]))

    for family in coarsen:
        editor.mesh.family_table.pop(family, None)

    new_mesh = editor.mesh
    new_mesh.nodes = np.array(editor.nodes)
    new_mesh.cells = np.array(cells, dtype=np.int64)
    new_mesh.patches = np.array(patches, dtype=np.int64)
    new_mesh.levels = np.array(levels, dtype=np.int64)
    new_mesh.families = np.array(families, dtype=np.int64)
    new_mesh.update_hanging()
    new_mesh.validate()
    report.new_nodes = editor.new_nodes

    violations = one_level_violations(new_mesh)
    if violations:
        logger.warning(f"Ein-Level-Regel an {len(violations)} Kanten verletzt")

    logger.info(f"Adaption: {report.refined} verfeinert ({report.closure} durch Abschluss), "
                f"{report.coarsened} vergröbert, {report.blocked} blockiert → "
                f"{new_mesh.n_cells} Panels")
    return new_mesh, report


def one_level_violations(mesh: ReferenceMesh) -> List[Tuple[int, int]]:
    """Benachbarte Zellpaare mit Levelunterschied > 1"""
    neighbours = _neighbour_levels(mesh, mesh.edge_map())
    bad = []
    for c, nbs in neighbours.items():
        for nb in nbs:
            if c < nb and abs(int(mesh.levels[c]) - int(mesh.levels[nb])) > 1:
                bad.append((c, nb))
    return bad


def hull_placement(hull, patch_sides: Dict[int, int], patch_regions: Dict[int, Region],
                   tol: float = 1e-10, maxiter: int = 50) -> PlacementFn:
    """Neue Rumpfknoten auf die Wigley-Fläche, übrige bilinear"""
    from ..hull.wigley import project_to_hull

    def place(point: np.ndarray, patch: int) -> np.ndarray:
        if patch_regions.get(patch) != Region.HULL:
            return np.asarray(point, dtype=float)
        return project_to_hull(np.asarray(point, dtype=float)[None], patch_sides[patch], hull,
                               tol=tol, maxiter=maxiter)[0]

    return place
