"""
Zustandsvektor y = [x, φ, φn] und Rollen der DOFs im DAE-System
"""

import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple

import numpy as np

from ..ale.waterline import Wireframe, build_wireframe
from ..hull.domain import Domain
from ..mesh.dofs import DofHandler
from ..mesh.surface import Region

logger = logging.getLogger(__name__)


class Role(IntEnum):
    """Bestimmt, welche Gleichungen die Lage eines DOFs festlegen"""

    FREE_SURFACE = 0     # x, y aus der Glättung, z = η (SUPG)
    WATERLINE = 1        # ẋ = w_x, y auf dem Rumpf, z = η
    SURFACE_EDGE = 2     # ẋ = w_x, ẏ = w_y, z = η (Rand an den Wänden)
    FOLLOWER = 3         # Doppelknoten eines bewegten Knotens, x = x(Γʷ-DOF)
    STATIC = 4           # feste Kanten, x = x̃
    HULL = 5             # x = P_h g
    FIXED_SURFACE = 6    # Boden und Wände, x = g
    HANGING = 7          # x = Σ w x_m


@dataclass(frozen=True)
class StateLayout:
    """DOF-major: 3·dof + k für Lagen, danach φ und φn"""

    n_dofs: int

    @property
    def size(self) -> int:
        return 5 * self.n_dofs

    @property
    def x_slice(self) -> slice:
        return slice(0, 3 * self.n_dofs)

    @property
    def phi_slice(self) -> slice:
        return slice(3 * self.n_dofs, 4 * self.n_dofs)

    @property
    def phin_slice(self) -> slice:
        return slice(4 * self.n_dofs, 5 * self.n_dofs)

    def unpack(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.size,):
            raise ValueError(f"Zustand hat Länge {y.shape}, erwartet {self.size}")
        return (y[self.x_slice].reshape(self.n_dofs, 3), y[self.phi_slice], y[self.phin_slice])

    def pack(self, x: np.ndarray, phi: np.ndarray, phin: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(x, dtype=float).reshape(-1),
                               np.asarray(phi, dtype=float), np.asarray(phin, dtype=float)])

    def x_index(self, dofs, component) -> np.ndarray:
        return 3 * np.asarray(dofs, dtype=np.int64) + component

    def phi_index(self, dofs) -> np.ndarray:
        return 3 * self.n_dofs + np.asarray(dofs, dtype=np.int64)

    def phin_index(self, dofs) -> np.ndarray:
        return 4 * self.n_dofs + np.asarray(dofs, dtype=np.int64)


@dataclass
class DofRoles:
    """
    Rollen, kanonische Lage und Nachbarnormalen je DOF

    canonical[i]: DOF, dessen Lage die Geometrie des Knotens bestimmt
    (der Γʷ-DOF, sonst der mit der kleinsten Fläche).
    others[i]: bis zu zwei weitere DOFs desselben Knotens (−1 = keiner),
    nur für WATERLINE/SURFACE_EDGE belegt.
    """

    role: np.ndarray
    canonical: np.ndarray
    others: np.ndarray
    side: np.ndarray
    wireframe: Wireframe

    def of(self, role: Role) -> np.ndarray:
        return np.flatnonzero(self.role == role)

    @property
    def moving(self) -> np.ndarray:
        return np.flatnonzero((self.role == Role.WATERLINE) | (self.role == Role.SURFACE_EDGE))

    @property
    def dirichlet(self) -> np.ndarray:
        """Drahtgitter-DOFs: Randwerte der Glättung"""
        return np.isin(self.role, (Role.WATERLINE, Role.SURFACE_EDGE, Role.FOLLOWER, Role.STATIC))

    def differential(self, layout: StateLayout, free_surface: np.ndarray) -> np.ndarray:
        """z und φ auf Γʷ sowie die horizontalen Drahtgitter-Gleichungen"""
        flags = np.zeros(layout.size, dtype=bool)
        fs = np.flatnonzero(free_surface & (self.role != Role.HANGING))
        flags[layout.x_index(fs, 2)] = True
        flags[layout.phi_index(fs)] = True
        moving = self.moving
        flags[layout.x_index(moving, 0)] = True
        edge = self.of(Role.SURFACE_EDGE)
        flags[layout.x_index(edge, 1)] = True
        return flags


def classify_dofs(domain: Domain, dofs: DofHandler) -> DofRoles:
    """
    Weist jedem DOF seine Rolle zu

    Hängende DOFs haben Vorrang; Drahtgitterknoten werden nach ihrer
    Kurvenfamilie behandelt, innere DOFs nach ihrer Region.
    """
    mesh = domain.mesh
    n = dofs.n_dofs
    region = dofs.dof_region
    wireframe = build_wireframe(mesh)
    curve = wireframe.curve_of()

    role = np.full(n, -1, dtype=np.int64)
    role[region == Region.FREE_SURFACE] = Role.FREE_SURFACE
    role[region == Region.HULL] = Role.HULL
    role[(region == Region.BOTTOM) | (region == Region.FAR_FIELD)] = Role.FIXED_SURFACE

    canonical = np.arange(n, dtype=np.int64)
    others = np.full((n, 2), -1, dtype=np.int64)
    for node, dup in dofs.duplicates.items():
        dup = list(dup)
        fs = [d for d in dup if region[d] == Region.FREE_SURFACE]
        lead = fs[0] if fs else min(dup, key=lambda d: (dofs.dof_patch[d], d))
        canonical[dup] = lead

        family = curve.get(node, 'static')
        if family == 'static' or not fs:
            role[dup] = Role.STATIC
            continue
        role[dup] = Role.FOLLOWER
        role[lead] = Role.WATERLINE if family == 'waterline' else Role.SURFACE_EDGE
        rest = [d for d in dup if d != lead]
        others[lead, :len(rest)] = rest

    role[dofs.constraints.constrained] = Role.HANGING

    side = domain.side_of_patch(dofs.dof_patch)
    waterline = np.flatnonzero(role == Role.WATERLINE)
    for d in waterline:
        hull_dofs = [o for o in others[d] if o >= 0 and region[o] == Region.HULL]
        if hull_dofs:
            side[d] = side[hull_dofs[0]]

    logger.debug("DOF-Rollen: " + ", ".join(f"{r.name.lower()}={int(np.sum(role == r))}"
                                             for r in Role))
    return DofRoles(role, canonical, others, side, wireframe)
