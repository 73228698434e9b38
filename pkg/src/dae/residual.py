"""
Semidiskretes Schiffswellenproblem als implizite DAE F(t, y, ẏ) = 0

Zeilen je DOF:
  Γʷ:        φ- und z-Zeile SUPG-projiziert, φn-Zeile Randintegralgleichung
  sonst:     φ-Zeile Randintegralgleichung, φn-Zeile Neumann-Daten
  Lagen:     Glättung/Projektion, Drahtgitter-Kinematik, feste Kanten
  hängend:   y_c − Σ w y_m (Galerkin-Zeilen vorher auf die Master kondensiert)
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, splu

from .bdf import Linearization
from .layout import DofRoles, Role, StateLayout, classify_dofs
from ..ale.projection import ProjectionOps
from ..ale.smoothing import build_smoothing_system
from ..ale.waterline import waterline_velocity
from ..bem.assembly import BemSystem, assemble_system
from ..bem.quadrature import QuadratureRule
from ..freesurface.conditions import (beach_mu, eta_gradient, supg_direction, total_velocity,
                                      v_eta, v_phi)
from ..freesurface.pressure import drag_coefficient, integrate_hull_force, pressure_bernoulli
from ..freesurface.projection import (SupgProjection, assemble_supg_projection,
                                      energy_absorption_rate)
from ..hull.domain import Domain
from ..hull.scenario import Scenario
from ..mesh.dofs import DofHandler, duplicate_edge_nodes, vertex_normals
from ..mesh.shapes import REFERENCE_NODES
from ..mesh.surface import (CurrentConfiguration, Region, basis_surface_gradients,
                            cell_diameters, quadrature_data)
from ..utils.config import config
from ..utils.errors import ConfigError, DegeneratePanelError, GeometryError, ProjectionError

logger = logging.getLogger(__name__)


@dataclass
class HullForce:
    force: np.ndarray
    wetted_area: float
    drag_coefficient: float


class ShipWaveProblem:
    """
    Gekoppeltes Randelement-/Oberflächen-/ALE-System auf einem Referenznetz

    Nach jeder Netzadaption wird eine neue Instanz aufgebaut.
    """

    def __init__(self, domain: Domain, scenario: Scenario, dofs: Optional[DofHandler] = None):
        self.domain = domain
        self.scenario = scenario
        self.mesh = domain.mesh
        self.dofs = dofs if dofs is not None else duplicate_edge_nodes(self.mesh)
        self.layout = StateLayout(self.dofs.n_dofs)
        self.roles: DofRoles = classify_dofs(domain, self.dofs)
        self.constraints = self.dofs.constraints

        region = self.dofs.dof_region
        self.free_surface = region == Region.FREE_SURFACE
        self.hull_mask = region == Region.HULL
        self.reference = self.mesh.nodes[self.dofs.dof_node]

        cell_region = self.mesh.regions
        self.fs_cells = self.dofs.cell_dofs[cell_region == Region.FREE_SURFACE]
        self.hull_cells = self.dofs.cell_dofs[cell_region == Region.HULL]
        hull_cell_sides = domain.side_of_patch(self.mesh.patches[cell_region == Region.HULL])
        is_hull_cell = cell_region == Region.HULL
        hull = domain.hull

        def curvature(points):
            sides = np.zeros(points.shape[:-1])
            sides[is_hull_cell] = hull_cell_sides[:, None]
            forcing = hull.curvature_forcing(points, np.where(sides == 0, 1.0, sides))
            return np.where(sides[..., None] == 0, 0.0, forcing)

        self.smoothing = build_smoothing_system(self.reference, self.dofs.cell_dofs,
                                                self.roles.dirichlet, forcing=curvature,
                                                constraints=self.constraints)
        self.projection = ProjectionOps.from_config(hull, region, self.roles.side)
        self.quad_rule = QuadratureRule.from_config()
        self.fs_order = int(config.get('supg.quad_order', 3))
        self.jacobian = str(config.get('solver.jacobian', 'frozen_bem'))
        if self.jacobian not in ('frozen_bem', 'full'):
            raise ConfigError(f"Unbekannte Jacobi-Näherung '{self.jacobian}' "
                              f"(erlaubt: frozen_bem, full)")

        self.differential = self.roles.differential(self.layout, self.free_surface)
        atol = np.empty(self.layout.size)
        atol[self.layout.x_slice] = float(config.get('solver.atol_coord', 1e-6))
        atol[self.layout.phi_slice] = float(config.get('solver.atol_phi', 1e-6))
        atol[self.layout.phin_slice] = float(config.get('solver.atol_phi', 1e-6))
        self.atol = atol

        self._bem_cache: Tuple[Optional[np.ndarray], Optional[BemSystem]] = (None, None)
        logger.info(f"DAE-System: {self.dofs.n_dofs} DOFs, {self.layout.size} Unbekannte, "
                    f"{int(np.sum(self.differential))} differentiell")

    # Geometrie

    @property
    def n_dofs(self) -> int:
        return self.dofs.n_dofs

    def geometry(self, x: np.ndarray) -> np.ndarray:
        """Lagen je DOF, Doppelknoten auf ihren kanonischen DOF gezogen"""
        return x[self.roles.canonical]

    def assemble_bem(self, xg: np.ndarray) -> BemSystem:
        last_x, last_system = self._bem_cache
        if last_system is not None and np.array_equal(last_x, xg):
            return last_system
        try:
            system = assemble_system(CurrentConfiguration(xg, self.dofs.cell_dofs),
                                     point_ids=self.dofs.dof_node, quad=self.quad_rule)
        except DegeneratePanelError as e:
            raise GeometryError(f"Entartetes Panel in der aktuellen Konfiguration: {e}") from e
        self._bem_cache = (xg.copy(), system)
        return system

    def smooth(self, x: np.ndarray) -> np.ndarray:
        """Geglättete Hilfsdeformation g aus den Drahtgitterlagen in x"""
        return self.smoothing.solve(x)

    def conform_positions(self, x: np.ndarray) -> np.ndarray:
        """Setzt alle algebraisch bestimmten Lagen aus dem Drahtgitter"""
        roles = self.roles
        x = np.array(x, dtype=float, copy=True)
        static = roles.of(Role.STATIC)
        x[static] = self.reference[static]
        line = roles.of(Role.WATERLINE)
        x[line, 1] = roles.side[line] * self.domain.hull.half_beam(x[line, 0], x[line, 2])
        followers = roles.of(Role.FOLLOWER)
        x[followers] = x[roles.canonical[followers]]
        g = self.smooth(x)

        fs = roles.of(Role.FREE_SURFACE)
        x[fs, :2] = g[fs, :2]
        hull = roles.of(Role.HULL)
        x[hull] = self.projection.project_hull(g[hull], hull)
        fixed = roles.of(Role.FIXED_SURFACE)
        x[fixed] = g[fixed]
        x[followers] = x[roles.canonical[followers]]
        return self.constraints.apply(x)

    def phin_bar(self, t: float, x: np.ndarray) -> np.ndarray:
        """Neumann-Daten: −V∞·n auf dem Rumpf, 0 auf Boden und Wänden"""
        frame = self.scenario.frame(t)
        result = np.zeros(self.n_dofs)
        hull = np.flatnonzero(self.hull_mask)
        if len(hull) and np.any(frame.v_inf):
            n = self.domain.hull.normal(x[hull], self.roles.side[hull])
            result[hull] = -(n @ frame.v_inf)
        return result

    def initial_state(self, t: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        """Ruhewasser auf dem Referenznetz (η = φ = 0), ẏ = 0"""
        x = self.conform_positions(self.reference)
        phi = np.zeros(self.n_dofs)
        phin = np.where(self.free_surface, 0.0, self.phin_bar(t, x))
        return self.layout.pack(x, phi, phin), np.zeros(self.layout.size)

    # Oberflächenterme

    def _free_surface_quadrature(self, xg: np.ndarray):
        try:
            quad = quadrature_data(xg, self.fs_cells, self.fs_order)
        except DegeneratePanelError as e:
            raise GeometryError(f"Freie Oberfläche entartet: {e}") from e
        if np.any(quad.geometry.normal[..., 2] <= 0.0):
            raise GeometryError("Freie Oberfläche verknotet (Normale zeigt nach unten)")
        return quad

    def nodal_surface_gradient(self, xg: np.ndarray, phi: np.ndarray,
                               cells: Optional[np.ndarray] = None) -> np.ndarray:
        """Mittel der Flächengradienten an den Panelecken je DOF (Standard: Γʷ)"""
        cells = self.fs_cells if cells is None else cells
        grads, _ = basis_surface_gradients(xg[cells], REFERENCE_NODES)
        corner = np.einsum('ckld,cl->ckd', grads, phi[cells])
        acc = np.zeros((self.n_dofs, 3))
        count = np.zeros(self.n_dofs)
        np.add.at(acc, cells.ravel(), corner.reshape(-1, 3))
        np.add.at(count, cells.ravel(), 1.0)
        return acc / np.maximum(count, 1.0)[:, None]

    def free_surface_terms(self, t: float, x: np.ndarray, xg: np.ndarray, phi: np.ndarray,
                           phin: np.ndarray, xdot: np.ndarray) -> SupgProjection:
        """Assembliert M, b_φ und b_η der SUPG-Projektion"""
        scenario = self.scenario
        frame = scenario.frame(t)
        quad = self._free_surface_quadrature(xg)

        n = quad.geometry.normal
        points = quad.geometry.point
        grad_s = quad.gradient(phi)
        phin_q = quad.interpolate(phin)
        w = quad.interpolate(xdot)
        v = total_velocity(grad_s, phin_q, n, frame)
        grad_phi = grad_s + phin_q[..., None] * n
        mu = beach_mu(points[..., 0], scenario.beach)

        V_phi = v_phi(grad_phi, phin_q, w, v, points[..., 2], points, frame, mu, scenario.g)
        V_eta = v_eta(eta_gradient(n), w, v)
        h_elem = np.broadcast_to(cell_diameters(xg[self.fs_cells])[:, None], V_phi.shape)
        d = supg_direction(v, w, scenario.supg, h_elem)
        return assemble_supg_projection(quad, d, V_phi, V_eta, self.n_dofs)

    def wireframe_velocity(self, t: float, xg: np.ndarray, phi: np.ndarray,
                           phin: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Knotengeschwindigkeit w der bewegten Drahtgitter-DOFs

        Returns:
            (DOFs, w (k, 3))
        """
        moving = self.roles.moving
        if len(moving) == 0:
            return moving, np.zeros((0, 3))
        normals = vertex_normals(self.dofs.cell_dofs, xg, self.n_dofs)
        grad_s = self.nodal_surface_gradient(xg, phi)[moving]
        n_w = normals[moving]
        v = total_velocity(grad_s, phin[moving], n_w, self.scenario.frame(t))

        others = self.roles.others[moving]
        n_h = normals[others[:, 0]]
        w = np.empty((len(moving), 3))
        single = others[:, 1] < 0
        if np.any(single):
            w[single] = waterline_velocity(v[single], n_w[single], n_h[single])
        if np.any(~single):
            w[~single] = waterline_velocity(v[~single], n_w[~single], n_h[~single],
                                            normals[others[~single, 1]])
        return moving, w

    # Residuum

    def residual(self, t: float, y: np.ndarray, yp: np.ndarray,
                 bem: Optional[BemSystem] = None) -> np.ndarray:
        """
        F(t, y, ẏ)

        Args:
            bem: eingefrorenes Randelementsystem (Jacobi-Näherung);
                None = auf der aktuellen Geometrie assemblieren

        Raises:
            GeometryError: entartete oder verknotete Geometrie
        """
        try:
            return self._residual(t, y, yp, bem)
        except ProjectionError as e:
            raise GeometryError(f"Projektion fehlgeschlagen: {e}") from e

    def _residual(self, t, y, yp, bem):
        layout, roles = self.layout, self.roles
        x, phi, phin = layout.unpack(y)
        xdot, phidot, _ = layout.unpack(yp)
        xg = self.geometry(x)
        fs = self.free_surface

        if bem is None:
            bem = self.assemble_bem(xg)
        r_bem = bem.residual(phi, phin)
        g = self.smooth(x)

        R_x = np.zeros_like(x)
        R_phi = np.zeros(self.n_dofs)
        R_phin = np.zeros(self.n_dofs)

        interior = roles.of(Role.FREE_SURFACE)
        R_x[interior, :2] = x[interior, :2] - g[interior, :2]
        hull = roles.of(Role.HULL)
        R_x[hull] = x[hull] - self.projection.project_hull(g[hull], hull)
        fixed = roles.of(Role.FIXED_SURFACE)
        R_x[fixed] = x[fixed] - g[fixed]
        static = roles.of(Role.STATIC)
        R_x[static] = x[static] - self.reference[static]
        followers = roles.of(Role.FOLLOWER)
        R_x[followers] = x[followers] - x[roles.canonical[followers]]

        moving, w = self.wireframe_velocity(t, xg, phi, phin)
        R_x[moving, 0] = xdot[moving, 0] - w[:, 0]
        edge = roles.role[moving] == Role.SURFACE_EDGE
        R_x[moving[edge], 1] = xdot[moving[edge], 1] - w[edge, 1]
        line = moving[~edge]
        R_x[line, 1] = x[line, 1] - roles.side[line] * self.domain.hull.half_beam(
            x[line, 0], x[line, 2])

        supg = self.free_surface_terms(t, x, xg, phi, phin, xdot)
        r_phi = self.constraints.condense(supg.M @ phidot - supg.b_phi)
        r_eta = self.constraints.condense(supg.M @ xdot[:, 2] - supg.b_eta)
        R_phi[fs] = r_phi[fs]
        R_x[fs, 2] = r_eta[fs]

        R_phin[fs] = r_bem[fs]
        R_phi[~fs] = r_bem[~fs]
        R_phin[~fs] = phin[~fs] - self.phin_bar(t, x)[~fs]

        for c, (masters, weights) in self.constraints.items():
            R_x[c] = x[c] - weights @ x[masters]
            R_phi[c] = phi[c] - weights @ phi[masters]
            R_phin[c] = phin[c] - weights @ phin[masters]

        return layout.pack(R_x, R_phi, R_phin)

    # Jacobi-Näherung

    def linearize(self, t: float, y: np.ndarray, yp: np.ndarray, shift: float) -> Linearization:
        """
        Jacobi-Näherung für einen Schrittversuch

        solver.jacobian = 'frozen_bem': Differenzen des Residuums mit den
        Randelementmatrizen von y; die fehlende Lageableitung von N und D
        wirkt nur über die differentiellen Lagezeilen und damit mit
        Faktor h auf die Newton-Rate. 'full': Differenzen des vollen
        Residuums (Neuassemblierung je GMRES-Produkt).
        """
        x, _, _ = self.layout.unpack(y)
        xg = self.geometry(x)
        try:
            bem = self.assemble_bem(xg)
            preconditioner = self._preconditioner(bem, xg, shift)
        except (DegeneratePanelError, ProjectionError) as e:
            raise GeometryError(str(e)) from e

        if self.jacobian == 'full':
            return Linearization(None, preconditioner)

        def frozen(t_, y_, yp_):
            return self.residual(t_, y_, yp_, bem=bem)

        return Linearization(frozen, preconditioner)

    def _preconditioner(self, bem: BemSystem, xg: np.ndarray, shift: float) -> LinearOperator:
        layout, roles = self.layout, self.roles
        size = layout.size
        active = roles.role != Role.HANGING
        fs = self.free_surface

        diag = np.ones(size)
        moving = roles.moving
        diag[layout.x_index(moving, 0)] = shift
        edge = roles.of(Role.SURFACE_EDGE)
        diag[layout.x_index(edge, 1)] = shift

        bem_dofs = np.flatnonzero(active)
        A = np.where(fs[None, bem_dofs], -bem.D[np.ix_(bem_dofs, bem_dofs)],
                     bem.N[np.ix_(bem_dofs, bem_dofs)])
        A[np.arange(len(bem_dofs)), np.arange(len(bem_dofs))] += np.where(
            fs[bem_dofs], 0.0, bem.alpha[bem_dofs])
        bem_lu = scipy.linalg.lu_factor(A, check_finite=False)
        bem_idx = np.where(fs[bem_dofs], layout.phin_index(bem_dofs), layout.phi_index(bem_dofs))

        fs_free = np.flatnonzero(fs & active)
        quad = self._free_surface_quadrature(xg)
        zeros = np.zeros(quad.dA.shape)
        mass = assemble_supg_projection(quad, np.zeros(quad.dA.shape + (3,)), zeros, zeros,
                                        self.n_dofs).M
        mass_lu = splu((shift * mass[fs_free][:, fs_free]).tocsc())
        phi_idx = layout.phi_index(fs_free)
        z_idx = layout.x_index(fs_free, 2)

        def matvec(v):
            v = np.asarray(v, dtype=float).ravel()
            out = v / diag
            out[bem_idx] = scipy.linalg.lu_solve(bem_lu, v[bem_idx], check_finite=False)
            out[phi_idx] = mass_lu.solve(v[phi_idx])
            out[z_idx] = mass_lu.solve(v[z_idx])
            return out

        return LinearOperator((size, size), matvec=matvec, dtype=float)

    # Auswertung

    def fields(self, t: float, y: np.ndarray, yp: np.ndarray) -> Dict[str, np.ndarray]:
        """Punktfelder je DOF für die Ausgabe"""
        x, phi, phin = self.layout.unpack(y)
        xdot, phidot, _ = self.layout.unpack(yp)
        xg = self.geometry(x)
        eta = np.where(self.free_surface, x[:, 2], 0.0)
        scenario = self.scenario
        normals = vertex_normals(self.dofs.cell_dofs, xg, self.n_dofs)
        grad_phi = (self.nodal_surface_gradient(xg, phi, self.dofs.cell_dofs)
                    + phin[:, None] * normals)
        pressure = pressure_bernoulli(phidot, grad_phi, xdot, xg, scenario.frame(t),
                                      scenario.rho, scenario.p_atm, scenario.g)
        return {
            'phi': phi.copy(),
            'phin': phin.copy(),
            'eta': eta,
            'p': pressure,
            'dphi_dt': phidot.copy(),
            'w': xdot.copy(),
            'region': self.dofs.dof_region.astype(np.int64),
            'patch': self.dofs.dof_patch.astype(np.int64),
        }

    def hull_force(self, t: float, y: np.ndarray, yp: np.ndarray) -> HullForce:
        """Druckkraft auf den Rumpf und Widerstandsbeiwert"""
        scenario = self.scenario
        x, phi, phin = self.layout.unpack(y)
        xdot, phidot, _ = self.layout.unpack(yp)
        xg = self.geometry(x)
        if len(self.hull_cells) == 0:
            return HullForce(np.zeros(3), 0.0, 0.0)

        quad = quadrature_data(xg, self.hull_cells, self.fs_order)
        n = quad.geometry.normal
        grad_phi = quad.gradient(phi) + quad.interpolate(phin)[..., None] * n
        p = pressure_bernoulli(quad.interpolate(phidot), grad_phi, quad.interpolate(xdot),
                               quad.geometry.point, scenario.frame(t), scenario.rho,
                               scenario.p_atm, scenario.g)
        force = integrate_hull_force(quad, p, scenario.p_atm)
        area = quad.integrate(np.ones(quad.dA.shape))
        speed = float(np.linalg.norm(scenario.frame(t).v_inf))
        return HullForce(force, area, drag_coefficient(force[0], speed, area, scenario.rho))

    def waterline_profile(self, y: np.ndarray, side: int = 1) -> np.ndarray:
        """(x, z) der Wasserlinie auf einer Rumpfseite, nach x sortiert"""
        x, _, _ = self.layout.unpack(y)
        keep = []
        for d in self.roles.of(Role.WATERLINE):
            hull_sides = {int(self.roles.side[o]) for o in self.roles.others[d]
                          if o >= 0 and self.hull_mask[o]}
            if side in hull_sides:
                keep.append(d)
        keep = np.array(keep, dtype=np.int64)
        if len(keep) == 0:
            return np.zeros((0, 2))
        profile = x[keep][:, [0, 2]]
        return profile[np.argsort(profile[:, 0], kind='stable')]

    def free_surface_stats(self, y: np.ndarray, yp: np.ndarray) -> Dict[str, float]:
        x, _, _ = self.layout.unpack(y)
        xdot, _, _ = self.layout.unpack(yp)
        fs = np.flatnonzero(self.free_surface)
        return {
            'eta_max': float(np.max(x[fs, 2])) if len(fs) else 0.0,
            'eta_min': float(np.min(x[fs, 2])) if len(fs) else 0.0,
            'deta_dt_max': float(np.max(np.abs(xdot[fs, 2]))) if len(fs) else 0.0,
        }

    def beach_absorption(self, y: np.ndarray) -> float:
        """Vom Strand aufgenommene Leistung / ρ, stets ≥ 0"""
        x, _, phin = self.layout.unpack(y)
        quad = self._free_surface_quadrature(self.geometry(x))
        return energy_absorption_rate(quad, phin, self.scenario.beach)
