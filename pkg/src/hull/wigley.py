"""
Wigley-Rumpf
y = ±(B/2)[1 − (2x/L)²][1 − (z/T)²], oberhalb z = 0 senkrecht fortgesetzt
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..utils.errors import ConfigError, ProjectionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WigleyHull:
    """Länge L, Breite B, Tiefgang T in m"""

    length: float = 2.5
    beam: float = 0.25
    draft: float = 0.15625

    def __post_init__(self):
        for name in ('length', 'beam', 'draft'):
            if getattr(self, name) <= 0:
                raise ConfigError(f"Rumpfmaß {name} muss positiv sein")

    def _clip(self, x, z):
        half = 0.5 * self.length
        xc = np.clip(np.asarray(x, dtype=float), -half, half)
        zc = np.clip(np.asarray(z, dtype=float), -self.draft, 0.0)
        return xc, zc

    def half_beam(self, x, z):
        """Halbe Breite, außerhalb des Rumpfbereichs geklemmt"""
        xc, zc = self._clip(x, z)
        return (0.5 * self.beam * (1.0 - (2.0 * xc / self.length) ** 2)
                * (1.0 - (zc / self.draft) ** 2))

    def derivatives(self, x, z):
        """
        Ableitungen der halben Breite f(x, z)

        Returns:
            (f_x, f_z, f_xx, f_zz, f_xz); in geklemmten Bereichen null
        """
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        xc, zc = self._clip(x, z)
        L, T, b = self.length, self.draft, 0.5 * self.beam
        gx = 1.0 - (2.0 * xc / L) ** 2
        gz = 1.0 - (zc / T) ** 2
        dgx = -8.0 * xc / L ** 2
        dgz = -2.0 * zc / T ** 2
        inside_x = np.abs(x) <= 0.5 * L
        inside_z = (z <= 0.0) & (z >= -T)

        f_x = np.where(inside_x, b * dgx * gz, 0.0)
        f_z = np.where(inside_z, b * gx * dgz, 0.0)
        f_xx = np.where(inside_x, b * (-8.0 / L ** 2) * gz, 0.0)
        f_zz = np.where(inside_z, b * gx * (-2.0 / T ** 2), 0.0)
        f_xz = np.where(inside_x & inside_z, b * dgx * dgz, 0.0)
        return f_x, f_z, f_xx, f_zz, f_xz

    def normal(self, points, side):
        """Normale aus dem Fluid in den Rumpf, Seite +1 (y > 0) oder −1"""
        points = np.asarray(points, dtype=float)
        side = np.broadcast_to(np.asarray(side, dtype=float), points.shape[:-1])
        f_x, f_z, *_ = self.derivatives(points[..., 0], points[..., 2])
        grad = np.stack([-f_x, side, -f_z], axis=-1)
        return -grad / np.linalg.norm(grad, axis=-1, keepdims=True)

    def curvature_forcing(self, points, side):
        """
        Mittlere Krümmung als Vektor: (div n) n

        div n = −[f_xx(1+f_z²) + f_zz(1+f_x²) − 2 f_x f_z f_xz]/q³,
        q = √(1 + f_x² + f_z²). Das Vorzeichen von n kürzt sich heraus.
        """
        points = np.asarray(points, dtype=float)
        side = np.broadcast_to(np.asarray(side, dtype=float), points.shape[:-1])
        f_x, f_z, f_xx, f_zz, f_xz = self.derivatives(points[..., 0], points[..., 2])
        q = np.sqrt(1.0 + f_x ** 2 + f_z ** 2)
        div_n = -(f_xx * (1.0 + f_z ** 2) + f_zz * (1.0 + f_x ** 2)
                  - 2.0 * f_x * f_z * f_xz) / q ** 3
        n = np.stack([-f_x, side, -f_z], axis=-1) / q[..., None]
        return div_n[..., None] * n

    def residual(self, points, side):
        """Vorzeichenbehaftetes Residuum s·y − f(x, z)"""
        points = np.asarray(points, dtype=float)
        return side * points[..., 1] - self.half_beam(points[..., 0], points[..., 2])


def wigley_surface(x: float, z: float, hull: WigleyHull) -> float:
    """
    Halbe Breite y(x, z) für |x| ≤ L/2, −T ≤ z ≤ 0

    Raises:
        ValueError: (x, z) außerhalb des Rumpfbereichs
    """
    if abs(x) > 0.5 * hull.length * (1 + 1e-14) or not (-hull.draft * (1 + 1e-14) <= z <= 0.0):
        raise ValueError(f"(x, z) = ({x}, {z}) liegt außerhalb des Rumpfes")
    return float(hull.half_beam(x, z))


def project_to_hull(points, side, hull: WigleyHull, tol: float = 1e-10,
                    maxiter: int = 50) -> np.ndarray:
    """
    Newton-Projektion auf die Rumpffläche entlang der Flächennormale

    Iteriert p ← p − r ∇r/|∇r|² mit r = s·y − f(x, z); x wird auf
    [−L/2, L/2] geklemmt.

    Raises:
        ProjectionError: keine Konvergenz nach maxiter Iterationen
    """
    p = np.array(points, dtype=float, copy=True).reshape(-1, 3)
    side = np.broadcast_to(np.asarray(side, dtype=float), (len(p),)).copy()
    half = 0.5 * hull.length
    p[:, 0] = np.clip(p[:, 0], -half, half)

    for iteration in range(maxiter + 1):
        r = hull.residual(p, side)
        if np.all(np.abs(r) <= tol):
            return p.reshape(np.shape(points))
        if iteration == maxiter:
            break
        f_x, f_z, *_ = hull.derivatives(p[:, 0], p[:, 2])
        grad = np.stack([-f_x, side, -f_z], axis=1)
        p -= (r / np.sum(grad ** 2, axis=1))[:, None] * grad
        p[:, 0] = np.clip(p[:, 0], -half, half)

    worst = float(np.max(np.abs(hull.residual(p, side))))
    raise ProjectionError(f"Rumpfprojektion nicht konvergiert nach {maxiter} Iterationen "
                          f"(Residuum {worst:.2e} m)")


def project_horizontal(points, side, hull: WigleyHull) -> np.ndarray:
    """Setzt y = s·f(x, z) bei festem x, z (Wasserlinienknoten)"""
    p = np.array(points, dtype=float, copy=True)
    p[..., 1] = np.asarray(side) * hull.half_beam(p[..., 0], p[..., 2])
    return p
