"""
Rechte Seiten der Oberflächenbedingungen im Bootsrahmen
Semi-Lagrange-Form mit beliebiger Knotengeschwindigkeit w
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..utils.config import config
from ..utils.errors import ConfigError

GRAVITY = 9.81


@dataclass(frozen=True)
class FrameKinematics:
    """
    Geschwindigkeiten und Beschleunigungen des Bootsrahmens

    Der Rahmen folgt dem Schiff: V_sys = V_boat, V_stream = 0 und
    V∞ = V_stream − V_sys. Die effektive Beschleunigung ist
    a∞ = a_stream − a_sys.
    """

    v_boat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_stream: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a_sys: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a_stream: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ('v_boat', 'v_stream', 'a_sys', 'a_stream'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if abs(self.v_inf[2]) > 0.0:
            raise ConfigError("V∞ muss horizontal sein")

    @classmethod
    def towing(cls, speed: float, acceleration: float = 0.0) -> 'FrameKinematics':
        """Schiff fährt mit speed in −x; Strömung im Rahmen in +x"""
        return cls(v_boat=np.array([-speed, 0.0, 0.0]),
                   a_sys=np.array([-acceleration, 0.0, 0.0]))

    @property
    def v_sys(self) -> np.ndarray:
        return self.v_boat

    @property
    def v_inf(self) -> np.ndarray:
        return self.v_stream - self.v_sys

    @property
    def a_inf(self) -> np.ndarray:
        return self.a_stream - self.a_sys


@dataclass(frozen=True)
class BeachParams:
    """Numerischer Strand: Beginn x_d, Länge L_d, Koeffizient ν (m/s)"""

    x_d: float
    length: float
    nu: float

    def __post_init__(self):
        if self.length <= 0:
            raise ConfigError(f"Strandlänge muss positiv sein (ist {self.length})")
        if self.nu < 0:
            raise ConfigError(f"Strandkoeffizient muss >= 0 sein (ist {self.nu})")


@dataclass(frozen=True)
class SupgParams:
    """τ = c·h/2, Abschaltgeschwindigkeit ε_v"""

    c: float = 1.0
    cutoff: float = 1e-8
    enabled: bool = True

    def __post_init__(self):
        if self.c < 0:
            raise ConfigError(f"SUPG-Konstante muss >= 0 sein (ist {self.c})")

    @classmethod
    def from_config(cls) -> 'SupgParams':
        return cls(c=float(config.get('supg.c', 1.0)),
                   cutoff=float(config.get('supg.cutoff_speed', 1e-8)),
                   enabled=bool(config.get('supg.enabled', True)))

    def tau(self, h_elem):
        return (self.c if self.enabled else 0.0) * np.asarray(h_elem, dtype=float) / 2.0


@dataclass
class FreeSurfaceState:
    """Knotenwerte auf Γʷ"""

    eta: np.ndarray
    phi: np.ndarray
    phin: np.ndarray
    w: np.ndarray
    positions: np.ndarray

    def check_graph(self, tol: float = 0.0) -> bool:
        """z-Komponente der Lagen stimmt mit η überein"""
        return bool(np.all(np.abs(self.positions[:, 2] - self.eta) <= tol))


def beach_mu(x, beach: Optional[BeachParams]):
    """Dämpfung μ = ν·(max(0, x − x_d)/L_d)² in m/s"""
    x = np.asarray(x, dtype=float)
    if beach is None:
        return np.zeros_like(x)
    ratio = np.maximum(0.0, x - beach.x_d) / beach.length
    return beach.nu * ratio ** 2


def total_velocity(grad_s_phi, phin, n, frame: FrameKinematics) -> np.ndarray:
    """v = V∞ + ∇_s φ + φn·n"""
    grad_s_phi = np.asarray(grad_s_phi, dtype=float)
    n = np.asarray(n, dtype=float)
    return frame.v_inf + grad_s_phi + np.asarray(phin, dtype=float)[..., None] * n


def eta_gradient(n) -> np.ndarray:
    """∇η aus der Flächennormale eines Graphen z = η(x, y)"""
    n = np.asarray(n, dtype=float)
    grad = np.zeros_like(n)
    grad[..., 0] = -n[..., 0] / n[..., 2]
    grad[..., 1] = -n[..., 1] / n[..., 2]
    return grad


def v_phi(grad_phi, phin, w, v, eta, x, frame: FrameKinematics, mu=0.0, g: float = GRAVITY):
    """
    V_φ = (w − v)·∇φ − gη + a∞·x + ½|∇φ|² − μ φn

    Args:
        grad_phi: voller Gradient ∇φ = ∇_s φ + φn n
        phin: Normalableitung
        w: ALE-Geschwindigkeit
        v: Fluidgeschwindigkeit
        eta: Auslenkung
        x: Punkt
        frame: Rahmenkinematik
        mu: Strand-Dämpfung (m/s)
    """
    grad_phi = np.asarray(grad_phi, dtype=float)
    transport = np.sum((np.asarray(w) - np.asarray(v)) * grad_phi, axis=-1)
    return (transport - g * np.asarray(eta) + np.asarray(x) @ frame.a_inf
            + 0.5 * np.sum(grad_phi ** 2, axis=-1) - np.asarray(mu) * np.asarray(phin))


def v_eta(grad_eta, w, v):
    """V_η = (w − v)·∇η + v·e_z"""
    v = np.asarray(v, dtype=float)
    return np.sum((np.asarray(w) - v) * np.asarray(grad_eta), axis=-1) + v[..., 2]


def supg_direction(v, w, supg: SupgParams, h_elem) -> np.ndarray:
    """d = τ (v − w)/|v − w|, null unterhalb der Abschaltgeschwindigkeit"""
    rel = np.asarray(v, dtype=float) - np.asarray(w, dtype=float)
    speed = np.linalg.norm(rel, axis=-1)
    tau = supg.tau(h_elem)
    scale = np.where(speed >= supg.cutoff, tau / np.where(speed > 0, speed, 1.0), 0.0)
    return rel * scale[..., None]
