"""
Szenario: Geschwindigkeit, Rampe, Becken, Strand und Froude-Hilfen
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .wigley import WigleyHull
from ..freesurface.conditions import GRAVITY, BeachParams, FrameKinematics, SupgParams
from ..utils.config import config
from ..utils.errors import ConfigError

logger = logging.getLogger(__name__)

# Froude-Zahlen des Wigley-Benchmarks
BENCHMARK_FROUDE = (0.250, 0.267, 0.289, 0.316, 0.354, 0.408)


def froude_to_speed(froude: float, length: float, g: float = GRAVITY) -> float:
    """V∞ = Fr·√(gL)"""
    if froude < 0:
        raise ValueError(f"Froude-Zahl muss >= 0 sein (ist {froude})")
    return froude * math.sqrt(g * length)


def speed_to_froude(speed: float, length: float, g: float = GRAVITY) -> float:
    """Fr = V∞/√(gL)"""
    return speed / math.sqrt(g * length)


def velocity_ramp(t: float, speed: float, ramp_time: float) -> Tuple[float, float]:
    """
    Lineare Geschwindigkeitsrampe

    Returns:
        (aktuelle Geschwindigkeit, Beschleunigung)
    """
    if ramp_time <= 0:
        raise ConfigError(f"Rampendauer muss positiv sein (ist {ramp_time})")
    if t < ramp_time:
        return speed * max(t, 0.0) / ramp_time, speed / ramp_time
    return speed, 0.0


@dataclass(frozen=True)
class BasinLayout:
    """Beckengrenzen in m (Bug bei x = −L/2, Strömung in +x)"""

    x_in: float
    x_out: float
    half_width: float
    depth: float

    @classmethod
    def around(cls, hull: WigleyHull, inflow: float = 1.0, outflow: float = 3.0,
               half_width: float = 1.5, depth: float = 1.0) -> 'BasinLayout':
        """Beckenmaße in Vielfachen der Rumpflänge"""
        L = hull.length
        return cls(x_in=-0.5 * L - inflow * L, x_out=0.5 * L + outflow * L,
                   half_width=half_width * L, depth=depth * L)

    def check(self, hull: WigleyHull):
        if self.x_in >= -0.5 * hull.length or self.x_out <= 0.5 * hull.length:
            raise ConfigError("Rumpf schneidet Ein- oder Auslass des Beckens")
        if self.half_width <= 0.5 * hull.beam:
            raise ConfigError("Rumpf schneidet die Seitenwände des Beckens")
        if self.depth <= hull.draft:
            raise ConfigError("Rumpf schneidet den Beckenboden")


@dataclass(frozen=True)
class MeshResolution:
    """Panelzahlen des strukturierten Startnetzes"""

    hull_nx: int = 16
    hull_nz: int = 3
    ahead_nx: int = 4
    behind_nx: int = 10
    side_ny: int = 6
    depth_nz: int = 3
    side_grading: float = 1.3

    def __post_init__(self):
        for name in ('hull_nx', 'hull_nz', 'ahead_nx', 'behind_nx', 'side_ny', 'depth_nz'):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"mesh.{name} muss >= 1 sein")
        if self.side_grading <= 0:
            raise ConfigError("mesh.side_grading muss positiv sein")


@dataclass(frozen=True)
class Scenario:
    """Vollständige Beschreibung eines Laufs"""

    hull: WigleyHull
    speed: float
    ramp_time: float
    basin: BasinLayout
    beach: BeachParams
    supg: SupgParams = field(default_factory=SupgParams)
    mesh: MeshResolution = field(default_factory=MeshResolution)
    t_end: float = 6.0
    steady_factor: float = 1e-4
    steady_window: float = 1.0
    g: float = GRAVITY
    rho: float = 1000.0
    p_atm: float = 0.0

    def __post_init__(self):
        if self.speed < 0:
            raise ConfigError(f"Geschwindigkeit muss >= 0 sein (ist {self.speed})")
        if self.ramp_time <= 0:
            raise ConfigError(f"Rampendauer muss positiv sein (ist {self.ramp_time})")
        if self.t_end <= 0:
            raise ConfigError(f"Endzeit muss positiv sein (ist {self.t_end})")
        self.basin.check(self.hull)
        if self.beach.x_d < 0.5 * self.hull.length or \
                self.beach.x_d + self.beach.length > self.basin.x_out * (1 + 1e-12):
            raise ConfigError("Strand liegt nicht zwischen Heck und Auslass")

    @property
    def froude(self) -> float:
        return speed_to_froude(self.speed, self.hull.length, self.g)

    def frame(self, t: float) -> FrameKinematics:
        speed, accel = velocity_ramp(t, self.speed, self.ramp_time)
        return FrameKinematics.towing(speed, accel)

    def steady_threshold(self) -> float:
        return self.steady_factor * self.speed

    @classmethod
    def from_config(cls, froude: Optional[float] = None,
                    t_end: Optional[float] = None) -> 'Scenario':
        """
        Baut das Szenario aus der globalen Konfiguration

        Args:
            froude: überschreibt scenario.froude (CLI)
            t_end: überschreibt scenario.t_end (CLI)

        Raises:
            ConfigError: ungültige oder widersprüchliche Werte
        """
        try:
            hull = WigleyHull(float(config.get('hull.length', 2.5)),
                              float(config.get('hull.beam', 0.25)),
                              float(config.get('hull.draft', 0.15625)))
            g = float(config.get('physics.g', GRAVITY))

            speed = config.get('scenario.speed')
            if froude is not None:
                speed = froude_to_speed(float(froude), hull.length, g)
            elif speed is None:
                speed = froude_to_speed(float(config.get('scenario.froude', 0.25)),
                                        hull.length, g)
            speed = float(speed)

            basin = BasinLayout.around(
                hull,
                inflow=float(config.get('basin.inflow_lengths', 1.0)),
                outflow=float(config.get('basin.outflow_lengths', 3.0)),
                half_width=float(config.get('basin.half_width_lengths', 1.5)),
                depth=float(config.get('basin.depth_lengths', 1.0)),
            )
            nu = config.get('beach.nu')
            beach = BeachParams(
                x_d=0.5 * hull.length + float(config.get('beach.start_lengths', 1.5)) * hull.length,
                length=float(config.get('beach.length_lengths', 1.5)) * hull.length,
                nu=float(speed if nu is None else nu),
            )
            mesh = MeshResolution(
                hull_nx=int(config.get('mesh.hull_nx', 16)),
                hull_nz=int(config.get('mesh.hull_nz', 3)),
                ahead_nx=int(config.get('mesh.ahead_nx', 4)),
                behind_nx=int(config.get('mesh.behind_nx', 10)),
                side_ny=int(config.get('mesh.side_ny', 6)),
                depth_nz=int(config.get('mesh.depth_nz', 3)),
                side_grading=float(config.get('mesh.side_grading', 1.3)),
            )
            scenario = cls(
                hull=hull,
                speed=speed,
                ramp_time=float(config.get('scenario.ramp_time', 2.0)),
                basin=basin,
                beach=beach,
                supg=SupgParams.from_config(),
                mesh=mesh,
                t_end=float(t_end if t_end is not None else config.get('scenario.t_end', 6.0)),
                steady_factor=float(config.get('scenario.steady_factor', 1e-4)),
                steady_window=float(config.get('scenario.steady_window', 1.0)),
                g=g,
                rho=float(config.get('physics.rho', 1000.0)),
                p_atm=float(config.get('physics.p_atm', 0.0)),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Ungültige Szenario-Konfiguration: {e}") from e

        logger.info(f"Szenario: Fr={scenario.froude:.3f}, V∞={scenario.speed:.4f} m/s, "
                    f"T_ramp={scenario.ramp_time} s, t_end={scenario.t_end} s")
        return scenario
