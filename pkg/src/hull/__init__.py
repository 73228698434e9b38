"""Wigley-Rumpf, Szenario und Startgebiet"""

from .wigley import WigleyHull, wigley_surface, project_to_hull, project_horizontal
from .scenario import (BENCHMARK_FROUDE, BasinLayout, MeshResolution, Scenario,
                       froude_to_speed, speed_to_froude, velocity_ramp)
from .domain import Domain, build_initial_domain, check_watertight, PATCH_NAMES, HULL_SIDES

__all__ = [
    'WigleyHull', 'wigley_surface', 'project_to_hull', 'project_horizontal',
    'BENCHMARK_FROUDE', 'BasinLayout', 'MeshResolution', 'Scenario',
    'froude_to_speed', 'speed_to_froude', 'velocity_ramp',
    'Domain', 'build_initial_domain', 'check_watertight', 'PATCH_NAMES', 'HULL_SIDES',
]
