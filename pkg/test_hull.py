#!/usr/bin/env python3
"""
Test-Script für Rumpf, Szenario und Startnetz
Läuft mit pytest oder direkt: python3 test_hull.py
"""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.freesurface.conditions import BeachParams
from src.hull import (BasinLayout, MeshResolution, WigleyHull, build_initial_domain,
                      check_watertight, froude_to_speed, project_horizontal, project_to_hull,
                      speed_to_froude, velocity_ramp, wigley_surface)
from src.hull.domain import FREE_SURFACE, HULL_PORT, HULL_STARBOARD
from src.hull.scenario import Scenario
from src.mesh.surface import Region
from src.utils.config import config
from src.utils.errors import ConfigError, MeshError
from testutils import coarse_scenario, flat_grid, main_guard, run_suite

# Setup Logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

HULL = WigleyHull()


def test_wigley_shape():
    """Halbe Breite und Definitionsbereich"""
    print("\n" + "=" * 60)
    print("Test: Wigley-Form")
    print("=" * 60)

    L, T = HULL.length, HULL.draft
    assert wigley_surface(0.0, 0.0, HULL) == 0.125
    assert abs(wigley_surface(L / 4, -T / 2, HULL) - 0.0703125) < 1e-15
    assert wigley_surface(L / 2, -0.05, HULL) == 0.0
    assert wigley_surface(0.3, -T, HULL) == 0.0

    with pytest.raises(ValueError):
        wigley_surface(1.3, -0.05, HULL)
    with pytest.raises(ValueError):
        wigley_surface(0.0, 0.01, HULL)
    with pytest.raises(ConfigError):
        WigleyHull(length=0.0)

    # oberhalb der Wasserlinie senkrecht fortgesetzt
    assert HULL.half_beam(0.4, 0.05) == HULL.half_beam(0.4, 0.0)
    print("✓ f(0,0) = 0.125, f(L/4, −T/2) = 0.0703125")


def test_derivatives_and_normal():
    """Ableitungen gegen Differenzenquotienten, Normale senkrecht zur Fläche"""
    print("\n" + "=" * 60)
    print("Test: Ableitungen und Normale")
    print("=" * 60)

    x, z, h = 0.37, -0.06, 1e-6
    f_x, f_z, f_xx, f_zz, f_xz = HULL.derivatives(x, z)
    fd_x = (HULL.half_beam(x + h, z) - HULL.half_beam(x - h, z)) / (2 * h)
    fd_z = (HULL.half_beam(x, z + h) - HULL.half_beam(x, z - h)) / (2 * h)
    assert abs(f_x - fd_x) < 1e-8
    assert abs(f_z - fd_z) < 1e-8
    fd_xz = (HULL.derivatives(x, z + h)[0] - HULL.derivatives(x, z - h)[0]) / (2 * h)
    assert abs(f_xz - fd_xz) < 1e-6

    for side in (1, -1):
        p = np.array([x, side * HULL.half_beam(x, z), z])
        n = HULL.normal(p, side)
        t_x = np.array([1.0, side * f_x, 0.0])
        t_z = np.array([0.0, side * f_z, 1.0])
        assert abs(np.linalg.norm(n) - 1.0) < 1e-14
        assert abs(n @ t_x) < 1e-14
        assert abs(n @ t_z) < 1e-14
        # Normale zeigt aus dem Fluid in den Rumpf
        assert side * n[1] < 0
        kappa = HULL.curvature_forcing(p, side)
        assert np.linalg.norm(np.cross(kappa, n)) < 1e-12
    print("✓ f_x, f_z, f_xz, Normale tangential-orthogonal")


def test_projection():
    """Newton-Projektion auf die Rumpffläche"""
    print("\n" + "=" * 60)
    print("Test: Rumpfprojektion")
    print("=" * 60)

    points = np.array([[0.3, 0.14, -0.05], [-0.8, 0.02, -0.1], [0.0, 0.11, -0.01]])
    projected = project_to_hull(points, 1, HULL, tol=1e-12)
    assert np.all(np.abs(HULL.residual(projected, 1)) <= 1e-12)
    assert np.all(np.linalg.norm(projected - points, axis=1) < 0.05)

    # Punkte auf der Fläche bleiben unverändert
    on_surface = np.array([[0.2, -HULL.half_beam(0.2, -0.07), -0.07]])
    assert np.array_equal(project_to_hull(on_surface, -1, HULL), on_surface)

    horizontal = project_horizontal(np.array([[0.5, 0.3, 0.0]]), 1, HULL)
    assert_allclose(horizontal, [[0.5, HULL.half_beam(0.5, 0.0), 0.0]], rtol=0, atol=0)
    print(f"✓ max. Verschiebung {np.max(np.linalg.norm(projected - points, axis=1)):.4f} m")


def test_froude_and_ramp():
    """Froude-Umrechnung und Geschwindigkeitsrampe"""
    print("\n" + "=" * 60)
    print("Test: Froude-Zahl und Rampe")
    print("=" * 60)

    assert abs(froude_to_speed(0.25, 2.5) - 1.23807) < 1e-5
    assert abs(froude_to_speed(0.408, 2.5) - 2.02053) < 1e-5
    for fr in (0.250, 0.316, 0.408):
        assert abs(speed_to_froude(froude_to_speed(fr, 2.5), 2.5) - fr) < 1e-14
    with pytest.raises(ValueError):
        froude_to_speed(-0.1, 2.5)

    assert velocity_ramp(1.0, 2.0, 2.0) == (1.0, 1.0)
    assert velocity_ramp(3.0, 2.0, 2.0) == (2.0, 0.0)
    assert velocity_ramp(-1.0, 2.0, 2.0) == (0.0, 1.0)
    with pytest.raises(ConfigError):
        velocity_ramp(1.0, 2.0, 0.0)
    print("✓ Fr 0.25 → 1.23807 m/s, Rampe linear")


def test_scenario_validation():
    """Szenario-Werte und Rahmenkinematik"""
    print("\n" + "=" * 60)
    print("Test: Szenario")
    print("=" * 60)

    scenario = coarse_scenario(speed=2.0)
    frame = scenario.frame(0.5)
    assert_allclose(frame.v_inf, [1.0, 0.0, 0.0])
    assert_allclose(frame.a_inf, [2.0, 0.0, 0.0])
    assert_allclose(scenario.frame(5.0).a_inf, [0.0, 0.0, 0.0])
    assert abs(scenario.steady_threshold() - 2e-4) < 1e-18

    with pytest.raises(ConfigError):
        coarse_scenario(speed=-1.0)
    with pytest.raises(ConfigError):
        coarse_scenario(t_end=0.0)
    with pytest.raises(ConfigError):
        coarse_scenario(beach=BeachParams(x_d=1.0, length=3.0, nu=1.0))
    with pytest.raises(ConfigError):
        coarse_scenario(beach=BeachParams(x_d=6.0, length=3.75, nu=1.0))
    with pytest.raises(ConfigError):
        coarse_scenario(basin=BasinLayout(-1.0, 8.75, 3.75, 2.5))
    with pytest.raises(ConfigError):
        MeshResolution(hull_nx=0)
    print("✓ Rampe im Rahmen, ungültige Werte abgelehnt")


def test_scenario_from_config():
    """Szenario aus der globalen Konfiguration"""
    print("\n" + "=" * 60)
    print("Test: Szenario aus Konfiguration")
    print("=" * 60)

    config.reset()
    try:
        scenario = Scenario.from_config(froude=0.408)
        assert abs(scenario.speed - 2.02053) < 1e-5
        assert abs(scenario.froude - 0.408) < 1e-12
        assert scenario.beach.x_d == 5.0
        assert scenario.beach.nu == scenario.speed

        config.set('scenario.speed', 1.5)
        assert Scenario.from_config().speed == 1.5

        config.set('scenario.ramp_time', 'schnell')
        with pytest.raises(ConfigError):
            Scenario.from_config()
    finally:
        config.reset()
    print("✓ Froude-Überschreibung, feste Geschwindigkeit, ungültige Werte")


def test_initial_domain():
    """Grobes Startnetz: geschlossen, Flächen richtig zugeordnet"""
    print("\n" + "=" * 60)
    print("Test: Startnetz")
    print("=" * 60)

    scenario = coarse_scenario()
    domain = build_initial_domain(scenario.hull, scenario)
    mesh = domain.mesh
    check_watertight(mesh)
    mesh.validate()

    hull_cells = np.isin(mesh.patches, [HULL_PORT, HULL_STARBOARD])
    assert hull_cells.sum() == 2 * scenario.mesh.hull_nx * scenario.mesh.hull_nz

    surface_nodes = np.unique(mesh.cells[mesh.patches == FREE_SURFACE])
    assert np.all(mesh.nodes[surface_nodes, 2] == 0.0)

    for patch, side in ((HULL_PORT, 1), (HULL_STARBOARD, -1)):
        nodes = np.unique(mesh.cells[mesh.patches == patch])
        assert np.all(np.abs(HULL.residual(mesh.nodes[nodes], side)) < 1e-12)
        assert domain.side_of_patch(np.array([patch]))[0] == side

    waterline = np.intersect1d(surface_nodes, np.unique(mesh.cells[hull_cells]))
    assert len(waterline) == 2 * scenario.mesh.hull_nx
    assert mesh.regions[np.flatnonzero(mesh.patches == FREE_SURFACE)[0]] == \
        Region.FREE_SURFACE

    with pytest.raises(MeshError):
        check_watertight(flat_grid(2, 2))
    print(f"✓ {mesh.n_nodes} Knoten, {mesh.n_cells} Panels, "
          f"{len(waterline)} Wasserlinienknoten")


def main():
    """Führt alle Tests aus"""
    print("=" * 60)
    print("Wellen-BEM - Rumpf-Test")
    print("=" * 60)

    tests = [
        ("Wigley-Form", test_wigley_shape),
        ("Ableitungen/Normale", test_derivatives_and_normal),
        ("Projektion", test_projection),
        ("Froude/Rampe", test_froude_and_ramp),
        ("Szenario", test_scenario_validation),
        ("Szenario (Config)", test_scenario_from_config),
        ("Startnetz", test_initial_domain),
    ]
    return run_suite(tests)


if __name__ == '__main__':
    main_guard(main)
