#!/usr/bin/env python3
"""
Test-Script für die Netzadaption (Kelly-Schätzer, Markierung, Quadtree, Transfer)
Läuft mit pytest oder direkt: python3 test_adapt.py
"""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.adapt import (CellError, Flag, RefinementFlags, execute_refinement,
                       flag_fixed_fraction, hull_placement, kelly_estimate, limit_flags,
                       one_level_violations, transfer_field)
from src.hull import HULL_SIDES, build_initial_domain
from src.mesh import duplicate_edge_nodes
from src.mesh.surface import Region
from testutils import coarse_scenario, flat_grid, main_guard, run_suite

# Setup Logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)


def refine_cells(mesh, cells, placement=None):
    flags = np.full(mesh.n_cells, Flag.KEEP, dtype=np.int64)
    flags[list(cells)] = Flag.REFINE
    return execute_refinement(mesh, RefinementFlags(flags, 0.0, 0.0), placement)


def dof_positions(mesh):
    dofs = duplicate_edge_nodes(mesh)
    return dofs, mesh.nodes[dofs.dof_node]


def test_kelly():
    """Kelly-Indikator: lineare Felder fehlerfrei, Einzelsprung exakt"""
    print("\n" + "=" * 60)
    print("Test: Kelly-Schätzer")
    print("=" * 60)

    mesh = flat_grid(3, 3)
    dofs, positions = dof_positions(mesh)
    linear = 2.0 * positions[:, 0] - 3.0 * positions[:, 1] + 1.0
    errors = kelly_estimate(mesh, dofs, positions, linear)
    assert errors.max < 1e-12

    mesh = flat_grid(2, 1, width=2.0)
    dofs, positions = dof_positions(mesh)
    kink = np.maximum(0.0, positions[:, 0] - 1.0)
    errors = kelly_estimate(mesh, dofs, positions, kink)
    expected = np.sqrt(np.sqrt(2.0) / 24.0)
    assert_allclose(errors.tau, [expected, expected], rtol=1e-12)
    assert_allclose(errors.h, [np.sqrt(2.0)] * 2, rtol=1e-14)

    # hängende Kanten: linearer Verlauf bleibt sprungfrei
    refined, _ = refine_cells(flat_grid(2, 2), [0])
    dofs, positions = dof_positions(refined)
    linear = positions[:, 0] + 0.5 * positions[:, 1]
    assert kelly_estimate(refined, dofs, positions, linear).max < 1e-10

    with pytest.raises(ValueError):
        CellError(np.array([0.1, -0.1]), np.ones(2))
    print(f"✓ τ = {errors.tau[0]:.6f} je Zelle am Knick")


def test_flagging():
    """Fester Anteil, Gleichstände nach Zellindex"""
    print("\n" + "=" * 60)
    print("Test: Markierung")
    print("=" * 60)

    equal = CellError(np.ones(10), np.ones(10))
    flags = flag_fixed_fraction(equal, 0.3, 0.0)
    assert np.flatnonzero(flags.flags == Flag.REFINE).tolist() == [0, 1, 2]
    assert flags.n_coarsen == 0

    assert flag_fixed_fraction(equal, 0.0, 0.0).n_refine == 0

    ramp = CellError(np.arange(10.0), np.ones(10))
    flags = flag_fixed_fraction(ramp, 0.2, 0.2)
    assert np.flatnonzero(flags.flags == Flag.REFINE).tolist() == [8, 9]
    assert np.flatnonzero(flags.flags == Flag.COARSEN).tolist() == [0, 1]

    with pytest.raises(ValueError):
        flag_fixed_fraction(equal, 0.7, 0.5)
    with pytest.raises(ValueError):
        flag_fixed_fraction(equal, -0.1, 0.0)

    all_refine = RefinementFlags(np.full(10, int(Flag.REFINE)), 1.0, 0.0)
    too_small = limit_flags(all_refine, CellError(np.ones(10), np.ones(10)), 0.6, 0, 10 ** 6)
    assert too_small.n_refine == 0
    budget = limit_flags(all_refine, ramp, 0.0, 100, 106)
    assert np.flatnonzero(budget.flags == Flag.REFINE).tolist() == [8, 9]
    print("✓ Reihenfolge, Anteile, Mindestgröße, DOF-Grenze")


def test_refine_single_cell():
    """Eine Zelle eines 2×2-Gitters: sieben Zellen, zwei hängende Knoten"""
    print("\n" + "=" * 60)
    print("Test: Einzelverfeinerung")
    print("=" * 60)

    mesh = flat_grid(2, 2)
    refined, report = refine_cells(mesh, [0])
    assert refined.n_cells == 7
    assert len(refined.hanging) == 2
    assert report.refined == 1 and report.closure == 0
    assert len(report.new_nodes) == 5
    assert abs(refined.surface_area() - 1.0) < 1e-14
    assert refined.levels.tolist().count(1) == 4

    for node, (masters, weights) in refined.hanging.items():
        assert_allclose(refined.nodes[node], refined.nodes[list(masters)].mean(axis=0),
                        atol=1e-15)

    # Ausgangsnetz bleibt unverändert
    assert mesh.n_cells == 4 and len(mesh.hanging) == 0

    everything, _ = refine_cells(mesh, range(4))
    assert everything.n_cells == 16
    assert len(everything.hanging) == 0
    assert abs(everything.surface_area() - 1.0) < 1e-14
    print(f"✓ {refined.n_cells} Zellen, hängend {sorted(refined.hanging)}")


def test_one_level_rule():
    """Zweite Verfeinerung erzwingt den Abschluss am groben Nachbarn"""
    print("\n" + "=" * 60)
    print("Test: Ein-Level-Regel")
    print("=" * 60)

    once, _ = refine_cells(flat_grid(4, 4), [0])
    assert one_level_violations(once) == []
    # Kind 3 liegt in der Ecke zu den groben Nachbarn
    twice, report = refine_cells(once, [3])
    assert report.closure >= 1
    assert one_level_violations(twice) == []
    assert twice.levels.max() == 2
    print(f"✓ {report.closure} Zellen durch Abschluss verfeinert")


def test_coarsen_round_trip():
    """Verfeinern und vollständig vergröbern ergibt das Ausgangsgitter"""
    print("\n" + "=" * 60)
    print("Test: Vergröberung")
    print("=" * 60)

    coarse = flat_grid(2, 2)
    coarse_dofs, coarse_positions = dof_positions(coarse)
    fine, _ = refine_cells(coarse, range(4))
    fine_dofs, fine_positions = dof_positions(fine)

    flags = RefinementFlags(np.full(fine.n_cells, int(Flag.COARSEN)), 0.0, 1.0)
    again, report = execute_refinement(fine, flags)
    assert report.coarsened == 4
    assert again.n_cells == 4
    assert np.all(again.levels == 0)
    assert len(again.hanging) == 0

    again_dofs, again_positions = dof_positions(again)
    assert again_dofs.n_dofs == coarse_dofs.n_dofs == 9
    assert_allclose(again_positions, coarse_positions, rtol=0, atol=0)

    values = np.sin(coarse_positions[:, 0]) + coarse_positions[:, 1] ** 2
    on_fine = transfer_field(coarse_dofs, fine_dofs, fine, values)
    back = transfer_field(fine_dofs, again_dofs, again, on_fine)
    assert np.array_equal(back, values)
    print(f"✓ {fine.n_cells} → {again.n_cells} Zellen, Werte unverändert")


def test_transfer_linear():
    """Nodale Interpolation gibt lineare Felder exakt wieder"""
    print("\n" + "=" * 60)
    print("Test: Lösungstransfer")
    print("=" * 60)

    coarse = flat_grid(2, 2)
    old_dofs, old_positions = dof_positions(coarse)
    fine, _ = refine_cells(coarse, [0, 3])
    new_dofs, new_positions = dof_positions(fine)

    def field(p):
        return 2.0 * p[:, 0] - p[:, 1] + 0.5

    moved = transfer_field(old_dofs, new_dofs, fine, field(old_positions))
    assert_allclose(moved, field(new_positions), atol=1e-14)

    vectors = transfer_field(old_dofs, new_dofs, fine, old_positions)
    assert_allclose(vectors, new_positions, atol=1e-15)
    print(f"✓ {old_dofs.n_dofs} → {new_dofs.n_dofs} DOFs")


def test_hull_placement():
    """Neue Rumpfknoten liegen auf der Wigley-Fläche"""
    print("\n" + "=" * 60)
    print("Test: Rumpfplatzierung")
    print("=" * 60)

    scenario = coarse_scenario()
    domain = build_initial_domain(scenario.hull, scenario)
    mesh = domain.mesh
    place = hull_placement(domain.hull, domain.patch_sides, mesh.patch_regions)

    hull_cells = np.flatnonzero(mesh.regions == Region.HULL)
    refined, report = refine_cells(mesh, hull_cells, place)
    assert report.refined == len(hull_cells)

    worst = 0.0
    for patch, side in HULL_SIDES.items():
        nodes = np.unique(refined.cells[refined.patches == patch])
        residual = domain.hull.residual(refined.nodes[nodes], side)
        worst = max(worst, float(np.max(np.abs(residual))))
    assert worst <= 1e-10

    point = np.array([1.0, 2.0, 0.0])
    assert np.array_equal(place(point, 0), point)
    print(f"✓ max. Abstand zur Rumpffläche {worst:.1e} m")


def main():
    """Führt alle Tests aus"""
    print("=" * 60)
    print("Wellen-BEM - Adaptions-Test")
    print("=" * 60)

    tests = [
        ("Kelly", test_kelly),
        ("Markierung", test_flagging),
        ("Einzelverfeinerung", test_refine_single_cell),
        ("Ein-Level-Regel", test_one_level_rule),
        ("Vergröberung", test_coarsen_round_trip),
        ("Transfer", test_transfer_linear),
        ("Rumpfplatzierung", test_hull_placement),
    ]
    return run_suite(tests)


if __name__ == '__main__':
    main_guard(main)
