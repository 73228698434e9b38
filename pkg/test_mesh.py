#!/usr/bin/env python3
"""
Test-Script für Netz-Module (Formfunktionen, Geometrie, DOFs, VTK)
Läuft mit pytest oder direkt: python3 test_mesh.py
"""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.ale.smoothing import assemble_laplace_beltrami
from src.mesh import (CurrentConfiguration, HangingConstraints, constrain_hanging,
                      duplicate_edge_nodes, panel_geometry, quadrature_data, shape_values,
                      surface_gradient_basis)
from src.mesh import vtk_io
from src.mesh.vtk_io import read_listing, read_vtk, write_listing, write_vtk
from src.utils.errors import DegeneratePanelError, MeshError
from testutils import cube_mesh, flat_grid, main_guard, node_at, run_suite

# Setup Logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

UNIT_SQUARE = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
ONE_CELL = np.array([[0, 1, 2, 3]])


def test_shape_values():
    """Formfunktionen"""
    print("\n" + "=" * 60)
    print("Test: Formfunktionen")
    print("=" * 60)

    assert_allclose(shape_values(0.0, 0.0), [1, 0, 0, 0])
    assert_allclose(shape_values(0.5, 0.5), [0.25] * 4)
    assert_allclose(shape_values(1.0, 0.5), [0, 0.5, 0, 0.5])

    grid = np.linspace(0.0, 1.0, 10)
    worst = max(abs(shape_values(u, v).sum() - 1.0) for u in grid for v in grid)
    assert worst < 1e-14

    with pytest.raises(ValueError):
        shape_values(1.5, 0.0)
    print("✓ Zerlegung der Eins, Knoteneigenschaft, Bereichsprüfung")


def test_panel_geometry():
    """Normale und Jacobi-Determinante"""
    print("\n" + "=" * 60)
    print("Test: Panel-Geometrie")
    print("=" * 60)

    geo = panel_geometry(0, 0.3, 0.7, CurrentConfiguration(UNIT_SQUARE, ONE_CELL))
    assert_allclose(geo['n'], [0, 0, 1], atol=1e-15)
    assert abs(geo['J'] - 1.0) < 1e-15
    assert_allclose(geo['point'], [0.3, 0.7, 0.0], atol=1e-15)

    scaled = panel_geometry(0, 0.3, 0.7, CurrentConfiguration(2.0 * UNIT_SQUARE, ONE_CELL))
    assert abs(scaled['J'] - 4.0) < 1e-14

    collapsed = UNIT_SQUARE.copy()
    collapsed[1] = collapsed[0]
    collapsed[3] = collapsed[2]
    with pytest.raises(DegeneratePanelError) as info:
        panel_geometry(0, 0.5, 0.5, CurrentConfiguration(collapsed, ONE_CELL))
    assert info.value.panel == 0
    print(f"✓ J = {geo['J']:.3f}, skaliert {scaled['J']:.3f}")


def test_surface_gradient():
    """Flächengradienten auf ebenen und geneigten Panels"""
    print("\n" + "=" * 60)
    print("Test: Flächengradient")
    print("=" * 60)

    config = CurrentConfiguration(UNIT_SQUARE, ONE_CELL)
    grads = surface_gradient_basis(0, 0.25, 0.6, config)
    assert_allclose(UNIT_SQUARE[:, 0] @ grads, [1, 0, 0], atol=1e-14)
    assert_allclose(np.full(4, 7.0) @ grads, [0, 0, 0], atol=1e-13)

    tilted = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 1.0, 1.0]])
    a = np.array([1.0, 2.0, 3.0])
    grads = surface_gradient_basis(0, 0.4, 0.1, CurrentConfiguration(tilted, ONE_CELL))
    grad = (tilted @ a) @ grads
    assert_allclose(grad, [2, 2, 2], atol=1e-13)
    n = np.array([-1.0, 0.0, 1.0]) / np.sqrt(2.0)
    assert abs(grad @ n) < 1e-12 * np.linalg.norm(grad)

    mesh = cube_mesh(2)
    dofs = duplicate_edge_nodes(mesh)
    positions = mesh.nodes[dofs.dof_node]
    quad = quadrature_data(positions, dofs.cell_dofs, order=3)
    field = np.sin(positions[:, 0]) + positions[:, 1] * positions[:, 2]
    g = quad.gradient(field)
    normal_part = np.abs(np.sum(g * quad.geometry.normal, axis=-1))
    assert np.all(normal_part <= 1e-12 * np.maximum(np.linalg.norm(g, axis=-1), 1e-300))
    print(f"✓ ∇_s(a·x) = {grad.round(12).tolist()}")


def test_laplace_beltrami_stiffness():
    """Bilineare Steifigkeitsmatrix des Einheitsquadrats"""
    print("\n" + "=" * 60)
    print("Test: Steifigkeitsmatrix")
    print("=" * 60)

    K = assemble_laplace_beltrami(UNIT_SQUARE, ONE_CELL).toarray()
    expected = np.array([
        [2 / 3, -1 / 6, -1 / 6, -1 / 3],
        [-1 / 6, 2 / 3, -1 / 3, -1 / 6],
        [-1 / 6, -1 / 3, 2 / 3, -1 / 6],
        [-1 / 3, -1 / 6, -1 / 6, 2 / 3],
    ])
    assert_allclose(K, expected, atol=1e-14)

    mesh = flat_grid(3, 2)
    dofs = duplicate_edge_nodes(mesh)
    K = assemble_laplace_beltrami(mesh.nodes[dofs.dof_node], dofs.cell_dofs).toarray()
    assert np.max(np.abs(K - K.T)) < 1e-14
    assert np.max(np.abs(K @ np.ones(len(K)))) < 1e-14
    print("✓ K symmetrisch, K·1 = 0")


def test_cube_area_and_duplicates():
    """Oberfläche und Doppelknoten am Würfel"""
    print("\n" + "=" * 60)
    print("Test: Würfel - Fläche und Doppelknoten")
    print("=" * 60)

    mesh = cube_mesh(2)
    assert abs(mesh.surface_area() - 6.0) < 1e-12
    mesh.validate()

    dofs = duplicate_edge_nodes(mesh)
    face = node_at(mesh, [0.5, 0.5, 0.0])
    edge = node_at(mesh, [0.5, 0.0, 0.0])
    corner = node_at(mesh, [0.0, 0.0, 0.0])
    assert len(dofs.node_dofs[face]) == 1
    assert len(dofs.node_dofs[edge]) == 2
    assert len(dofs.node_dofs[corner]) == 3

    n1, n2 = dofs.normals[list(dofs.node_dofs[edge])]
    assert abs(n1 @ n2) < 1e-14
    assert len(dofs.duplicates) == 12 * 1 + 8
    print(f"✓ {dofs.n_dofs} DOFs, {len(dofs.duplicates)} Doppelknoten")


def test_constrain_hanging():
    """Zwangsbedingungen hängender Knoten"""
    print("\n" + "=" * 60)
    print("Test: Hängende Knoten")
    print("=" * 60)

    values = np.array([2.0, 4.0, 0.0])
    assert_allclose(constrain_hanging(values, {2: ((0, 1), (0.5, 0.5))}), [2, 4, 3])
    assert_allclose(constrain_hanging(np.full(3, 5.0), {2: ((0, 1), (0.5, 0.5))}), [5, 5, 5])

    # Kette: 3 hängt an 2, 2 hängt an 0 und 1
    chain = HangingConstraints({2: ((0, 1), (0.5, 0.5)), 3: ((2, 1), (0.5, 0.5))})
    masters, weights = dict(chain.items())[3]
    assert masters.tolist() == [0, 1]
    assert_allclose(weights, [0.25, 0.75])

    with pytest.raises(MeshError):
        HangingConstraints({0: ((1,), (1.0,)), 1: ((0,), (1.0,))})
    print("✓ Kantenmitte, Ketten, Zyklen")


def test_vtk_and_listing(tmp_path):
    """VTK- und Listing-Dateien"""
    print("\n" + "=" * 60)
    print("Test: VTK / Listing")
    print("=" * 60)

    mesh = flat_grid(2, 2)
    phi = mesh.nodes[:, 0] * 0.1 + 1.0 / 3.0
    path = tmp_path / 'grid.vtk'
    write_vtk(path, mesh.nodes, mesh.cells, {'phi': phi}, {'level': mesh.levels})
    text = path.read_text(encoding='utf-8')
    assert text.startswith('# vtk DataFile') and 'UNSTRUCTURED_GRID' in text
    data = read_vtk(path)
    assert_allclose(data.positions, mesh.nodes, rtol=1e-14, atol=1e-14)
    assert np.array_equal(data.cells, mesh.cells)
    assert_allclose(data.point_data['phi'], phi, rtol=1e-14)
    assert np.array_equal(data.cell_data['level'], mesh.levels)
    assert vtk_io.main(['info', str(path)]) == 0
    assert vtk_io.main(['info']) == 2

    foreign = tmp_path / 'kein.vtk'
    foreign.write_text('kein Netz\n', encoding='utf-8')
    with pytest.raises(MeshError):
        read_vtk(foreign)
    assert vtk_io.main(['info', str(foreign)]) == 1

    with pytest.raises(ValueError):
        write_vtk(tmp_path / 'bad.vtk', mesh.nodes, mesh.cells, {'phi': phi[:-1]})

    listing = tmp_path / 'grid.mesh'
    write_listing(listing, mesh)
    again = read_listing(listing)
    assert_allclose(again.nodes, mesh.nodes, rtol=0, atol=0)
    assert np.array_equal(again.cells, mesh.cells)
    assert again.patch_regions == mesh.patch_regions
    print(f"✓ {path.name}, {listing.name}")


def main():
    """Führt alle Tests aus"""
    import tempfile
    from pathlib import Path

    print("=" * 60)
    print("Wellen-BEM - Netz-Test")
    print("=" * 60)

    def vtk_in_tempdir():
        with tempfile.TemporaryDirectory() as d:
            test_vtk_and_listing(Path(d))

    tests = [
        ("Formfunktionen", test_shape_values),
        ("Panel-Geometrie", test_panel_geometry),
        ("Flächengradient", test_surface_gradient),
        ("Steifigkeit", test_laplace_beltrami_stiffness),
        ("Würfel", test_cube_area_and_duplicates),
        ("Hängende Knoten", test_constrain_hanging),
        ("VTK/Listing", vtk_in_tempdir),
    ]
    return run_suite(tests)


if __name__ == '__main__':
    main_guard(main)
