#!/usr/bin/env python3
"""
Test-Script für die Randelementmethode (Kerne, Quadratur, Assemblierung, Löser)
Läuft mit pytest oder direkt: python3 test_bem.py
"""

import logging
import tempfile
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import io as scipy_io

from src.adapt import Flag, RefinementFlags, execute_refinement
from src.bem import (LinearSolverParams, MixedBcAssignment, QuadratureRule, assemble_system,
                     duffy_vertex_rule, evaluate_interior_potential, green_function,
                     green_normal_gradient, solve_mixed_bvp)
from src.mesh import CurrentConfiguration, duplicate_edge_nodes, gauss_rule, map_points
from src.utils.errors import SingularSystemError
from testutils import cube_mesh, main_guard, node_at, run_suite

# Setup Logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

QUAD = QuadratureRule(regular=6, near=10, singular=10, near_factor=2.0)
SOLVER = LinearSolverParams(restart=100, rtol=1e-12, maxiter=2000, lu_fallback=True)


@lru_cache(maxsize=None)
def cube_system(m: int = 4):
    """Würfel, DOFs und assembliertes System (einmal je Auflösung)"""
    mesh = cube_mesh(m)
    dofs = duplicate_edge_nodes(mesh)
    positions = mesh.nodes[dofs.dof_node]
    configuration = CurrentConfiguration(positions, dofs.cell_dofs)
    system = assemble_system(configuration, point_ids=dofs.dof_node, quad=QUAD, threads=1)
    return mesh, dofs, positions, configuration, system


def test_kernels():
    """Fundamentallösung und Normalableitung"""
    print("\n" + "=" * 60)
    print("Test: Kerne")
    print("=" * 60)

    assert abs(green_function([1.0, 0.0, 0.0]) - 1.0 / (4.0 * np.pi)) < 1e-16
    assert abs(green_function([0.0, 2.0, 0.0]) - 0.5 * green_function([1.0, 0.0, 0.0])) < 1e-16
    assert abs(green_function([3.0, 4.0, 0.0]) - 1.0 / (20.0 * np.pi)) < 1e-16
    r = np.array([0.3, -1.2, 0.7])
    assert green_function(r) == green_function(-r)

    n = np.array([0.0, 0.0, 1.0])
    assert green_normal_gradient([1.0, 0.0, 0.0], n) == 0.0
    assert abs(green_normal_gradient([0.0, 0.0, 1.0], n) + 1.0 / (4.0 * np.pi)) < 1e-16
    assert green_normal_gradient(r, -n) == -green_normal_gradient(r, n)

    with pytest.raises(ValueError):
        green_function([0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        green_normal_gradient([0.0, 0.0, 0.0], n)
    print("✓ G = 1/(4π|r|), ∂G/∂n = −(r·n)/(4π|r|³)")


def test_duffy_rule():
    """Singuläre Quadratur gegen eine fein unterteilte Referenz"""
    print("\n" + "=" * 60)
    print("Test: Duffy-Regel")
    print("=" * 60)

    for vertex, corner in enumerate(([0, 0], [1, 0], [0, 1], [1, 1])):
        points, weights = duffy_vertex_rule(vertex, 12)
        assert np.all(weights > 0)
        assert abs(weights.sum() - 1.0) < 1e-14
        r = np.linalg.norm(points - np.array(corner, dtype=float), axis=1)
        value = np.sum(weights / (4.0 * np.pi * r))
        # ∫∫ 1/|x| über [0,1]² = 2·ln(1 + √2)
        exact = 2.0 * np.log(1.0 + np.sqrt(2.0)) / (4.0 * np.pi)
        assert abs(value - exact) < 1e-8 * exact

    with pytest.raises(ValueError):
        duffy_vertex_rule(4, 8)
    print("✓ 1/(4π|r|) mit Eckensingularität, rel. Fehler < 1e-8")


def test_far_panel_entry():
    """Ferne Panels verhalten sich wie Punktquellen"""
    print("\n" + "=" * 60)
    print("Test: Fernfeld-Eintrag")
    print("=" * 60)

    source = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
    target = source + np.array([0.3, -0.2, 12.0])
    positions = np.vstack([source, target])
    cells = np.array([[0, 1, 2, 3], [4, 5, 6, 7]])
    system = assemble_system(CurrentConfiguration(positions, cells), quad=QUAD, threads=1)

    x0 = target[0]
    r = np.array([0.5, 0.5, 0.0]) - x0
    n = np.array([0.0, 0.0, 1.0])
    oracle = -(r @ n) / (4.0 * np.pi * np.linalg.norm(r) ** 3)
    panel_sum = system.N[4, :4].sum()
    assert abs(panel_sum - oracle) < 0.05 * abs(oracle)

    # Kollokationspunkt in der Panelebene
    assert np.all(system.N[0, :4] == 0.0)
    print(f"✓ Σ N = {panel_sum:.6e}, Punktquelle {oracle:.6e}")


def test_alpha_rigid_mode():
    """Raumwinkel am Würfel aus der Starrkörpermode"""
    print("\n" + "=" * 60)
    print("Test: α am Würfel")
    print("=" * 60)

    mesh, dofs, _, _, system = cube_system()
    bottom = 4  # Fläche z = 0
    front = 2   # Fläche y = 0
    face = dofs.dof_of(node_at(mesh, [0.5, 0.5, 0.0]), bottom)
    edge = dofs.dof_of(node_at(mesh, [0.5, 0.0, 0.0]), bottom)
    corner = dofs.dof_of(node_at(mesh, [0.0, 0.0, 0.0]), front)

    assert abs(system.alpha[face] - 0.5) < 1e-10
    assert abs(system.alpha[edge] - 0.25) < 1e-10
    assert abs(system.alpha[corner] - 0.125) < 1e-10
    assert system.rigid_mode_defect() < 1e-14
    print(f"✓ α = {system.alpha[face]:.8f} / {system.alpha[edge]:.8f} / "
          f"{system.alpha[corner]:.8f}")


def test_mixed_bvp_rigid_mode():
    """φ ≡ 1 auf dem Dirichlet-Teil, φn ≡ 0 sonst"""
    print("\n" + "=" * 60)
    print("Test: Gemischtes Problem, Konstante")
    print("=" * 60)

    mesh, dofs, positions, _, system = cube_system()
    top = dofs.dof_patch == 5
    bc = MixedBcAssignment(top, 1.0, 0.0)
    phi, phin = solve_mixed_bvp(system, bc, SOLVER)
    assert_allclose(phi, 1.0, atol=1e-8)
    assert_allclose(phin, 0.0, atol=1e-8)

    with pytest.raises(SingularSystemError):
        solve_mixed_bvp(system, MixedBcAssignment(np.zeros(system.n, dtype=bool), 0.0, 0.0),
                        SOLVER)
    print("✓ Starrkörpermode reproduziert, reines Neumann-Problem erkannt")


def linear_field_error(m: int) -> float:
    """Relativer L2-Fehler von φ = x auf den Neumann-DOFs des m×m-Würfels"""
    mesh, dofs, positions, _, system = cube_system(m)
    top = dofs.dof_patch == 5
    bc = MixedBcAssignment(top, positions[:, 0], dofs.normals[:, 0])
    phi, phin = solve_mixed_bvp(system, bc, SOLVER)

    neumann = ~top
    assert np.max(np.abs(phin[top])) < 1e-6
    return np.linalg.norm(phi[neumann] - positions[neumann, 0]) / \
        np.linalg.norm(positions[neumann, 0])


def test_mixed_bvp_linear_field():
    """φ = x: Dirichlet oben, Neumann φn = n_x sonst"""
    print("\n" + "=" * 60)
    print("Test: Gemischtes Problem, φ = x")
    print("=" * 60)

    coarse = linear_field_error(8)
    fine = linear_field_error(16)
    assert coarse <= 1e-9
    assert fine < coarse
    print(f"✓ rel. L2-Fehler {coarse:.2e} (8×8) → {fine:.2e} (16×16)")


def test_hanging_collocation():
    """Kollokation an hängenden Knoten einer verfeinerten Würfelseite"""
    print("\n" + "=" * 60)
    print("Test: Hängende Kollokationspunkte")
    print("=" * 60)

    mesh = cube_mesh(4)
    centroids = mesh.nodes[mesh.cells].mean(axis=1)
    bottom = np.flatnonzero(mesh.patches == 4)
    target = bottom[np.argmin(np.linalg.norm(centroids[bottom] - [0.375, 0.375, 0.0], axis=1))]
    flags = np.full(mesh.n_cells, int(Flag.KEEP))
    flags[target] = Flag.REFINE
    refined, _ = execute_refinement(mesh, RefinementFlags(flags, 0.0, 0.0))

    dofs = duplicate_edge_nodes(refined)
    hanging = dofs.constraints.constrained
    assert len(hanging) == 4
    positions = refined.nodes[dofs.dof_node]
    system = assemble_system(CurrentConfiguration(positions, dofs.cell_dofs),
                             point_ids=dofs.dof_node, quad=QUAD, threads=1)
    assert_allclose(system.alpha[hanging], 0.5, atol=1e-10)
    assert system.rigid_mode_defect() < 1e-12

    top = dofs.dof_patch == 5
    bc = MixedBcAssignment(top, positions[:, 0], dofs.normals[:, 0])
    phi, _ = solve_mixed_bvp(system, bc, SOLVER)
    error = np.max(np.abs(phi[hanging] - positions[hanging, 0]))
    assert error < 1e-8
    print(f"✓ {len(hanging)} hängende DOFs, α = {system.alpha[hanging].min():.12f}, "
          f"max |φ − x| = {error:.1e}")


def test_matrix_market_export():
    """N, D und α im Matrix-Market-Format"""
    print("\n" + "=" * 60)
    print("Test: Matrix-Market-Export")
    print("=" * 60)

    _, _, _, _, system = cube_system(2)
    with tempfile.TemporaryDirectory() as tmp:
        system.dump_matrix_market(tmp, prefix='wuerfel')
        N = scipy_io.mmread(str(Path(tmp) / 'wuerfel_N.mtx')).toarray()
        D = scipy_io.mmread(str(Path(tmp) / 'wuerfel_D.mtx')).toarray()
        alpha = scipy_io.mmread(str(Path(tmp) / 'wuerfel_alpha.mtx')).toarray()
    assert np.array_equal(N, system.N)
    assert np.array_equal(D, system.D)
    assert np.array_equal(alpha[:, 0], system.alpha)
    print(f"✓ {system.n}×{system.n}, bitgenau zurückgelesen")


def test_interior_potential():
    """Darstellungsformel im Inneren"""
    print("\n" + "=" * 60)
    print("Test: Innenpotential")
    print("=" * 60)

    _, dofs, positions, configuration, _ = cube_system()
    center = [0.5, 0.5, 0.5]
    ones = np.ones(dofs.n_dofs)
    zeros = np.zeros(dofs.n_dofs)
    value = evaluate_interior_potential(center, ones, zeros, configuration)
    assert abs(value - 1.0) < 1e-6

    phi_x = positions[:, 0]
    phin_x = dofs.normals[:, 0]
    at_center = evaluate_interior_potential(center, phi_x, phin_x, configuration)
    assert abs(at_center - 0.5) < 1e-3

    a, b = 2.0, -3.0
    combined = evaluate_interior_potential(center, a * ones + b * phi_x, b * phin_x,
                                           configuration)
    assert abs(combined - (a * value + b * at_center)) < 1e-12
    print(f"✓ φ≡1 → {value:.8f}, φ=x → {at_center:.6f}")


def test_panel_area_from_geometry():
    """Quadraturgewichte × J ergeben die Würfeloberfläche"""
    mesh, dofs, positions, _, _ = cube_system()
    points, weights = gauss_rule(2)
    geo = map_points(positions[dofs.cell_dofs], points)
    assert abs(np.sum(geo.jacobian @ weights) - 6.0) < 1e-12


def main():
    """Führt alle Tests aus"""
    print("=" * 60)
    print("Wellen-BEM - Randelement-Test")
    print("=" * 60)

    tests = [
        ("Kerne", test_kernels),
        ("Duffy-Regel", test_duffy_rule),
        ("Fernfeld", test_far_panel_entry),
        ("α Würfel", test_alpha_rigid_mode),
        ("BVP Konstante", test_mixed_bvp_rigid_mode),
        ("BVP φ = x", test_mixed_bvp_linear_field),
        ("Hängende Kollokation", test_hanging_collocation),
        ("Matrix-Market", test_matrix_market_export),
        ("Innenpotential", test_interior_potential),
        ("Würfelfläche", test_panel_area_from_geometry),
    ]
    return run_suite(tests)


if __name__ == '__main__':
    main_guard(main)
