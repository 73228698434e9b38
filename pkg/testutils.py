"""
Hilfen für die Test-Scripts: kleine Netze und die Zusammenfassung
"""

import sys
import time

import numpy as np
from scipy.spatial import cKDTree

from src.freesurface.conditions import BeachParams
from src.hull.scenario import BasinLayout, MeshResolution, Scenario
from src.hull.wigley import WigleyHull
from src.mesh.surface import ReferenceMesh, Region

# Kleinstes sinnvolles Startnetz um den Wigley-Rumpf
COARSE = MeshResolution(hull_nx=4, hull_nz=1, ahead_nx=1, behind_nx=2, side_ny=2, depth_nz=1)


def coarse_scenario(speed: float = 0.0, **overrides) -> Scenario:
    """Standard-Wigley im Standardbecken, Strand auf den letzten 1.5 L"""
    hull = WigleyHull()
    basin = BasinLayout.around(hull)
    settings = dict(hull=hull, speed=speed, ramp_time=1.0, basin=basin,
                    beach=BeachParams(x_d=5.0, length=3.75, nu=max(speed, 1.0)),
                    mesh=COARSE, t_end=1.0)
    settings.update(overrides)
    return Scenario(**settings)


def flat_grid(nx: int, ny: int, width: float = 1.0, height: float = 1.0,
              region: Region = Region.FREE_SURFACE) -> ReferenceMesh:
    """Ebenes nx×ny-Gitter in z = 0, Normale +z, eine Fläche"""
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    nodes = np.array([[x, y, 0.0] for y in ys for x in xs])

    def node(i, j):
        return j * (nx + 1) + i

    cells = [(node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1))
             for j in range(ny) for i in range(nx)]
    return ReferenceMesh(nodes, cells, np.zeros(len(cells), dtype=np.int64), {0: region})


def cube_mesh(m: int) -> ReferenceMesh:
    """
    Einheitswürfel [0,1]³, m×m Panels je Seite, Normalen nach außen

    Jede Seite ist eine eigene Fläche (2·Achse + Seite).
    """
    index = {}
    points = []

    def add(p):
        key = tuple(np.round(p, 12) + 0.0)
        if key not in index:
            index[key] = len(points)
            points.append(np.array(p, dtype=float))
        return index[key]

    s = np.linspace(0.0, 1.0, m + 1)
    cells, patches = [], []
    for axis in range(3):
        i_ax, j_ax = [a for a in range(3) if a != axis]
        for side, value in enumerate((0.0, 1.0)):
            expected = np.zeros(3)
            expected[axis] = 1.0 if side else -1.0
            ids = np.empty((m + 1, m + 1), dtype=np.int64)
            grid = np.zeros((m + 1, m + 1, 3))
            for i in range(m + 1):
                for j in range(m + 1):
                    grid[i, j, axis] = value
                    grid[i, j, i_ax] = s[i]
                    grid[i, j, j_ax] = s[j]
                    ids[i, j] = add(grid[i, j])
            for i in range(m):
                for j in range(m):
                    c00, c10, c01, c11 = ids[i, j], ids[i + 1, j], ids[i, j + 1], ids[i + 1, j + 1]
                    t_u = grid[i + 1, j] - grid[i, j]
                    t_v = grid[i, j + 1] - grid[i, j]
                    if np.dot(np.cross(t_u, t_v), expected) < 0:
                        c10, c01 = c01, c10
                    cells.append((c00, c10, c01, c11))
                    patches.append(2 * axis + side)

    regions = {p: Region.FAR_FIELD for p in range(6)}
    return ReferenceMesh(np.array(points), np.array(cells), np.array(patches), regions)


def node_at(mesh: ReferenceMesh, point) -> int:
    """Knotennummer an einem Punkt"""
    hits = np.flatnonzero(np.all(np.isclose(mesh.nodes, point, atol=1e-12), axis=1))
    if len(hits) != 1:
        raise KeyError(f"Kein eindeutiger Knoten bei {point}")
    return int(hits[0])


def mirror_index(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Index des an y = 0 gespiegelten Punkts für jeden Punkt"""
    mirrored = points * np.array([1.0, -1.0, 1.0])
    dist, index = cKDTree(points).query(mirrored)
    if np.max(dist, initial=0.0) > tol:
        raise KeyError(f"Punktmenge nicht spiegelsymmetrisch (Abstand {np.max(dist):.1e})")
    return index


def run_suite(tests) -> int:
    """Führt (Name, Funktion)-Paare aus und druckt die Zusammenfassung"""
    results = {}

    for name, test_func in tests:
        try:
            test_func()
            results[name] = True
        except KeyboardInterrupt:
            print("\n\n⚠️  Test abgebrochen")
            break
        except AssertionError as e:
            print(f"✗ {name}: {e}")
            results[name] = False
        except Exception as e:
            print(f"\n✗ Unerwarteter Fehler in {name}: {type(e).__name__}: {e}")
            results[name] = False

        time.sleep(0.05)

    # Zusammenfassung
    print("\n" + "=" * 60)
    print("Zusammenfassung")
    print("=" * 60)

    passed = sum(1 for result in results.values() if result)
    total = len(results)

    for name, result in results.items():
        status = "✓ PASS" if result else "✗ FAIL"
        print(f"{status:10} {name}")

    print(f"\n{passed}/{total} Tests erfolgreich")

    if passed == total:
        print("\n🎉 Alle Tests bestanden!")
        return 0
    print("\n⚠️  Einige Tests fehlgeschlagen")
    return 1


def main_guard(main):
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\nAbgebrochen")
        sys.exit(130)
