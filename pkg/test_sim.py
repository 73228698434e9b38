#!/usr/bin/env python3
"""
Test-Script für Lauf-Steuerung, Ausgaben, Checkpoints, Registry und CLI
Läuft mit pytest oder direkt: python3 test_sim.py
"""

import logging
import tempfile
from pathlib import Path

import numpy as np
import pytest
import yaml

import main as cli
from src.adapt import Flag, RefinementFlags, execute_refinement
from src.dae import BdfIntegrator, BdfOptions
from src.dae.residual import HullForce
from src.mesh.vtk_io import read_vtk
from src.sim import (Checkpoint, Phase, RunLoopState, RunOutput, SimulationRunner, SteadyDetector,
                     apply_to, capture, load_checkpoint, resolve_resume, save_checkpoint,
                     verify_checkpoint, write_wave_profile)
from src.sim import checkpoint as checkpoint_cli
from src.utils import database
from src.utils.config import config
from src.utils.errors import CheckpointError, CheckpointVersionError, ConfigError
from testutils import coarse_scenario, flat_grid, main_guard, mirror_index, run_suite

# Setup Logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)


def decay(t, y, yp):
    return yp + y


def refined_mesh():
    mesh = flat_grid(2, 2)
    flags = np.full(mesh.n_cells, int(Flag.KEEP))
    flags[0] = Flag.REFINE
    refined, _ = execute_refinement(mesh, RefinementFlags(flags, 0.0, 0.0))
    return refined


def new_integrator():
    options = BdfOptions(rtol=1e-6, h_init=1e-3)
    return BdfIntegrator(decay, 0.0, np.array([1.0]), np.array([-1.0]),
                         np.array([True]), 1e-8, options)


def test_run_loop_state():
    """Phasen der Lauf-Schleife"""
    print("\n" + "=" * 60)
    print("Test: Lauf-Phasen")
    print("=" * 60)

    state = RunLoopState()
    assert state.phase == Phase.INITIALIZE
    with pytest.raises(RuntimeError):
        state.transition(Phase.FINALIZE)

    for phase in (Phase.INTEGRATE, Phase.ADAPT, Phase.INTEGRATE, Phase.FINALIZE):
        state.transition(phase)
    assert state.phase == Phase.FINALIZE
    with pytest.raises(RuntimeError):
        state.transition(Phase.INTEGRATE)

    assert not RunLoopState().wall_clock_exceeded()
    assert RunLoopState(wall_clock_limit=-1.0).wall_clock_exceeded()
    print("✓ initialize → integrate ⇄ adapt → finalize")


def test_steady_detector():
    """Stationarität erst nach der Rampe und über ein volles Fenster"""
    print("\n" + "=" * 60)
    print("Test: Stationaritätserkennung")
    print("=" * 60)

    detector = SteadyDetector(threshold=0.1, window=1.0, not_before=2.0)
    first = None
    for k in range(17):
        t = 0.25 * k
        if detector.update(t, 0.01) and first is None:
            first = t
    assert first == 3.0

    spiky = SteadyDetector(threshold=0.1, window=1.0, not_before=2.0)
    results = {}
    for k in range(17):
        t = 0.25 * k
        results[t] = spiky.update(t, 0.5 if t == 2.5 else 0.01)
    assert not results[3.0] and not results[3.5]
    assert results[3.75]

    restored = SteadyDetector(threshold=0.1, window=1.0, not_before=2.0)
    restored.restore(spiky.state())
    assert restored.update(4.25, 0.01) == spiky.update(4.25, 0.01)
    print(f"✓ stationär ab t = {first} s")


def test_checkpoint_round_trip():
    """Checkpoint schreiben, lesen und bitgenau reproduzieren"""
    print("\n" + "=" * 60)
    print("Test: Checkpoint")
    print("=" * 60)

    mesh = refined_mesh()
    integrator = new_integrator()
    integrator.integrate(0.3)
    run_state = {'accepted_steps': integrator.n_accepted, 'steady_samples': [[0.25, 0.5]]}

    with tempfile.TemporaryDirectory() as tmp:
        a = Path(tmp) / 'a.ckpt'
        b = Path(tmp) / 'sub' / 'b.ckpt'
        snapshot = capture(integrator, mesh, run_state)
        checksum = save_checkpoint(a, snapshot)
        assert save_checkpoint(b, snapshot) == checksum
        assert a.read_bytes() == b.read_bytes()
        assert verify_checkpoint(a) == (1, checksum)

        loaded = load_checkpoint(a)
        assert loaded.t == integrator.t
        assert np.array_equal(loaded.y, integrator.y)
        assert loaded.history_ts == integrator.history.ts
        assert loaded.order == integrator.order and loaded.h == integrator.h
        assert loaded.run_state == run_state
        assert np.array_equal(loaded.mesh.nodes, mesh.nodes)
        assert np.array_equal(loaded.mesh.cells, mesh.cells)
        assert np.array_equal(loaded.mesh.levels, mesh.levels)
        assert loaded.mesh.edge_midpoints == mesh.edge_midpoints
        assert sorted(loaded.mesh.hanging) == sorted(mesh.hanging)
        assert sorted(loaded.mesh.family_table) == sorted(mesh.family_table)

        restarted = new_integrator()
        apply_to(loaded, restarted)
        assert np.array_equal(restarted.integrate(0.6), integrator.integrate(0.6))
        assert restarted.n_accepted == integrator.n_accepted
    print(f"✓ sha256 {checksum[:16]}…, Neustart bitgenau")


def test_checkpoint_corruption():
    """Beschädigte Dateien und fremde Versionen werden abgewiesen"""
    print("\n" + "=" * 60)
    print("Test: Checkpoint-Prüfung")
    print("=" * 60)

    snapshot = Checkpoint(mesh=flat_grid(1, 1), t=0.5, y=np.arange(3.0), yp=np.zeros(3),
                          history_ts=[0.5, 0.4], history_ys=[np.arange(3.0), np.ones(3)])
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / 'ok.ckpt'
        save_checkpoint(path, snapshot)
        data = path.read_bytes()
        assert checkpoint_cli.main(['verify', str(path)]) == 0
        assert checkpoint_cli.main(['verify']) == 2

        flipped = Path(tmp) / 'flipped.ckpt'
        flipped.write_bytes(data[:-1] + bytes([data[-1] ^ 0xFF]))
        with pytest.raises(CheckpointError):
            load_checkpoint(flipped)
        assert checkpoint_cli.main(['verify', str(flipped)]) == CheckpointError.exit_code

        newer = Path(tmp) / 'newer.ckpt'
        newer.write_bytes(data.replace(b'version 1\n', b'version 2\n', 1))
        with pytest.raises(CheckpointVersionError):
            verify_checkpoint(newer)

        foreign = Path(tmp) / 'foreign.ckpt'
        foreign.write_bytes(b'hello\nworld\n')
        with pytest.raises(CheckpointError):
            load_checkpoint(foreign)
        with pytest.raises(CheckpointError):
            load_checkpoint(Path(tmp) / 'missing.ckpt')
    print("✓ Prüfsumme, Version und Kopf geprüft")


def test_run_outputs():
    """CSV-Protokolle und Wellenprofil"""
    print("\n" + "=" * 60)
    print("Test: Ausgaben")
    print("=" * 60)

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        with RunOutput(out) as output:
            output.log_force(0.5, HullForce(np.array([1.0, 0.0, -2.0]), 0.3, 0.01))
        with RunOutput(out, append=True) as output:
            output.log_force(0.75, HullForce(np.array([1.5, 0.0, -2.0]), 0.3, 0.015))

        lines = (out / 'forces.csv').read_text(encoding='utf-8').splitlines()
        assert lines == ['t,Fx,Fy,Fz,wetted_area,Cw',
                         '0.5,1.0,0.0,-2.0,0.3,0.01',
                         '0.75,1.5,0.0,-2.0,0.3,0.015']
        assert (out / 'steps.csv').read_text(encoding='utf-8').startswith('step,t,h,order')

        profile = out / 'profiles' / 'profile_port.csv'
        write_wave_profile(profile, np.array([[0.5, 0.25], [0.1, -0.5]]))
        text = profile.read_text(encoding='utf-8').splitlines()
        assert text == ['x_over_L,eta_prime', '0.5,0.25', '0.10000000000000001,-0.5']
        back = np.loadtxt(profile, delimiter=',', skiprows=1)
        assert np.array_equal(back, [[0.5, 0.25], [0.1, -0.5]])
    print("✓ Kopfzeilen, Anhängen, 17 signifikante Stellen")


def test_database():
    """Lauf-Registry mit Peewee/SQLite"""
    print("\n" + "=" * 60)
    print("Test: Lauf-Registry")
    print("=" * 60)

    with tempfile.TemporaryDirectory() as tmp:
        try:
            path = database.init_database(tmp)
            assert path.exists()
            run = database.start_run('ab' * 32, 0.25, 1.238)
            assert run.status == 'running'

            files = []
            for step in (10, 20):
                f = Path(tmp) / f'checkpoint_{step:06d}.ckpt'
                f.write_bytes(b'x')
                files.append(f)
                database.add_checkpoint(run, str(f), 0.01 * step, step, 'cd' * 32)
            assert database.latest_checkpoint(run).step == 20

            database.finish_run(run, 3, 25, 1.5, 400)
            stored = database.SimulationRun.get_by_id(run.id)
            assert stored.status == 'failed' and stored.exit_code == 3 and stored.steps == 25
            assert database.get_runs_by_config('ab' * 32).count() == 1

            database.cleanup_old_checkpoints(run, keep=1)
            assert not files[0].exists() and files[1].exists()
            assert database.CheckpointRecord.select().count() == 1
        finally:
            database.close_database()
    print("✓ Lauf, Checkpoints, Aufräumen")


def test_short_run():
    """Kurzer Lauf beim Anfahren: Artefakte, Symmetrie, Registry, bitgenaue Fortsetzung"""
    print("\n" + "=" * 60)
    print("Test: Kurzer Lauf und Fortsetzung")
    print("=" * 60)

    with tempfile.TemporaryDirectory() as tmp:
        try:
            config.set('adapt.enabled', False)
            config.set('output.vtk_interval', 2)
            config.set('output.checkpoint_interval', 1)
            config.set('output.keep_checkpoints', 3)
            config.set('output.dump_matrices', True)
            scenario = coarse_scenario(speed=1.0, t_end=0.04)

            out = Path(tmp) / 'a'
            runner = SimulationRunner(scenario, out)
            summary = runner.run()
            assert summary.exit_code == 0 and not summary.steady
            assert summary.t_final == pytest.approx(0.04, abs=1e-12)
            assert summary.steps >= 3

            for name in ('forces.csv', 'steps.csv', 'vtk_series.csv', 'config_effective.yaml',
                         'runs.db', 'fields_000000.vtk', 'profile_port.csv',
                         'profile_starboard.csv', 'checkpoint_final.ckpt',
                         'matrices/bem_000000_N.mtx', 'matrices/bem_000000_D.mtx'):
                assert (out / name).exists(), name

            steps = np.loadtxt(out / 'steps.csv', delimiter=',', skiprows=1, ndmin=2)
            assert len(steps) == summary.steps
            assert np.all(np.isfinite(steps))
            assert np.all(steps[:, -1] >= 0.0)
            forces = np.loadtxt(out / 'forces.csv', delimiter=',', skiprows=1, ndmin=2)
            assert len(forces) == summary.steps and np.all(np.isfinite(forces))
            assert np.all(np.abs(forces[:, 2]) <= 1e-3 * np.max(np.abs(forces[:, 3])))

            series = (out / 'vtk_series.csv').read_text(encoding='utf-8').splitlines()[1:]
            assert series[0].split(',')[0] == '0'
            assert all((out / line.split(',')[2]).exists() for line in series)
            snapshot = read_vtk(out / 'fields_000000.vtk')
            assert snapshot.positions.shape == (runner.problem.n_dofs, 3)
            assert np.all(np.isfinite(snapshot.point_data['eta']))

            problem, y = runner.problem, runner.integrator.y
            fs = np.flatnonzero(problem.free_surface)
            mirror = mirror_index(problem.reference[fs])
            x, _, _ = problem.layout.unpack(y)
            eta = problem.geometry(x)[fs, 2]
            assert np.all(np.isfinite(y))
            assert np.max(np.abs(eta - eta[mirror])) <= 1e-6 + 1e-2 * np.max(np.abs(eta))
            print(f"✓ {summary.steps} Schritte bis t = {summary.t_final:.3f} s, "
                  f"{len(series)} VTK-Dateien, max |η| = {np.max(np.abs(eta)):.2e} m")

            database.init_database(out)
            records = list(database.CheckpointRecord.select().order_by(
                database.CheckpointRecord.step, database.CheckpointRecord.id))
            database.close_database()
            assert len(records) == 3
            assert len(list(out.glob('checkpoint_*.ckpt'))) == 3
            assert all(Path(r.path).exists() for r in records)
            assert resolve_resume(out) == str(out / 'checkpoint_final.ckpt')
            with pytest.raises(CheckpointError):
                resolve_resume(Path(tmp))
            print(f"✓ Registry: Schritte {[r.step for r in records]}, jüngster = final")

            resumed = SimulationRunner(scenario, Path(tmp) / 'b', resume=records[0].path)
            summary_b = resumed.run()
            assert summary_b.steps == summary.steps
            assert np.array_equal(resumed.integrator.y, runner.integrator.y)
            last_a = (out / 'steps.csv').read_text(encoding='utf-8').splitlines()[-1]
            last_b = (Path(tmp) / 'b' / 'steps.csv').read_text(encoding='utf-8').splitlines()[-1]
            assert last_a == last_b
            print(f"✓ Fortsetzung ab Schritt {records[0].step} bitgenau")
        finally:
            database.close_database()
            config.reset()


def test_config():
    """YAML-Konfiguration: Defaults, Überschreiben, Fehler, Echo"""
    print("\n" + "=" * 60)
    print("Test: Konfiguration")
    print("=" * 60)

    with tempfile.TemporaryDirectory() as tmp:
        try:
            config.load(str(Path(tmp) / 'fehlt.yaml'))
            assert config.get('scenario.froude') == 0.25
            assert config.get('beach.nu', 7.0) == 7.0
            assert config.get('gibt.es.nicht', 'x') == 'x'

            good = Path(tmp) / 'good.yaml'
            good.write_text("scenario:\n  froude: 0.316\nunbekannt:\n  a: 1\n", encoding='utf-8')
            config.load(str(good))
            assert config.get('scenario.froude') == 0.316
            assert config.get('scenario.ramp_time') == 2.0

            config.set('adapt.max_dofs', 5000)
            assert config.get('adapt.max_dofs') == 5000
            assert config.dump() == config.dump()
            echo = Path(tmp) / 'out' / 'config_effective.yaml'
            config.save(str(echo))
            assert yaml.safe_load(echo.read_text(encoding='utf-8')) == config.all

            for text in ("scenario: [\n", "- 1\n- 2\n", "scenario: 3\n"):
                bad = Path(tmp) / 'bad.yaml'
                bad.write_text(text, encoding='utf-8')
                with pytest.raises(ConfigError):
                    config.load(str(bad))
        finally:
            config.reset()
    print("✓ Defaults, Abschnitte, ungültige Dateien")


def test_cli():
    """Kommandozeile: Argumente und Exitcodes"""
    print("\n" + "=" * 60)
    print("Test: Kommandozeile")
    print("=" * 60)

    args = cli.parse_args(['--config', 'c.yaml', '--froude', '0.316', '--t-end', '2',
                           '--max-dofs', '5000', '--out', 'runs/a'])
    assert args.config == 'c.yaml' and args.froude == 0.316
    assert args.t_end == 2.0 and args.max_dofs == 5000 and args.out == 'runs/a'
    assert args.resume is None
    with pytest.raises(SystemExit):
        cli.parse_args(['--froude', '0.25'])

    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    with tempfile.TemporaryDirectory() as tmp:
        try:
            broken = Path(tmp) / 'broken.yaml'
            broken.write_text("scenario: [\n", encoding='utf-8')
            assert cli.main(['--config', str(broken)]) == ConfigError.exit_code

            invalid = Path(tmp) / 'invalid.yaml'
            invalid.write_text(yaml.safe_dump({
                'scenario': {'ramp_time': 'schnell'},
                'logging': {'file': str(Path(tmp) / 'wavebem.log')},
            }), encoding='utf-8')
            assert cli.main(['--config', str(invalid)]) == ConfigError.exit_code
        finally:
            for handler in list(root.handlers):
                root.removeHandler(handler)
                if handler not in handlers:
                    handler.close()
            for handler in handlers:
                root.addHandler(handler)
            root.setLevel(level)
            config.reset()
    print("✓ Argumente, Exitcode 2 bei Konfigurationsfehlern")


def main():
    """Führt alle Tests aus"""
    print("=" * 60)
    print("Wellen-BEM - Lauf-Test")
    print("=" * 60)

    tests = [
        ("Lauf-Phasen", test_run_loop_state),
        ("Stationarität", test_steady_detector),
        ("Checkpoint", test_checkpoint_round_trip),
        ("Checkpoint-Prüfung", test_checkpoint_corruption),
        ("Ausgaben", test_run_outputs),
        ("Registry", test_database),
        ("Kurzer Lauf", test_short_run),
        ("Konfiguration", test_config),
        ("Kommandozeile", test_cli),
    ]
    return run_suite(tests)


if __name__ == '__main__':
    main_guard(main)
