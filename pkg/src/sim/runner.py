"""
Lauf-Schleife: initialisieren → integrieren ⇄ adaptieren → abschließen
"""

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Deque, Dict, Optional, Tuple

import psutil

from .checkpoint import apply_to, capture, load_checkpoint, save_checkpoint, sha256_hex
from .output import RunOutput
from ..adapt.cycle import AdaptParams, adapt_problem
from ..adapt.transfer import restart_after_adapt
from ..dae.bdf import BdfIntegrator, BdfOptions
from ..dae.residual import ShipWaveProblem
from ..hull.domain import Domain, build_initial_domain
from ..hull.scenario import Scenario
from ..utils import database
from ..utils.config import Config, config
from ..utils.errors import CheckpointError, WallClockExceeded, WaveBemError

logger = logging.getLogger(__name__)


class Phase(Enum):
    INITIALIZE = 'initialize'
    INTEGRATE = 'integrate'
    ADAPT = 'adapt'
    FINALIZE = 'finalize'


TRANSITIONS = {
    Phase.INITIALIZE: {Phase.INTEGRATE},
    Phase.INTEGRATE: {Phase.ADAPT, Phase.FINALIZE},
    Phase.ADAPT: {Phase.INTEGRATE},
    Phase.FINALIZE: set(),
}


def _rss_mb() -> float:
    return psutil.Process().memory_info().rss / 1024 ** 2


@dataclass
class RunLoopState:
    """Phase, Zähler und Wandzeitbudget der Lauf-Schleife"""

    wall_clock_limit: Optional[float] = None
    phase: Phase = Phase.INITIALIZE
    accepted_steps: int = 0
    adapt_count: int = 0
    ramp_adapted: bool = False
    started: float = field(default_factory=time.monotonic)

    def transition(self, phase: Phase):
        """
        Raises:
            RuntimeError: unzulässiger Phasenwechsel
        """
        if phase not in TRANSITIONS[self.phase]:
            raise RuntimeError(f"Unzulässiger Phasenwechsel {self.phase.value} → {phase.value}")
        logger.info(f"Phase {self.phase.value} → {phase.value} "
                    f"(Schritt {self.accepted_steps}, RSS {_rss_mb():.0f} MB)")
        self.phase = phase

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.started

    def wall_clock_exceeded(self) -> bool:
        return self.wall_clock_limit is not None and self.elapsed > self.wall_clock_limit

    def as_dict(self) -> Dict[str, Any]:
        return {'accepted_steps': self.accepted_steps, 'adapt_count': self.adapt_count,
                'ramp_adapted': self.ramp_adapted}


class SteadyDetector:
    """
    Stationär, wenn max |dη/dt| über ein volles Zeitfenster unter der Schwelle bleibt

    Vor not_before (Ende der Rampe) wird nie stationär gemeldet.
    """

    def __init__(self, threshold: float, window: float, not_before: float = 0.0):
        self.threshold = threshold
        self.window = window
        self.not_before = not_before
        self.samples: Deque[Tuple[float, float]] = deque()

    def update(self, t: float, deta_dt_max: float) -> bool:
        self.samples.append((float(t), float(deta_dt_max)))
        while len(self.samples) > 1 and self.samples[1][0] <= t - self.window:
            self.samples.popleft()
        start = self.samples[0][0]
        if start < self.not_before or t - start < self.window:
            return False
        return max(v for _, v in self.samples) < self.threshold

    def state(self):
        return [list(s) for s in self.samples]

    def restore(self, samples):
        self.samples = deque((float(t), float(v)) for t, v in samples or [])


@dataclass
class RunSummary:
    exit_code: int
    t_final: float
    steps: int
    n_dofs: int
    steady: bool
    out_dir: Path


def resolve_resume(resume) -> str:
    """
    Checkpoint-Datei oder Ausgabeverzeichnis eines früheren Laufs

    Für ein Verzeichnis wird der jüngste Checkpoint aus dessen Registry
    (runs.db) genommen.

    Raises:
        CheckpointError: keine Registry oder kein registrierter Checkpoint
    """
    path = Path(resume)
    if not path.is_dir():
        return str(path)
    if not (path / 'runs.db').exists():
        raise CheckpointError(f"Keine Lauf-Registry in {path}")
    database.init_database(path)
    try:
        record = database.latest_checkpoint()
    finally:
        database.close_database()
    if record is None:
        raise CheckpointError(f"Keine Checkpoints in {path / 'runs.db'} registriert")
    logger.info(f"Fortsetzung von {record.path} (Schritt {record.step}, t={record.t:.4f} s)")
    return record.path


def _new_integrator(problem: ShipWaveProblem, t0: float, y0, yp0,
                    options: BdfOptions) -> BdfIntegrator:
    return BdfIntegrator(problem.residual, t0, y0, yp0, problem.differential, problem.atol,
                         options=options, linearize=problem.linearize)


class SimulationRunner:
    """Führt einen Lauf durch und schreibt alle Artefakte"""

    def __init__(self, scenario: Scenario, out_dir, cfg: Config = config,
                 resume: Optional[str] = None):
        self.scenario = scenario
        self.out_dir = Path(out_dir)
        self.cfg = cfg
        self.resume = resume
        self.state = RunLoopState(wall_clock_limit=cfg.get('output.wall_clock_limit'))
        self.steady = SteadyDetector(scenario.steady_threshold(), scenario.steady_window,
                                     not_before=scenario.ramp_time)
        self.options = BdfOptions.from_config()
        self.adapt_params = AdaptParams.from_config(scenario.hull.length)
        self.adapt_enabled = bool(cfg.get('adapt.enabled', True))
        self.adapt_interval = int(cfg.get('adapt.interval', 50))
        self.vtk_interval = int(cfg.get('output.vtk_interval', 10))
        self.checkpoint_interval = int(cfg.get('output.checkpoint_interval', 50))
        self.keep_checkpoints = int(cfg.get('output.keep_checkpoints', 0))
        self.dump_matrices = bool(cfg.get('output.dump_matrices', False))
        self.problem: Optional[ShipWaveProblem] = None
        self.integrator: Optional[BdfIntegrator] = None
        self.run_record = None
        self.output: Optional[RunOutput] = None

    # Phasen

    def initialize(self):
        if self.resume:
            checkpoint = load_checkpoint(self.resume)
            domain = Domain(mesh=checkpoint.mesh, hull=self.scenario.hull)
            self.problem = ShipWaveProblem(domain, self.scenario)
            self.integrator = _new_integrator(self.problem, checkpoint.t, checkpoint.y,
                                              checkpoint.yp, self.options)
            apply_to(checkpoint, self.integrator)
            run_state = checkpoint.run_state
            self.state.accepted_steps = int(run_state.get('accepted_steps', 0))
            self.state.adapt_count = int(run_state.get('adapt_count', 0))
            self.state.ramp_adapted = bool(run_state.get('ramp_adapted', False))
            self.output.vtk_index = int(run_state.get('vtk_index', 0))
            self.steady.restore(run_state.get('steady_samples'))
            logger.info(f"Lauf fortgesetzt bei t={checkpoint.t:.4f} s, "
                        f"Schritt {self.state.accepted_steps}")
            if self.dump_matrices:
                self.dump_bem()
            return

        domain = build_initial_domain(self.scenario.hull, self.scenario)
        self.problem = ShipWaveProblem(domain, self.scenario)
        y0, yp0 = self.problem.initial_state(0.0)
        self.integrator = _new_integrator(self.problem, 0.0, y0, yp0, self.options)
        self.integrator.make_consistent()
        self.output.write_fields(self.problem, 0.0, self.integrator.y, self.integrator.yp)
        if self.dump_matrices:
            self.dump_bem()

    def _adapt_due(self) -> bool:
        if not self.adapt_enabled:
            return False
        if not self.state.ramp_adapted and self.integrator.t >= self.scenario.ramp_time:
            return True
        return self.adapt_interval > 0 and self.state.accepted_steps % self.adapt_interval == 0

    def adapt(self):
        self.state.transition(Phase.ADAPT)
        integrator = self.integrator
        if integrator.t >= self.scenario.ramp_time:
            self.state.ramp_adapted = True
        outcome = adapt_problem(self.problem, integrator.y, integrator.yp, self.adapt_params)
        if outcome.changed:
            self.problem = outcome.problem
            restart_after_adapt(integrator, self.problem, outcome.y, outcome.yp)
            if self.dump_matrices:
                self.dump_bem()
        self.state.adapt_count += 1
        self.output.log_adapt(self.state.accepted_steps, integrator.t, self.problem, outcome)
        self.state.transition(Phase.INTEGRATE)

    def dump_bem(self) -> Path:
        """BEM-Matrizen der aktuellen Konfiguration nach <out>/matrices"""
        problem = self.problem
        x, _, _ = problem.layout.unpack(self.integrator.y)
        directory = self.out_dir / 'matrices'
        problem.assemble_bem(problem.geometry(x)).dump_matrix_market(
            directory, prefix=f'bem_{self.state.accepted_steps:06d}')
        return directory

    def checkpoint(self, name: Optional[str] = None) -> Path:
        integrator = self.integrator
        run_state = self.state.as_dict()
        run_state['vtk_index'] = self.output.vtk_index
        run_state['steady_samples'] = self.steady.state()
        path = self.out_dir / (name or f'checkpoint_{self.state.accepted_steps:06d}.ckpt')
        checksum = save_checkpoint(path, capture(integrator, self.problem.mesh, run_state))
        if self.run_record is not None:
            database.add_checkpoint(self.run_record, str(path), integrator.t,
                                    self.state.accepted_steps, checksum)
            if self.keep_checkpoints > 0:
                database.cleanup_old_checkpoints(self.run_record, self.keep_checkpoints)
        return path

    def integrate(self) -> bool:
        """Integriert bis t_end oder Stationarität; True bei Stationarität"""
        integrator = self.integrator
        t_end = self.scenario.t_end
        while integrator.t < t_end - 1e-12 * t_end:
            record = integrator.step(t_stop=t_end)
            self.state.accepted_steps += 1
            problem, y, yp = self.problem, integrator.y, integrator.yp

            beach_power = problem.beach_absorption(y)
            if beach_power < 0.0:
                logger.warning(f"Negative Strandleistung {beach_power:.3e} bei t={record.t:.4f} s")
            self.output.log_step(self.state.accepted_steps, record, problem, y, yp, beach_power)
            self.output.log_force(record.t, problem.hull_force(record.t, y, yp))
            logger.info(f"Schritt {self.state.accepted_steps}: t={record.t:.4f} s, "
                        f"h={record.h:.3e} s, q={record.order}, "
                        f"Newton {record.newton_iterations}")

            if self.vtk_interval > 0 and self.state.accepted_steps % self.vtk_interval == 0:
                self.output.write_fields(problem, record.t, y, yp)

            if self.steady.update(record.t, problem.free_surface_stats(y, yp)['deta_dt_max']):
                logger.info(f"Stationärer Zustand erreicht bei t={record.t:.4f} s")
                return True

            if self._adapt_due():
                self.adapt()

            if self.checkpoint_interval > 0 and \
                    self.state.accepted_steps % self.checkpoint_interval == 0:
                self.checkpoint()

            if self.state.wall_clock_exceeded():
                path = self.checkpoint('checkpoint_wallclock.ckpt')
                raise WallClockExceeded(f"Wandzeit {self.state.elapsed:.0f} s überschritten, "
                                        f"Checkpoint {path}")
        return False

    def finalize(self, steady: bool) -> RunSummary:
        self.state.transition(Phase.FINALIZE)
        integrator, problem = self.integrator, self.problem
        self.output.write_fields(problem, integrator.t, integrator.y, integrator.yp)
        self.output.write_profiles(problem, integrator.y, self.scenario.speed, self.scenario.g)
        self.checkpoint('checkpoint_final.ckpt')
        logger.info(f"Lauf beendet: t={integrator.t:.4f} s, {self.state.accepted_steps} Schritte, "
                    f"{integrator.n_rejected} Ablehnungen, {problem.n_dofs} DOFs, "
                    f"{self.state.elapsed:.1f} s Wandzeit")
        return RunSummary(0, integrator.t, self.state.accepted_steps, problem.n_dofs, steady,
                          self.out_dir)

    def run(self) -> RunSummary:
        """
        Raises:
            WaveBemError: typisierte Fehler mit Exitcode (Konfiguration, Löser, Geometrie, Wandzeit)
        """
        if self.resume:
            self.resume = resolve_resume(self.resume)
        self.output = RunOutput(self.out_dir, append=self.resume is not None)
        self.output.write_config(self.cfg)
        database.init_database(self.out_dir)
        config_hash = sha256_hex(self.cfg.dump().encode('utf-8'))
        previous = database.get_runs_by_config(config_hash).count()
        if previous:
            logger.info(f"Registry kennt {previous} Läufe mit derselben Konfiguration")
        self.run_record = database.start_run(config_hash, self.scenario.froude, self.scenario.speed,
                                             resumed_from=self.resume)
        try:
            self.initialize()
            self.state.transition(Phase.INTEGRATE)
            steady = self.integrate()
            summary = self.finalize(steady)
            database.finish_run(self.run_record, 0, self.state.accepted_steps, summary.t_final,
                                summary.n_dofs)
            return summary
        except WaveBemError as e:
            t = self.integrator.t if self.integrator is not None else None
            database.finish_run(self.run_record, e.exit_code, self.state.accepted_steps, t,
                                self.problem.n_dofs if self.problem is not None else None)
            raise
        except BaseException:
            database.finish_run(self.run_record, 1, self.state.accepted_steps)
            raise
        finally:
            self.output.close()
            database.close_database()


def run_simulation(scenario: Scenario, out_dir, cfg: Config = config,
                   resume: Optional[str] = None) -> RunSummary:
    """Führt einen vollständigen Lauf aus (siehe SimulationRunner)"""
    return SimulationRunner(scenario, out_dir, cfg, resume).run()
