"""
Ausgaben eines Laufs: VTK-Serie, Wellenprofile, Kraft-, Schritt- und Adaptionsprotokolle
"""

import csv
import logging
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from ..dae.bdf import StepRecord
from ..dae.residual import HullForce, ShipWaveProblem
from ..freesurface.conditions import GRAVITY
from ..mesh.vtk_io import write_vtk
from ..utils.config import Config

logger = logging.getLogger(__name__)

VTK_PATTERN = 'fields_{:06d}.vtk'
VTK_POINT_FIELDS = ('phi', 'phin', 'eta', 'p')

CSV_HEADERS = {
    'forces.csv': ['t', 'Fx', 'Fy', 'Fz', 'wetted_area', 'Cw'],
    'steps.csv': ['step', 't', 'h', 'order', 'newton_iterations', 'residual_norm', 'error',
                  'accepted', 'n_dofs', 'eta_max', 'eta_min', 'deta_dt_max', 'beach_power'],
    'adapt.csv': ['step', 't', 'n_cells', 'n_dofs', 'tau_max', 'tau_min', 'refined',
                  'coarsened', 'blocked'],
    'vtk_series.csv': ['index', 't', 'file'],
}


def wave_profile(problem: ShipWaveProblem, y: np.ndarray, speed: float, side: int = 1,
                 g: float = GRAVITY) -> np.ndarray:
    """
    Dimensionsloses Wellenprofil entlang der Wasserlinie, Bug → Heck

    Returns:
        Array (n, 2) mit Spalten x/L und η′ = 2gη/V∞²

    Raises:
        ValueError: V∞ = 0 (Profil nicht definiert)
    """
    if speed <= 0.0:
        raise ValueError("Wellenprofil für V∞ = 0 nicht definiert")
    profile = problem.waterline_profile(y, side)
    length = problem.domain.hull.length
    return np.column_stack([profile[:, 0] / length, eta_prime(profile[:, 1], speed, g)])


def eta_prime(eta, speed: float, g: float = GRAVITY):
    """η′ = 2gη/V∞²"""
    if speed <= 0.0:
        raise ValueError("η′ für V∞ = 0 nicht definiert")
    return 2.0 * g * np.asarray(eta, dtype=float) / speed ** 2


def write_wave_profile(path, samples: np.ndarray):
    """Schreibt (x/L, η′)-Zeilen mit 17 signifikanten Stellen"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.asarray(samples, dtype=float).reshape(-1, 2), delimiter=',',
               header='x_over_L,eta_prime', comments='', fmt='%.17g')
    logger.debug(f"Wellenprofil geschrieben: {path}")


def write_fields_vtk(path, problem: ShipWaveProblem, fields: Dict[str, np.ndarray],
                     positions: np.ndarray, t: float):
    """
    Schreibt Punktfelder und Regionen als Legacy-VTK

    Raises:
        ValueError: keine Felder angegeben
    """
    point_data = {name: fields[name] for name in VTK_POINT_FIELDS if name in fields}
    if not point_data:
        raise ValueError("Keine Felder zum Schreiben")
    cell_data = {
        'region': problem.mesh.regions.astype(np.int64),
        'level': problem.mesh.levels.astype(np.int64),
    }
    write_vtk(path, positions, problem.dofs.cell_dofs, point_data, cell_data)
    logger.debug(f"Felder bei t={t:.6f} s nach {path} geschrieben")


class RunOutput:
    """Alle Dateien eines Laufs im Ausgabeverzeichnis"""

    def __init__(self, out_dir, append: bool = False):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.vtk_index = 0
        self._files = {}
        self._writers = {}
        for name, header in CSV_HEADERS.items():
            path = self.out_dir / name
            exists = append and path.exists()
            f = open(path, 'a' if exists else 'w', newline='', encoding='utf-8')
            writer = csv.writer(f)
            if not exists:
                writer.writerow(header)
            self._files[name] = f
            self._writers[name] = writer

    def _row(self, name: str, values):
        self._writers[name].writerow([repr(v) if isinstance(v, float) else v for v in values])
        self._files[name].flush()

    def write_config(self, cfg: Config) -> Path:
        """Echo der effektiven Konfiguration"""
        path = self.out_dir / 'config_effective.yaml'
        cfg.save(str(path))
        return path

    def log_step(self, step: int, record: StepRecord, problem: ShipWaveProblem,
                 y: np.ndarray, yp: np.ndarray, beach_power: float):
        stats = problem.free_surface_stats(y, yp)
        self._row('steps.csv', [step, record.t, record.h, record.order, record.newton_iterations,
                                float(record.residual_norm), float(record.error),
                                int(record.accepted), problem.n_dofs, stats['eta_max'],
                                stats['eta_min'], stats['deta_dt_max'], float(beach_power)])

    def log_force(self, t: float, force: HullForce):
        fx, fy, fz = (float(v) for v in force.force)
        self._row('forces.csv', [float(t), fx, fy, fz, float(force.wetted_area),
                                 float(force.drag_coefficient)])

    def log_adapt(self, step: int, t: float, problem: ShipWaveProblem, outcome):
        self._row('adapt.csv', [step, float(t), problem.mesh.n_cells, problem.n_dofs,
                                outcome.errors.max, outcome.errors.min, outcome.report.refined,
                                outcome.report.coarsened, outcome.report.blocked])

    def write_fields(self, problem: ShipWaveProblem, t: float, y: np.ndarray,
                     yp: np.ndarray) -> Path:
        path = self.out_dir / VTK_PATTERN.format(self.vtk_index)
        x, _, _ = problem.layout.unpack(y)
        write_fields_vtk(path, problem, problem.fields(t, y, yp), problem.geometry(x), t)
        self._row('vtk_series.csv', [self.vtk_index, float(t), path.name])
        self.vtk_index += 1
        return path

    def write_profiles(self, problem: ShipWaveProblem, y: np.ndarray,
                       speed: float, g: float = GRAVITY) -> Optional[Dict[str, Path]]:
        """Profile für Backbord und Steuerbord; None bei ruhendem Schiff"""
        if speed <= 0.0:
            logger.info("V∞ = 0: kein Wellenprofil geschrieben")
            return None
        paths = {}
        for name, side in (('port', 1), ('starboard', -1)):
            path = self.out_dir / f'profile_{name}.csv'
            write_wave_profile(path, wave_profile(problem, y, speed, side, g))
            paths[name] = path
        logger.info(f"Wellenprofile geschrieben nach {self.out_dir}")
        return paths

    def close(self):
        for f in self._files.values():
            f.close()
        self._files.clear()
        self._writers.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
