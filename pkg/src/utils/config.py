"""
Konfigurations-Loader für Wellen-BEM
Lädt YAML-Konfiguration und stellt sie bereit
"""

import copy
import logging
from pathlib import Path
from typing import Any, Dict

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)


DEFAULTS: Dict[str, Any] = {
    'hull': {
        'length': 2.5,
        'beam': 0.25,
        'draft': 0.15625,
    },
    'basin': {
        'inflow_lengths': 1.0,       # Abstand Einlass vor dem Bug (in L)
        'outflow_lengths': 3.0,      # Abstand Auslass hinter dem Heck (in L)
        'half_width_lengths': 1.5,
        'depth_lengths': 1.0,
    },
    'mesh': {
        'hull_nx': 16,               # Panels entlang des Rumpfes
        'hull_nz': 3,                # Panels über den Tiefgang
        'ahead_nx': 4,               # Panels vor dem Bug
        'behind_nx': 10,             # Panels hinter dem Heck
        'side_ny': 6,                # Panels vom Rumpf bis zur Seitenwand
        'depth_nz': 3,               # Panels über die Beckentiefe
        'side_grading': 1.3,         # Streckung quer zum Rumpf
    },
    'beach': {
        'start_lengths': 1.5,        # x_d hinter dem Heck (in L)
        'length_lengths': 1.5,       # L_d (in L)
        'nu': None,                  # Dämpfungskoeffizient (m/s), None = V∞
    },
    'supg': {
        'enabled': True,
        'c': 1.0,
        'cutoff_speed': 1e-8,
        'quad_order': 3,
    },
    'scenario': {
        'froude': 0.250,
        'speed': None,               # überschreibt froude, falls gesetzt
        'ramp_time': 2.0,
        't_end': 6.0,
        'steady_factor': 1e-4,       # |dη/dt| < steady_factor·V∞
        'steady_window': 1.0,
    },
    'physics': {
        'g': 9.81,
        'rho': 1000.0,
        'p_atm': 0.0,
    },
    'solver': {
        'bem_quad_order': 4,
        'bem_near_order': 8,
        'bem_singular_order': 8,
        'bem_near_factor': 2.0,
        'gmres_restart': 100,
        'gmres_rtol': 1e-10,
        'gmres_maxiter': 2000,
        'lu_fallback': True,
        'rtol': 1e-4,
        'atol_coord': 1e-6,
        'atol_phi': 1e-6,
        'newton_tol': 1e-3,
        'newton_maxiter': 8,
        'newton_gmres_rtol': 1e-4,
        'jacobian': 'frozen_bem',    # frozen_bem oder full
        'max_order': 5,
        'h_init': 0.01,
        'h_min': 1e-8,
        'h_max': 0.2,
        'safety': 0.9,
        'smoothing_method': 'cg',     # cg oder direct
        'smoothing_rtol': 1e-12,
        'smoothing_order': 3,
        'projection_tol': 1e-10,
        'projection_maxiter': 50,
    },
    'adapt': {
        'enabled': True,
        'interval': 50,
        'refine_fraction': 0.3,
        'coarsen_fraction': 0.1,
        'h_min_lengths': 1.0 / 200.0,
        'max_dofs': 8000,
    },
    'output': {
        'dir': './out',
        'vtk_interval': 10,
        'checkpoint_interval': 50,
        'wall_clock_limit': None,    # Sekunden
        'keep_checkpoints': 0,       # 0 = alle behalten
        'dump_matrices': False,      # BEM-Matrizen als Matrix Market nach <out>/matrices
    },
    'logging': {
        'level': 'INFO',
        'file': './wavebem.log',
        'max_size_mb': 10,
        'backup_count': 5,
    },
    'performance': {
        'threads': None,             # None = WAVEBEM_THREADS oder physische Kerne
        'row_block': 64,
    },
}


class Config:
    """Singleton-Konfigurationsklasse"""

    _instance = None
    _config: Dict[str, Any] = {}

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._config:
            self.reset()

    def load(self, config_path: str = 'config.yaml'):
        """
        Lädt Konfiguration aus YAML-Datei

        Werte der Datei überschreiben die Defaults abschnittsweise.
        Eine fehlende Datei führt zu Defaults, eine unlesbare zu ConfigError.
        """
        config_file = Path(config_path)

        if not config_file.exists():
            logger.warning(f"Config-Datei {config_path} nicht gefunden. Verwende Defaults.")
            self.reset()
            return

        try:
            with open(config_file, 'r', encoding='utf-8') as f:
                loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Config-Datei {config_path} ist kein gültiges YAML: {e}") from e

        if not isinstance(loaded, dict):
            raise ConfigError(f"Config-Datei {config_path} muss ein Mapping enthalten")

        self.reset()
        for section, values in loaded.items():
            if section not in self._config:
                logger.warning(f"Unbekannter Config-Abschnitt '{section}' wird ignoriert")
                continue
            if not isinstance(values, dict):
                raise ConfigError(f"Config-Abschnitt '{section}' muss ein Mapping sein")
            for key, value in values.items():
                if key not in self._config[section]:
                    logger.warning(f"Unbekannter Config-Schlüssel '{section}.{key}'")
                self._config[section][key] = value

        logger.info(f"Konfiguration geladen von {config_path}")

    def reset(self):
        """Setzt alle Werte auf die Defaults zurück"""
        self._config = copy.deepcopy(DEFAULTS)

    def get(self, key: str, default: Any = None) -> Any:
        """
        Holt Konfigurationswert mit Punkt-Notation

        Beispiel:
            config.get('solver.rtol')
            config.get('hull.length', 2.5)
        """
        keys = key.split('.')
        value = self._config

        try:
            for k in keys:
                value = value[k]
            return default if value is None else value
        except (KeyError, TypeError):
            return default

    def set(self, key: str, value: Any):
        """Setzt Konfigurationswert mit Punkt-Notation"""
        keys = key.split('.')
        config = self._config

        for k in keys[:-1]:
            if k not in config:
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def dump(self) -> str:
        """Serialisiert die effektive Konfiguration deterministisch"""
        return yaml.safe_dump(self._config, default_flow_style=False,
                              allow_unicode=True, sort_keys=True)

    def save(self, config_path: str):
        """Speichert aktuelle Konfiguration (bit-identisches Echo)"""
        path = Path(config_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dump(), encoding='utf-8')
        logger.info(f"Konfiguration gespeichert nach {config_path}")

    @property
    def all(self) -> Dict[str, Any]:
        """Gibt gesamte Konfiguration zurück"""
        return self._config


# Globale Config-Instanz
config = Config()
