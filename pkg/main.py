#!/usr/bin/env python3
"""
Wellen-BEM - Hauptprogramm

Instationäre, nichtlineare Schiffswellen um den Wigley-Rumpf
(Randelemente, ALE-Netzbewegung, BDF-Zeitintegration, Netzadaption)
"""

import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

import colorlog

# Imports aus src
from src import __version__
from src.hull.scenario import Scenario
from src.sim.runner import run_simulation
from src.utils.config import config
from src.utils.errors import ConfigError, WaveBemError

EXIT_INTERRUPTED = 130


def setup_logging():
    """Konfiguriert Logging"""
    log_level = str(config.get('logging.level', 'INFO')).upper()
    log_file = config.get('logging.file', './wavebem.log')
    max_size_mb = config.get('logging.max_size_mb', 10)
    backup_count = config.get('logging.backup_count', 5)
    level = getattr(logging, log_level, logging.INFO)

    # Root Logger
    logger = logging.getLogger()
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    # Console Handler (farbig)
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(colorlog.ColoredFormatter(
        '%(log_color)s%(asctime)s - %(name)s - %(levelname)s%(reset)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        log_colors={
            'DEBUG': 'cyan',
            'INFO': 'green',
            'WARNING': 'yellow',
            'ERROR': 'red',
            'CRITICAL': 'bold_red',
        }
    ))
    logger.addHandler(console_handler)

    # File Handler (mit Rotation)
    Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    file_handler = RotatingFileHandler(
        log_file,
        maxBytes=int(max_size_mb * 1024 * 1024),
        backupCount=backup_count,
        encoding='utf-8'
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    ))
    logger.addHandler(file_handler)

    logger.info("=" * 60)
    logger.info(f"Wellen-BEM {__version__} gestartet")
    logger.info("=" * 60)


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog='wavebem',
        description='Instationäre Schiffswellen um den Wigley-Rumpf (Randelementmethode)')
    parser.add_argument('--config', required=True, help='YAML-Konfigurationsdatei')
    parser.add_argument('--froude', type=float, help='Froude-Zahl (überschreibt die Konfiguration)')
    parser.add_argument('--t-end', type=float, dest='t_end', help='Endzeit in s')
    parser.add_argument('--max-dofs', type=int, dest='max_dofs', help='Obergrenze der DOFs')
    parser.add_argument('--resume', help='Checkpoint-Datei oder Ausgabeverzeichnis '
                        '(jüngster Checkpoint laut Registry)')
    parser.add_argument('--out', help='Ausgabeverzeichnis')
    return parser.parse_args(argv)


def main(argv=None) -> int:
    """Hauptprogramm, gibt den Exitcode zurück"""
    args = parse_args(argv)

    try:
        config.load(args.config)
    except ConfigError as e:
        print(f"✗ {e}", file=sys.stderr)
        return e.exit_code

    if args.max_dofs is not None:
        config.set('adapt.max_dofs', args.max_dofs)
    if args.out is not None:
        config.set('output.dir', args.out)

    setup_logging()
    logger = logging.getLogger(__name__)

    try:
        scenario = Scenario.from_config(froude=args.froude, t_end=args.t_end)
        out_dir = Path(config.get('output.dir', './out'))
        logger.info(f"Ausgabe nach {out_dir}")

        summary = run_simulation(scenario, out_dir, config, resume=args.resume)
        logger.info(f"Fertig: t={summary.t_final:.4f} s, {summary.steps} Schritte, "
                    f"{summary.n_dofs} DOFs{' (stationär)' if summary.steady else ''}")
        return summary.exit_code

    except KeyboardInterrupt:
        logger.info("Beendet durch Benutzer (Ctrl+C)")
        return EXIT_INTERRUPTED

    except WaveBemError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code

    except Exception as e:
        logger.exception(f"Kritischer Fehler: {e}")
        return 1


if __name__ == '__main__':
    sys.exit(main())
