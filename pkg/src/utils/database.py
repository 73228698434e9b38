"""
Lauf-Registry für Wellen-BEM
Verwendet Peewee ORM mit SQLite (<out>/runs.db)
"""

import logging
from datetime import datetime
from pathlib import Path
from typing import Optional

from peewee import *

logger = logging.getLogger(__name__)

# Datenbank-Instanz, Pfad wird erst in init_database() gesetzt
db = SqliteDatabase(None)

PRAGMAS = {
    'journal_mode': 'wal',
    'cache_size': -1024 * 16,  # 16MB Cache
    'foreign_keys': 1,
    'synchronous': 'NORMAL'
}


class BaseModel(Model):
    """Basis-Modell für alle Tabellen"""

    class Meta:
        database = db


class SimulationRun(BaseModel):
    """Ein Aufruf des Simulators"""

    id = AutoField()
    config_hash = CharField(max_length=64)  # SHA-256 der effektiven Konfiguration
    froude = FloatField()
    speed = FloatField()
    status = CharField(max_length=20, default='running')  # running, finished, failed
    exit_code = IntegerField(null=True)
    steps = IntegerField(default=0)
    t_final = FloatField(null=True)
    n_dofs = IntegerField(null=True)
    resumed_from = CharField(max_length=500, null=True)
    started_at = DateTimeField(default=datetime.now)
    finished_at = DateTimeField(null=True)

    class Meta:
        table_name = 'simulation_runs'
        indexes = (
            (('config_hash',), False),
        )

    def __str__(self):
        return f"SimulationRun(id={self.id}, Fr={self.froude:.3f}, status={self.status})"


class CheckpointRecord(BaseModel):
    """Geschriebene Checkpoints eines Laufs"""

    id = AutoField()
    run = ForeignKeyField(SimulationRun, backref='checkpoints', on_delete='CASCADE')
    path = CharField(max_length=500)
    t = FloatField()
    step = IntegerField()
    checksum = CharField(max_length=64)
    created_at = DateTimeField(default=datetime.now)

    class Meta:
        table_name = 'checkpoints'
        indexes = (
            (('run', 'step'), False),
        )

    def __str__(self):
        return f"CheckpointRecord(step={self.step}, t={self.t:.4f})"


def init_database(out_dir) -> Path:
    """Öffnet bzw. erstellt die Registry im Ausgabeverzeichnis"""
    path = Path(out_dir) / 'runs.db'
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if not db.is_closed():
            db.close()
        db.init(str(path), pragmas=PRAGMAS)
        db.connect()
        db.create_tables([SimulationRun, CheckpointRecord], safe=True)
        logger.info(f"Datenbank initialisiert: {path}")
    except Exception as e:
        logger.error(f"Fehler bei Datenbank-Initialisierung: {e}")
        raise
    return path


def close_database():
    """Schließt Datenbankverbindung"""
    if db.database is not None and not db.is_closed():
        db.close()
        logger.info("Datenbank geschlossen")


# Utility-Funktionen

def start_run(config_hash: str, froude: float, speed: float,
              resumed_from: Optional[str] = None) -> SimulationRun:
    """Legt einen neuen Lauf an"""
    return SimulationRun.create(config_hash=config_hash, froude=froude, speed=speed,
                                resumed_from=resumed_from)


def finish_run(run: SimulationRun, exit_code: int, steps: int = None,
               t_final: float = None, n_dofs: int = None):
    """Schließt einen Lauf mit Status und Exitcode ab"""
    run.exit_code = exit_code
    run.status = 'finished' if exit_code == 0 else 'failed'
    if steps is not None:
        run.steps = steps
    run.t_final = t_final
    run.n_dofs = n_dofs
    run.finished_at = datetime.now()
    run.save()


def add_checkpoint(run: SimulationRun, path: str, t: float, step: int,
                   checksum: str) -> CheckpointRecord:
    """Registriert einen geschriebenen Checkpoint"""
    return CheckpointRecord.create(run=run, path=str(path), t=t, step=step, checksum=checksum)


def latest_checkpoint(run: SimulationRun = None) -> Optional[CheckpointRecord]:
    """Jüngster Checkpoint (eines Laufs oder insgesamt)"""
    query = CheckpointRecord.select()
    if run is not None:
        query = query.where(CheckpointRecord.run == run)
    return query.order_by(CheckpointRecord.step.desc(), CheckpointRecord.id.desc()).first()


def get_runs_by_config(config_hash: str):
    """Alle Läufe mit derselben Konfiguration, neueste zuerst"""
    return SimulationRun.select().where(
        SimulationRun.config_hash == config_hash
    ).order_by(SimulationRun.started_at.desc())


def cleanup_old_checkpoints(run: SimulationRun, keep: int):
    """
    Löscht alte Checkpoints eines Laufs

    Args:
        keep: Anzahl der jüngsten Checkpoints, die erhalten bleiben
    """
    old = list(CheckpointRecord.select().where(CheckpointRecord.run == run)
               .order_by(CheckpointRecord.step.desc(), CheckpointRecord.id.desc()).offset(keep))
    for record in old:
        try:
            Path(record.path).unlink(missing_ok=True)
            record.delete_instance()
            logger.info(f"Checkpoint gelöscht: {record.path}")
        except Exception as e:
            logger.error(f"Fehler beim Löschen von {record.path}: {e}")
