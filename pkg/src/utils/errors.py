"""
Ausnahmen für Wellen-BEM
Jede Ausnahme trägt den Exitcode, mit dem die CLI beendet wird
"""


class WaveBemError(Exception):
    """Basisklasse aller Fehler des Simulators"""

    exit_code = 1


class ConfigError(WaveBemError, ValueError):
    """Ungültige oder widersprüchliche Konfiguration"""

    exit_code = 2


class MeshError(WaveBemError, ValueError):
    """Fehler in Netz-Topologie oder Netz-Daten"""

    exit_code = 4


class DegeneratePanelError(MeshError):
    """Panel mit Jacobi-Determinante unterhalb der Toleranz"""

    def __init__(self, panel: int, jacobian: float, message: str = None):
        self.panel = panel
        self.jacobian = jacobian
        super().__init__(message or f"Entartetes Panel {panel} (J={jacobian:.3e})")


class GeometryError(MeshError):
    """Verknotete oder entartete aktuelle Konfiguration (wiederholbar)"""


class ProjectionError(MeshError):
    """Projektion auf Rumpf oder freie Oberfläche divergiert"""


class SolverError(WaveBemError, RuntimeError):
    """Fehler in einem linearen oder nichtlinearen Löser"""

    exit_code = 3


class ConvergenceError(SolverError):
    """Iteration hat die Toleranz nicht erreicht"""

    def __init__(self, message: str, iterations: int = None, residual: float = None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class SingularSystemError(SolverError):
    """System ist singulär (z. B. reines Neumann-Problem)"""


class IntegrationError(SolverError):
    """Zeitintegration abgebrochen (z. B. Schrittweite unter h_min)"""


class CheckpointError(WaveBemError, IOError):
    """Checkpoint-Datei beschädigt oder nicht lesbar"""

    exit_code = 3


class CheckpointVersionError(CheckpointError):
    """Checkpoint wurde mit einer anderen Formatversion geschrieben"""


class WallClockExceeded(WaveBemError):
    """Wandzeit-Budget überschritten"""

    exit_code = 5
