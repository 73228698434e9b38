"""Lauf-Steuerung, Ausgaben und Checkpoints"""

from .checkpoint import (Checkpoint, apply_to, capture, load_checkpoint, save_checkpoint,
                         verify_checkpoint)
from .output import RunOutput, eta_prime, wave_profile, write_fields_vtk, write_wave_profile
from .runner import (Phase, RunLoopState, RunSummary, SimulationRunner, SteadyDetector,
                     resolve_resume, run_simulation)

__all__ = [
    'Checkpoint', 'apply_to', 'capture', 'load_checkpoint', 'save_checkpoint',
    'verify_checkpoint',
    'RunOutput', 'eta_prime', 'wave_profile', 'write_fields_vtk', 'write_wave_profile',
    'Phase', 'RunLoopState', 'RunSummary', 'SimulationRunner', 'SteadyDetector',
    'resolve_resume', 'run_simulation',
]
