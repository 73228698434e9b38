"""
Checkpoints: Netz, Zustand und BDF-Historie mit SHA-256-Prüfsumme

Dateiaufbau:
    WAVEBEM-CHECKPOINT
    version <n>
    sha256 <hex über den Rest der Datei>
    <Länge des YAML-Kopfes in Bytes>
    <YAML-Kopf><npy-Blöcke>

Verwendung:
    python -m src.sim.checkpoint verify <datei>
"""

import io
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np
import yaml
from cryptography.hazmat.primitives import hashes

from ..dae.bdf import BdfIntegrator
from ..mesh.surface import Family, ReferenceMesh
from ..utils.errors import CheckpointError, CheckpointVersionError

logger = logging.getLogger(__name__)

MAGIC = b'WAVEBEM-CHECKPOINT'
VERSION = 1


@dataclass
class Checkpoint:
    """Alles, was für einen bitgenauen Neustart nötig ist"""

    mesh: ReferenceMesh
    t: float
    y: np.ndarray
    yp: np.ndarray
    history_ts: List[float]
    history_ys: List[np.ndarray]
    order: int = 1
    h: float = 0.01
    steps_at_order: int = 0
    consecutive_rejects: int = 0
    n_accepted: int = 0
    n_rejected: int = 0
    run_state: Dict[str, Any] = field(default_factory=dict)


def sha256_hex(data: bytes) -> str:
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize().hex()


def capture(integrator: BdfIntegrator, mesh: ReferenceMesh,
            run_state: Dict[str, Any] = None) -> Checkpoint:
    """Momentaufnahme von Integrator und Netz"""
    return Checkpoint(
        mesh=mesh.copy(),
        t=float(integrator.t),
        y=integrator.y.copy(),
        yp=integrator.yp.copy(),
        history_ts=list(integrator.history.ts),
        history_ys=[y.copy() for y in integrator.history.ys],
        order=int(integrator.order),
        h=float(integrator.h),
        steps_at_order=int(integrator.steps_at_order),
        consecutive_rejects=int(integrator.consecutive_rejects),
        n_accepted=int(integrator.n_accepted),
        n_rejected=int(integrator.n_rejected),
        run_state=dict(run_state or {}),
    )


def apply_to(checkpoint: Checkpoint, integrator: BdfIntegrator):
    """Überträgt den gespeicherten Integratorzustand (Historie, Ordnung, h)"""
    integrator.t = checkpoint.t
    integrator.y = checkpoint.y.copy()
    integrator.yp = checkpoint.yp.copy()
    integrator.history.ts = list(checkpoint.history_ts)
    integrator.history.ys = [y.copy() for y in checkpoint.history_ys]
    integrator.order = checkpoint.order
    integrator.h = checkpoint.h
    integrator.steps_at_order = checkpoint.steps_at_order
    integrator.consecutive_rejects = checkpoint.consecutive_rejects
    integrator.n_accepted = checkpoint.n_accepted
    integrator.n_rejected = checkpoint.n_rejected


# Netz ↔ Arrays

def _mesh_arrays(mesh: ReferenceMesh) -> Dict[str, np.ndarray]:
    families = sorted(mesh.family_table.items())
    family_rows = [(k, *f.corners, f.patch, f.level, f.family, f.center) for k, f in families]
    midpoints = sorted(mesh.edge_midpoints.items())
    parents = sorted(mesh.node_parents.items())
    return {
        'mesh_nodes': mesh.nodes,
        'mesh_cells': mesh.cells,
        'mesh_patches': mesh.patches,
        'mesh_levels': mesh.levels,
        'mesh_families': mesh.families,
        'mesh_patch_regions': np.array(sorted((p, int(r)) for p, r in mesh.patch_regions.items()),
                                       dtype=np.int64).reshape(-1, 2),
        'mesh_family_table': np.array(family_rows, dtype=np.int64).reshape(-1, 9),
        'mesh_edge_midpoints': np.array([(a, b, m) for (a, b), m in midpoints],
                                        dtype=np.int64).reshape(-1, 3),
        'mesh_node_parents': np.array([(n, *p, *([-1] * (4 - len(p)))) for n, p in parents],
                                      dtype=np.int64).reshape(-1, 5),
    }


def _mesh_from_arrays(arrays: Dict[str, np.ndarray]) -> ReferenceMesh:
    mesh = ReferenceMesh(
        nodes=arrays['mesh_nodes'],
        cells=arrays['mesh_cells'],
        patches=arrays['mesh_patches'],
        patch_regions={int(p): int(r) for p, r in arrays['mesh_patch_regions']},
        levels=arrays['mesh_levels'],
        families=arrays['mesh_families'],
        family_table={int(r[0]): Family(tuple(int(c) for c in r[1:5]), int(r[5]), int(r[6]),
                                        int(r[7]), int(r[8]))
                      for r in arrays['mesh_family_table']},
        edge_midpoints={(int(a), int(b)): int(m) for a, b, m in arrays['mesh_edge_midpoints']},
        node_parents={int(r[0]): tuple(int(p) for p in r[1:] if p >= 0)
                      for r in arrays['mesh_node_parents']},
    )
    mesh.update_hanging()
    return mesh


# Serialisierung

def _encode(checkpoint: Checkpoint) -> bytes:
    arrays = _mesh_arrays(checkpoint.mesh)
    arrays['y'] = checkpoint.y
    arrays['yp'] = checkpoint.yp
    arrays['history_ts'] = np.array(checkpoint.history_ts, dtype=float)
    arrays['history_ys'] = np.array(checkpoint.history_ys, dtype=float).reshape(
        len(checkpoint.history_ys), -1)
    arrays['scalars'] = np.array([checkpoint.t, checkpoint.h], dtype=float)

    blobs, manifest = [], []
    for name in sorted(arrays):
        buffer = io.BytesIO()
        np.save(buffer, np.ascontiguousarray(arrays[name]), allow_pickle=False)
        blob = buffer.getvalue()
        blobs.append(blob)
        manifest.append({'name': name, 'nbytes': len(blob)})

    header = {
        'arrays': manifest,
        'order': checkpoint.order,
        'steps_at_order': checkpoint.steps_at_order,
        'consecutive_rejects': checkpoint.consecutive_rejects,
        'n_accepted': checkpoint.n_accepted,
        'n_rejected': checkpoint.n_rejected,
        'run_state': checkpoint.run_state,
    }
    header_bytes = yaml.safe_dump(header, sort_keys=True, allow_unicode=True).encode('utf-8')
    return f'{len(header_bytes)}\n'.encode('ascii') + header_bytes + b''.join(blobs)


def _decode(payload: bytes) -> Checkpoint:
    newline = payload.index(b'\n')
    n_header = int(payload[:newline])
    start = newline + 1
    header = yaml.safe_load(payload[start:start + n_header].decode('utf-8'))
    offset = start + n_header

    arrays = {}
    for entry in header['arrays']:
        blob = payload[offset:offset + entry['nbytes']]
        arrays[entry['name']] = np.load(io.BytesIO(blob), allow_pickle=False)
        offset += entry['nbytes']
    if offset != len(payload):
        raise CheckpointError("Checkpoint enthält überzählige Bytes")

    t, h = arrays['scalars']
    return Checkpoint(
        mesh=_mesh_from_arrays(arrays),
        t=float(t),
        y=arrays['y'],
        yp=arrays['yp'],
        history_ts=[float(v) for v in arrays['history_ts']],
        history_ys=[row.copy() for row in arrays['history_ys']],
        order=int(header['order']),
        h=float(h),
        steps_at_order=int(header['steps_at_order']),
        consecutive_rejects=int(header['consecutive_rejects']),
        n_accepted=int(header['n_accepted']),
        n_rejected=int(header['n_rejected']),
        run_state=header.get('run_state') or {},
    )


def save_checkpoint(path, checkpoint: Checkpoint) -> str:
    """
    Schreibt einen Checkpoint atomar (temporäre Datei + Umbenennen)

    Returns:
        SHA-256-Prüfsumme der Nutzdaten
    """
    payload = _encode(checkpoint)
    checksum = sha256_hex(payload)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + '.tmp')
    with open(tmp, 'wb') as f:
        f.write(MAGIC + b'\n')
        f.write(f'version {VERSION}\n'.encode('ascii'))
        f.write(f'sha256 {checksum}\n'.encode('ascii'))
        f.write(payload)
    tmp.replace(path)
    logger.info(f"Checkpoint geschrieben: {path} (t={checkpoint.t:.4f} s)")
    return checksum


def _read_verified(path) -> Tuple[int, str, bytes]:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"Checkpoint {path} nicht lesbar: {e}") from e

    lines = data.split(b'\n', 3)
    if len(lines) < 4 or lines[0] != MAGIC:
        raise CheckpointError(f"{path} ist kein Checkpoint")
    try:
        version = int(lines[1].decode('ascii').split()[1])
        checksum = lines[2].decode('ascii').split()[1]
    except (IndexError, ValueError, UnicodeDecodeError) as e:
        raise CheckpointError(f"Checkpoint-Kopf von {path} beschädigt") from e
    if version != VERSION:
        raise CheckpointVersionError(f"Checkpoint-Version {version}, erwartet {VERSION}")

    payload = lines[3]
    if sha256_hex(payload) != checksum:
        raise CheckpointError(f"Prüfsumme von {path} stimmt nicht")
    return version, checksum, payload


def load_checkpoint(path) -> Checkpoint:
    """
    Liest und prüft einen Checkpoint

    Raises:
        CheckpointVersionError: andere Formatversion
        CheckpointError: Datei beschädigt oder Prüfsumme falsch
    """
    _, _, payload = _read_verified(path)
    try:
        checkpoint = _decode(payload)
    except (KeyError, ValueError, yaml.YAMLError) as e:
        raise CheckpointError(f"Checkpoint {path} nicht dekodierbar: {e}") from e
    logger.info(f"Checkpoint geladen: {path} (t={checkpoint.t:.4f} s)")
    return checkpoint


def verify_checkpoint(path) -> Tuple[int, str]:
    """Prüft Version und Prüfsumme, gibt (Version, Prüfsumme) zurück"""
    version, checksum, _ = _read_verified(path)
    return version, checksum


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2 or argv[0] != 'verify':
        print("Usage: python -m src.sim.checkpoint verify <datei>")
        return 2

    try:
        version, checksum = verify_checkpoint(argv[1])
    except CheckpointError as e:
        print(f"✗ {e}")
        return e.exit_code
    print(f"✓ Checkpoint gültig (Version {version}, sha256 {checksum})")
    return 0


if __name__ == '__main__':
    sys.exit(main())
