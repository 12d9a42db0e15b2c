"""
Particle and energy-history files.

Particles go out as one CSV or legacy-ASCII VTK file covering every body,
built from a single DataFrame so both formats carry the same columns.
Floats are written with 17 significant digits and read back with
round-trip parsing, so positions survive a CSV round trip bit for bit.
"""

from pathlib import Path
from typing import Dict, NamedTuple, Optional, Sequence, Union
import logging

import numpy as np
import pandas as pd

from ..exceptions import ParticleFileError
from .diagnostics import DiagnosticsReport
from .particles import ParticleSet
from .relaxation import EnergyHistory

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
FORMATS = ('csv', 'vtk')
AXES = ('x', 'y', 'z')

PathLike = Union[str, Path]


class ParticleRecord(NamedTuple):
    positions: np.ndarray
    volumes: np.ndarray


def particle_frame(bodies: Sequence[ParticleSet], report: Optional[DiagnosticsReport] = None) -> pd.DataFrame:
    """One row per particle; diagnostic columns only when a report is given."""
    if not bodies:
        raise ParticleFileError("no particles to write")
    dimension = bodies[0].dimension
    axes = AXES[:dimension]
    frames = []
    for body in bodies:
        columns = {'body_id': np.full(body.count, body.body_id, dtype=object)}
        for k, axis in enumerate(axes):
            columns[axis] = body.positions[:, k]
        columns['volume'] = body.volumes
        if report is not None:
            diagnostics = report[body.body_id]
            for k, axis in enumerate(axes):
                columns[f'kgs_{axis}'] = diagnostics.kgs[:, k]
            columns['kgs_mag'] = diagnostics.kgs_magnitude
            columns['density'] = diagnostics.density
            columns['interface_layer'] = diagnostics.interface_layer.astype(int)
        frames.append(pd.DataFrame(columns))
    return pd.concat(frames, ignore_index=True)


def _write_vtk(frame: pd.DataFrame, path: Path, dimension: int) -> None:
    count = len(frame)
    axes = AXES[:dimension]
    points = np.zeros((count, 3))
    points[:, :dimension] = frame[list(axes)].to_numpy(dtype=float)
    body_ids = list(dict.fromkeys(frame['body_id']))
    body_index = frame['body_id'].map({name: k for k, name in enumerate(body_ids)}).to_numpy()

    with open(path, 'w') as fp:
        fp.write("# vtk DataFile Version 3.0\n")
        fp.write(f"sph-packing particles; body_index: {' '.join(body_ids)}\n")
        fp.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fp.write(f"POINTS {count} double\n")
        np.savetxt(fp, points, fmt=FLOAT_FORMAT)
        fp.write(f"CELLS {count} {2 * count}\n")
        np.savetxt(fp, np.column_stack([np.ones(count, dtype=int), np.arange(count)]), fmt='%d')
        fp.write(f"CELL_TYPES {count}\n")
        np.savetxt(fp, np.ones(count, dtype=int), fmt='%d')
        fp.write(f"POINT_DATA {count}\n")
        fp.write("SCALARS body_index int 1\nLOOKUP_TABLE default\n")
        np.savetxt(fp, body_index, fmt='%d')
        fp.write("SCALARS volume double 1\nLOOKUP_TABLE default\n")
        np.savetxt(fp, frame['volume'].to_numpy(), fmt=FLOAT_FORMAT)
        if 'kgs_mag' in frame:
            kgs = np.zeros((count, 3))
            kgs[:, :dimension] = frame[[f'kgs_{axis}' for axis in axes]].to_numpy(dtype=float)
            fp.write("VECTORS kgs double\n")
            np.savetxt(fp, kgs, fmt=FLOAT_FORMAT)
            for name in ('kgs_mag', 'density'):
                fp.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                np.savetxt(fp, frame[name].to_numpy(), fmt=FLOAT_FORMAT)
            fp.write("SCALARS interface_layer int 1\nLOOKUP_TABLE default\n")
            np.savetxt(fp, frame['interface_layer'].to_numpy(), fmt='%d')


def write_particles(bodies: Sequence[ParticleSet], report: Optional[DiagnosticsReport],
                    fmt: str, path: PathLike) -> Path:
    """
    Write all bodies to one file.

    Args:
        bodies: particle sets, written in order
        report: diagnostics for every body, or None for geometry columns only
        fmt: 'csv' or 'vtk'
        path: destination file

    Returns:
        the written path
    """
    if fmt not in FORMATS:
        raise ParticleFileError(f"unknown particle format '{fmt}', expected one of {', '.join(FORMATS)}")
    path = Path(path)
    frame = particle_frame(bodies, report)
    try:
        if fmt == 'csv':
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        else:
            _write_vtk(frame, path, bodies[0].dimension)
    except OSError as exc:
        raise ParticleFileError(f"cannot write {path}: {exc}") from exc
    logger.info("Wrote %d particles to %s", len(frame), path)
    return path


def read_particles(path: PathLike) -> Dict[str, ParticleRecord]:
    """Positions and volumes per body from a particle CSV, in file order."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision='round_trip', dtype={'body_id': str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ParticleFileError(f"cannot read particle file {path}: {exc}") from exc
    axes = [axis for axis in AXES if axis in frame.columns]
    missing = {'body_id', 'x', 'y', 'volume'} - set(frame.columns)
    if missing:
        raise ParticleFileError(f"particle file {path} lacks columns: {', '.join(sorted(missing))}")

    records = {}
    for body_id in dict.fromkeys(frame['body_id']):
        rows = frame[frame['body_id'] == body_id]
        records[body_id] = ParticleRecord(
            positions=rows[axes].to_numpy(dtype=float),
            volumes=rows['volume'].to_numpy(dtype=float),
        )
    logger.info("Read %d particles in %d bodies from %s", len(frame), len(records), path)
    return records


def write_energy_history(history: EnergyHistory, path: PathLike) -> Path:
    path = Path(path)
    frame = pd.DataFrame({
        'step': [r.step for r in history.records],
        'dt': [r.dt for r in history.records],
        'E_all': [r.total for r in history.records],
        'E_interface': [r.interface for r in history.records],
        'E_normalized': [r.normalized for r in history.records],
    })
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as exc:
        raise ParticleFileError(f"cannot write {path}: {exc}") from exc
    logger.info("Wrote %d energy records for body '%s' to %s", len(frame), history.body_id, path)
    return path
