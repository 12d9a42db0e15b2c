"""
Geometry ingestion: polygon CSV files and STL meshes.
"""

from pathlib import Path
from typing import List, Tuple, Union
import logging
import math

import numpy as np
import trimesh

from ..exceptions import GeometryFormatError, GeometryValidationError
from .geometry import Polygon, TriangleMesh, first_crossing

logger = logging.getLogger(__name__)

WELD_DIGITS = 9

PathLike = Union[str, Path]


def _read_vertex_lines(path: Path) -> Tuple[List[Tuple[float, float]], List[int]]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise GeometryFormatError(f"cannot read polygon file {path}: {exc}") from exc

    vertices, lines = [], []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        parts = [part.strip() for part in line.split(',')]
        if not vertices and parts == ['x', 'y']:
            continue
        if len(parts) != 2:
            raise GeometryFormatError(f"expected 'x,y', got {line!r}", line=number)
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise GeometryFormatError(f"unparsable coordinate in {line!r}", line=number)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise GeometryFormatError(f"non-finite coordinate in {line!r}", line=number)
        vertices.append((x, y))
        lines.append(number)
    return vertices, lines


def load_polygon_csv(path: PathLike) -> Polygon:
    """
    Load a closed polygon from one ``x,y`` vertex per line.

    Closure is implicit; a final vertex repeating the first is dropped.
    """
    path = Path(path)
    vertices, lines = _read_vertex_lines(path)
    if len(vertices) > 1 and vertices[-1] == vertices[0]:
        vertices.pop()
        lines.pop()
    if len(vertices) < 3:
        raise GeometryFormatError(f"polygon needs at least 3 vertices, found {len(vertices)}",
                                  line=lines[-1] if lines else None)

    points = np.asarray(vertices)
    crossing = first_crossing(points)
    if crossing is not None:
        first, second = crossing
        raise GeometryFormatError(
            f"polygon is self-intersecting: edge starting at line {lines[second]} crosses this edge",
            line=lines[first],
        )
    try:
        polygon = Polygon(points)
    except GeometryValidationError as exc:
        raise GeometryFormatError(str(exc)) from exc
    logger.info("Loaded polygon %s with %d vertices (area %.6g)", path.name, len(points), polygon.area)
    return polygon


def weld_vertices(vertices: np.ndarray, faces: np.ndarray,
                  digits: int = WELD_DIGITS) -> Tuple[np.ndarray, np.ndarray]:
    """Merge vertices that agree after rounding to ``digits`` decimals."""
    mesh = trimesh.Trimesh(vertices=vertices, faces=faces, process=False)
    mesh.merge_vertices(merge_tex=True, merge_norm=True, digits_vertex=digits)
    return np.asarray(mesh.vertices, dtype=float), np.asarray(mesh.faces, dtype=np.int64)


def load_stl(path: PathLike) -> TriangleMesh:
    """Load a binary or ASCII STL file as a validated, welded triangle mesh."""
    path = Path(path)
    if not path.is_file():
        raise GeometryFormatError(f"STL file not found: {path}")
    try:
        loaded = trimesh.load_mesh(str(path), file_type='stl', process=False)
    except Exception as exc:
        raise GeometryFormatError(f"malformed STL file {path.name}: {exc}") from exc
    if isinstance(loaded, trimesh.Scene):
        loaded = loaded.dump(concatenate=True)
    vertices = np.asarray(loaded.vertices, dtype=float)
    faces = np.asarray(loaded.faces, dtype=np.int64)
    if len(faces) == 0:
        raise GeometryFormatError(f"STL file {path.name} contains no triangles")

    vertices, triangles = weld_vertices(vertices, faces)
    collapsed = ((triangles[:, 0] == triangles[:, 1]) | (triangles[:, 1] == triangles[:, 2])
                 | (triangles[:, 2] == triangles[:, 0]))
    if np.any(collapsed):
        raise GeometryFormatError(
            f"STL file {path.name} has {int(collapsed.sum())} triangles collapsed by welding"
        )
    try:
        mesh = TriangleMesh(vertices, triangles)
    except GeometryValidationError as exc:
        raise GeometryFormatError(f"{path.name}: {exc}") from exc
    logger.info("Loaded STL %s: %d triangles, %d vertices, volume %.6g",
                path.name, len(triangles), len(vertices), mesh.volume)
    return mesh
