"""
Body geometry as signed-distance functions.

Negative inside, positive outside. Every shape answers vectorized
``signed_distance`` and brute-force ``contains`` queries on (N, d) point
arrays; ``Subtraction`` combines them into the gap-free outer domain of a
multi-body system.
"""

from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
import trimesh
from scipy.spatial import KDTree

from ..exceptions import GeometryValidationError

logger = logging.getLogger(__name__)

# Pair-array size cap for chunked point/feature distance evaluation
_PAIR_LIMIT = 4_000_000
# Surface samples per smallest body extent in subtraction checks
_SAMPLES_PER_EXTENT = 64

Bounds = Tuple[np.ndarray, np.ndarray]


def as_points(points, dimension: Optional[int] = None) -> Tuple[np.ndarray, bool]:
    """Return an (N, d) float array and whether the input was a single point."""
    arr = np.asarray(points, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise GeometryValidationError(f"expected a point or an (N, d) array, got shape {arr.shape}")
    if dimension is not None and arr.shape[1] != dimension:
        raise GeometryValidationError(
            f"points have {arr.shape[1]} coordinates, shape is {dimension}D"
        )
    return arr, single


def _chunks(count: int, width: int):
    step = max(1, _PAIR_LIMIT // max(width, 1))
    for start in range(0, count, step):
        yield slice(start, min(start + step, count))


class Shape(ABC):
    """A closed region with an exact (or lower-bound) signed distance."""

    dimension: int

    @abstractmethod
    def _signed_distance(self, points: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _contains(self, points: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def bounding_box(self) -> Optional[Bounds]:
        """Axis-aligned bounds of the surface, or None for unbounded shapes."""

    def boundary_samples(self, spacing: float) -> np.ndarray:
        """Surface points no farther than ``spacing`` apart, for containment checks."""
        raise GeometryValidationError(f"{type(self).__name__} cannot be nested in a subtraction")

    def signed_distance(self, points):
        arr, single = as_points(points, self.dimension)
        phi = self._signed_distance(arr)
        return float(phi[0]) if single else phi

    def contains(self, points):
        """Brute-force strict inside test, independent of the distance field."""
        arr, single = as_points(points, self.dimension)
        inside = self._contains(arr)
        return bool(inside[0]) if single else inside


class Ball(Shape):
    """Circle in 2D, sphere in 3D."""

    def __init__(self, center: Sequence[float], radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.dimension = self.center.shape[0]
        if self.dimension not in (2, 3):
            raise GeometryValidationError(f"ball center must be 2D or 3D, got {self.center}")
        if not np.all(np.isfinite(self.center)) or not math.isfinite(self.radius):
            raise GeometryValidationError("ball center and radius must be finite")
        if self.radius <= 0:
            raise GeometryValidationError(f"ball radius must be positive, got {self.radius}")

    def _signed_distance(self, points):
        return np.linalg.norm(points - self.center, axis=1) - self.radius

    def _contains(self, points):
        return np.sum((points - self.center) ** 2, axis=1) < self.radius ** 2

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def boundary_samples(self, spacing):
        if self.dimension == 2:
            n = max(16, math.ceil(2.0 * math.pi * self.radius / spacing))
            theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
            unit = np.column_stack([np.cos(theta), np.sin(theta)])
        else:
            # Fibonacci sphere
            n = max(64, math.ceil(4.0 * math.pi * (self.radius / spacing) ** 2))
            k = np.arange(n) + 0.5
            polar = np.arccos(1.0 - 2.0 * k / n)
            azimuth = math.pi * (1.0 + 5.0 ** 0.5) * k
            unit = np.column_stack([
                np.cos(azimuth) * np.sin(polar),
                np.sin(azimuth) * np.sin(polar),
                np.cos(polar),
            ])
        return self.center + self.radius * unit

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


Circle = Ball
Sphere = Ball


class Box(Shape):
    """Axis-aligned box."""

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.shape[0] not in (2, 3):
            raise GeometryValidationError("box corners must both be 2D or both be 3D")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise GeometryValidationError("box corners must be finite")
        if np.any(self.upper <= self.lower):
            raise GeometryValidationError(
                f"box max {self.upper.tolist()} must exceed min {self.lower.tolist()} on every axis"
            )
        self.dimension = self.lower.shape[0]

    def _signed_distance(self, points):
        center = 0.5 * (self.lower + self.upper)
        half = 0.5 * (self.upper - self.lower)
        q = np.abs(points - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return outside + inside

    def _contains(self, points):
        return np.all((points > self.lower) & (points < self.upper), axis=1)

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def boundary_samples(self, spacing):
        axes = [
            np.linspace(lo, hi, max(2, math.ceil((hi - lo) / spacing) + 1))
            for lo, hi in zip(self.lower, self.upper)
        ]
        faces = []
        for axis in range(self.dimension):
            for side in (self.lower[axis], self.upper[axis]):
                grid = list(axes)
                grid[axis] = np.array([side])
                faces.append(np.array(np.meshgrid(*grid, indexing='ij')).reshape(self.dimension, -1).T)
        return np.vstack(faces)

    def __repr__(self):
        return f"Box(min={self.lower.tolist()}, max={self.upper.tolist()})"


class HalfSpace(Shape):
    """Unbounded half-space {x : (x - point) . normal < 0}."""

    def __init__(self, point: Sequence[float], normal: Sequence[float]):
        self.point = np.asarray(point, dtype=float)
        normal = np.asarray(normal, dtype=float)
        if normal.shape != self.point.shape or self.point.shape[0] not in (2, 3):
            raise GeometryValidationError("half-space point and normal must share a 2D or 3D shape")
        length = np.linalg.norm(normal)
        if not length > 0:
            raise GeometryValidationError("half-space normal must be non-zero")
        self.normal = normal / length
        self.dimension = self.point.shape[0]

    def _signed_distance(self, points):
        return (points - self.point) @ self.normal

    def _contains(self, points):
        return self._signed_distance(points) < 0

    def bounding_box(self):
        return None


def _segments_intersect(p1, p2, q1, q2) -> np.ndarray:
    """Vectorized closed-segment intersection test (touching counts)."""

    def orient(a, b, c):
        return np.sign((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
                       - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))

    def on_segment(a, b, c):
        return ((np.minimum(a[..., 0], b[..., 0]) <= c[..., 0]) & (c[..., 0] <= np.maximum(a[..., 0], b[..., 0]))
                & (np.minimum(a[..., 1], b[..., 1]) <= c[..., 1]) & (c[..., 1] <= np.maximum(a[..., 1], b[..., 1])))

    o1 = orient(p1, p2, q1)
    o2 = orient(p1, p2, q2)
    o3 = orient(q1, q2, p1)
    o4 = orient(q1, q2, p2)
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    touching = (((o1 == 0) & on_segment(p1, p2, q1)) | ((o2 == 0) & on_segment(p1, p2, q2))
                | ((o3 == 0) & on_segment(q1, q2, p1)) | ((o4 == 0) & on_segment(q1, q2, p2)))
    return proper | touching


def first_crossing(vertices: np.ndarray) -> Optional[Tuple[int, int]]:
    """First pair of non-adjacent polygon edges (i, j) that intersect, or None."""
    starts, ends = vertices, np.roll(vertices, -1, axis=0)
    n = len(starts)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    for part in _chunks(len(i), 1):
        a, b = i[part], j[part]
        hits = _segments_intersect(starts[a], ends[a], starts[b], ends[b])
        if np.any(hits):
            k = int(np.argmax(hits))
            return int(a[k]), int(b[k])
    return None


def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area (positive for counter-clockwise)."""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


class Polygon(Shape):
    """Simple closed 2D polygon; the closing edge is implicit."""

    dimension = 2

    def __init__(self, vertices: Sequence[Sequence[float]]):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise GeometryValidationError("polygon vertices must be an (N, 2) array")
        if verts.shape[0] < 3:
            raise GeometryValidationError(f"polygon needs at least 3 vertices, got {verts.shape[0]}")
        if not np.all(np.isfinite(verts)):
            raise GeometryValidationError("polygon vertices must be finite")
        self.vertices = verts
        self._validate()

    @property
    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    @property
    def area(self) -> float:
        return abs(polygon_area(self.vertices))

    def _validate(self):
        starts, ends = self.edges
        if np.any(np.all(starts == ends, axis=1)):
            raise GeometryValidationError("polygon has repeated consecutive vertices")
        if self.area == 0.0:
            raise GeometryValidationError("polygon encloses zero area")
        crossing = first_crossing(self.vertices)
        if crossing is not None:
            raise GeometryValidationError(
                f"polygon is self-intersecting: edges {crossing[0]} and {crossing[1]} cross"
            )

    def _signed_distance(self, points):
        starts, ends = self.edges
        seg = ends - starts
        seg_len2 = np.sum(seg * seg, axis=1)
        dist2 = np.empty(len(points))
        for part in _chunks(len(points), len(starts)):
            rel = points[part, None, :] - starts[None, :, :]
            t = np.clip(np.sum(rel * seg[None], axis=2) / seg_len2[None], 0.0, 1.0)
            diff = rel - t[..., None] * seg[None]
            dist2[part] = np.min(np.sum(diff * diff, axis=2), axis=1)
        magnitude = np.sqrt(dist2)
        return np.where(self._contains(points), -magnitude, magnitude)

    def _contains(self, points):
        # Even-odd ray crossing towards +x
        starts, ends = self.edges
        inside = np.zeros(len(points), dtype=bool)
        for part in _chunks(len(points), len(starts)):
            px = points[part, 0][:, None]
            py = points[part, 1][:, None]
            ay, by = starts[None, :, 1], ends[None, :, 1]
            ax, bx = starts[None, :, 0], ends[None, :, 0]
            straddles = (ay > py) != (by > py)
            with np.errstate(divide='ignore', invalid='ignore'):
                x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
            crossings = np.sum(straddles & (px < x_cross), axis=1)
            inside[part] = (crossings % 2) == 1
        return inside

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def boundary_samples(self, spacing):
        starts, ends = self.edges
        counts = np.maximum(1, np.ceil(np.linalg.norm(ends - starts, axis=1) / spacing).astype(np.int64))
        edge = np.repeat(np.arange(len(starts)), counts)
        offset = np.arange(len(edge)) - np.repeat(np.cumsum(counts) - counts, counts)
        t = (offset / counts[edge])[:, None]
        return starts[edge] + t * (ends[edge] - starts[edge])

    def __repr__(self):
        return f"Polygon({len(self.vertices)} vertices)"


def mesh_volume(vertices: np.ndarray, triangles: np.ndarray) -> float:
    """Signed enclosed volume; negative for inward-oriented meshes."""
    return float(trimesh.Trimesh(vertices=vertices, faces=triangles, process=False).volume)


def boundary_edges(triangles: np.ndarray) -> np.ndarray:
    """Sorted undirected edges used by exactly one triangle."""
    edges = np.sort(trimesh.geometry.faces_to_edges(np.asarray(triangles, dtype=np.int64)), axis=1)
    single = trimesh.grouping.group_rows(edges, require_count=1)
    return edges[np.asarray(single, dtype=np.int64).reshape(-1)]


def _closest_points_on_triangles(p, a, b, c):
    """
    Closest point on triangle (a, b, c) to p for paired rows.

    Returns the closest points and a feature code: 0 face, 1 edge ab,
    2 edge bc, 3 edge ca, 4 vertex a, 5 vertex b, 6 vertex c.
    """
    ab, ac = b - a, c - a
    ap, bp, cp = p - a, p - b, p - c
    d1 = np.einsum('ij,ij->i', ab, ap)
    d2 = np.einsum('ij,ij->i', ac, ap)
    d3 = np.einsum('ij,ij->i', ab, bp)
    d4 = np.einsum('ij,ij->i', ac, bp)
    d5 = np.einsum('ij,ij->i', ab, cp)
    d6 = np.einsum('ij,ij->i', ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    closest = np.empty_like(p)
    feature = np.full(len(p), -1, dtype=np.int8)
    done = np.zeros(len(p), dtype=bool)

    def assign(mask, point, code):
        sel = mask & ~done
        closest[sel] = point[sel] if point.ndim == 2 else point
        feature[sel] = code
        done[sel] = True

    with np.errstate(divide='ignore', invalid='ignore'):
        assign((d1 <= 0) & (d2 <= 0), a, 4)
        assign((d3 >= 0) & (d4 <= d3), b, 5)
        assign((d6 >= 0) & (d5 <= d6), c, 6)
        v = d1 / (d1 - d3)
        assign((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + v[:, None] * ab, 1)
        w = d2 / (d2 - d6)
        assign((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + w[:, None] * ac, 3)
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        assign((va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0), b + w[:, None] * (c - b), 2)
        denom = 1.0 / (va + vb + vc)
        assign(np.ones(len(p), dtype=bool), a + (vb * denom)[:, None] * ab + (vc * denom)[:, None] * ac, 0)
    return closest, feature


class TriangleMesh(Shape):
    """
    Watertight, consistently oriented triangle surface in 3D.

    Distances come from exact point/triangle projection with KD-tree culling
    on triangle centroids; the sign uses angle-weighted pseudonormals at the
    closest feature, falling back to ray parity when that test is ambiguous.
    """

    dimension = 3

    def __init__(self, vertices, triangles):
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise GeometryValidationError("mesh vertices must be an (N, 3) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3 or len(self.triangles) == 0:
            raise GeometryValidationError("mesh triangles must be a non-empty (M, 3) index array")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise GeometryValidationError("mesh triangle index out of range")
        if not np.all(np.isfinite(self.vertices)):
            raise GeometryValidationError("mesh vertices must be finite")
        self._mesh = trimesh.Trimesh(vertices=self.vertices, faces=self.triangles, process=False)
        self._validate_topology()
        if self._mesh.volume < 0:
            logger.info("Mesh is oriented inwards; flipping %d triangles", len(self.triangles))
            self.triangles = self.triangles[:, ::-1].copy()
            self._mesh = trimesh.Trimesh(vertices=self.vertices, faces=self.triangles, process=False)
        self._prepare()

    @property
    def volume(self) -> float:
        return float(self._mesh.volume)

    def _validate_topology(self):
        if np.any(self._mesh.area_faces == 0.0):
            raise GeometryValidationError("mesh contains degenerate (zero-area) triangles")
        if not self._mesh.is_watertight:
            open_edges = boundary_edges(self.triangles)
            listed = ", ".join(f"({int(u)}, {int(v)})" for u, v in open_edges[:10])
            raise GeometryValidationError(
                f"mesh is not watertight: {len(open_edges)} boundary edges, e.g. {listed}"
            )
        if not self._mesh.is_winding_consistent:
            raise GeometryValidationError("mesh triangles are not consistently oriented")

    def _prepare(self):
        tris = self.triangles
        a, b, c = (self.vertices[tris[:, k]] for k in range(3))
        self._face_normals = np.asarray(self._mesh.face_normals, dtype=float)
        self._corners = (a, b, c)
        # Angle-weighted vertex pseudonormals
        self._vertex_normals = np.asarray(self._mesh.vertex_normals, dtype=float)

        # Edge pseudonormals per (triangle, local edge): ab, bc, ca
        inverse = np.asarray(self._mesh.edges_unique_inverse, dtype=np.int64)
        edge_sum = np.zeros((len(self._mesh.edges_unique), 3))
        np.add.at(edge_sum, inverse, np.repeat(self._face_normals, 3, axis=0))
        self._edge_normals = edge_sum[inverse].reshape(len(tris), 3, 3)

        centroids = (a + b + c) / 3.0
        self._centroids = centroids
        self._radius = float(np.max(np.linalg.norm(np.stack([a, b, c]) - centroids, axis=2)))
        self._tree = KDTree(centroids)
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        self._scale = float(np.max(hi - lo))

    def _closest(self, points):
        """Nearest surface point, distance and pseudonormal for each query."""
        count = len(points)
        k = min(8, len(self.triangles))
        _, nearest = self._tree.query(points, k=k)
        nearest = np.asarray(nearest).reshape(count, k)
        rows = np.repeat(np.arange(count), k)
        cols = nearest.reshape(-1)
        a, b, c = (corner[cols] for corner in self._corners)
        q, _ = _closest_points_on_triangles(points[rows], a, b, c)
        upper = np.min(np.linalg.norm(points[rows] - q, axis=1).reshape(count, k), axis=1)

        candidates = self._tree.query_ball_point(points, upper + self._radius + 1e-12 * self._scale)
        lengths = np.fromiter((len(item) for item in candidates), dtype=np.int64, count=count)
        rows = np.repeat(np.arange(count), lengths)
        cols = np.concatenate([np.asarray(item, dtype=np.int64) for item in candidates])

        best_dist = np.full(count, np.inf)
        best_point = np.zeros_like(points)
        best_normal = np.zeros_like(points)
        for part in _chunks(len(rows), 1):
            r, t = rows[part], cols[part]
            a, b, c = (corner[t] for corner in self._corners)
            q, feature = _closest_points_on_triangles(points[r], a, b, c)
            dist = np.linalg.norm(points[r] - q, axis=1)
            normal = self._face_normals[t].copy()
            for code, local in ((1, 0), (2, 1), (3, 2)):
                sel = feature == code
                normal[sel] = self._edge_normals[t[sel], local]
            for code, local in ((4, 0), (5, 1), (6, 2)):
                sel = feature == code
                normal[sel] = self._vertex_normals[self.triangles[t[sel], local]]
            order = np.lexsort((dist, r))
            r_sorted = r[order]
            first = np.ones(len(order), dtype=bool)
            first[1:] = r_sorted[1:] != r_sorted[:-1]
            winners = order[first]
            better = dist[winners] < best_dist[r[winners]]
            w = winners[better]
            best_dist[r[w]] = dist[w]
            best_point[r[w]] = q[w]
            best_normal[r[w]] = normal[w]
        return best_dist, best_point, best_normal

    def _signed_distance(self, points):
        dist, closest, normal = self._closest(points)
        alignment = np.einsum('ij,ij->i', points - closest, normal)
        sign = np.sign(alignment)
        ambiguous = (np.abs(alignment) <= 1e-12 * self._scale) & (dist > 1e-12 * self._scale)
        if np.any(ambiguous):
            sign[ambiguous] = np.where(self._ray_parity(points[ambiguous]), -1.0, 1.0)
        return np.where(dist == 0.0, 0.0, sign * dist)

    def _ray_parity(self, points):
        """Odd number of ray crossings along a skewed direction => inside."""
        direction = np.array([0.5773502691896258, 0.5773502692896258, 0.5773502690896258])
        a, b, c = self._corners
        e1, e2 = b - a, c - a
        pvec = np.cross(direction, e2)
        det = np.einsum('ij,ij->i', e1, pvec)
        valid = np.abs(det) > 1e-14
        inv_det = np.where(valid, 1.0 / np.where(valid, det, 1.0), 0.0)
        inside = np.zeros(len(points), dtype=bool)
        for part in _chunks(len(points), len(a)):
            tvec = points[part, None, :] - a[None]
            u = np.einsum('pij,ij->pi', tvec, pvec) * inv_det
            qvec = np.cross(tvec, e1[None])
            v = np.einsum('j,pij->pi', direction, qvec) * inv_det
            t = np.einsum('pij,ij->pi', qvec, e2) * inv_det
            hit = valid & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 0)
            inside[part] = (np.sum(hit, axis=1) % 2) == 1
        return inside

    def _contains(self, points):
        return self._ray_parity(points)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def boundary_samples(self, spacing):
        a, b, c = self._corners
        longest = np.max(np.linalg.norm(np.stack([b - a, c - b, a - c]), axis=2), axis=0)
        order = np.maximum(1, np.ceil(longest / spacing).astype(np.int64))
        samples = []
        for n in np.unique(order):
            i, j = np.triu_indices(n + 1)
            u, v = (n - j) / n, i / n
            sel = order == n
            ta, tb, tc = a[sel], b[sel], c[sel]
            points = ta[:, None] + u[None, :, None] * (tb - ta)[:, None] + v[None, :, None] * (tc - ta)[:, None]
            samples.append(points.reshape(-1, 3))
        return np.vstack(samples)

    def __repr__(self):
        return f"TriangleMesh({len(self.vertices)} vertices, {len(self.triangles)} triangles)"


class Subtraction(Shape):
    """
    Outer shape minus inner shapes: max(phi_outer, -min_k phi_inner_k).

    The result is a lower bound on the true distance, exact away from
    re-entrant corners where inner and outer surfaces meet.
    """

    def __init__(self, outer: Shape, inner: Sequence[Shape], resolution: Optional[float] = None):
        """
        Inner shapes must sit strictly inside ``outer`` and apart from each
        other. Both are checked on surface samples at most ``resolution``
        apart; by default 1/64 of the smallest bounded extent involved.
        """
        self.outer = outer
        self.inner: List[Shape] = list(inner)
        self.dimension = outer.dimension
        for k, shape in enumerate(self.inner):
            if shape.dimension != self.dimension:
                raise GeometryValidationError(
                    f"inner shape {k} is {shape.dimension}D, outer shape is {self.dimension}D"
                )
        if self.inner:
            self._check_nesting(resolution or self._default_resolution())

    def _default_resolution(self) -> float:
        extents = []
        for shape in [self.outer, *self.inner]:
            box = shape.bounding_box()
            if box is not None:
                extents.append(float(np.min(box[1] - box[0])))
        return min(extents) / _SAMPLES_PER_EXTENT

    def _check_nesting(self, resolution: float):
        samples = [shape.boundary_samples(resolution) for shape in self.inner]
        for k, (shape, points) in enumerate(zip(self.inner, samples)):
            if np.any(self.outer.signed_distance(points) >= 0):
                raise GeometryValidationError(
                    f"inner shape {k} ({shape!r}) is not strictly inside the outer shape"
                )
            for other_index, other in enumerate(self.inner):
                if other_index != k and np.any(other.signed_distance(points) <= 0):
                    raise GeometryValidationError(
                        f"inner shapes {k} and {other_index} overlap or touch"
                    )
        if self.outer.bounding_box() is not None:
            outer_points = self.outer.boundary_samples(resolution)
            for k, shape in enumerate(self.inner):
                if np.any(shape.signed_distance(outer_points) <= 0):
                    raise GeometryValidationError(
                        f"inner shape {k} ({shape!r}) is not strictly inside the outer shape"
                    )

    def _signed_distance(self, points):
        phi = self.outer._signed_distance(points)
        if not self.inner:
            return phi
        inner_min = np.min([shape._signed_distance(points) for shape in self.inner], axis=0)
        return np.maximum(phi, -inner_min)

    def _contains(self, points):
        inside = self.outer._contains(points)
        for shape in self.inner:
            inside &= ~shape._contains(points)
        return inside

    def bounding_box(self):
        return self.outer.bounding_box()

    def boundary_samples(self, spacing):
        parts = [self.outer.boundary_samples(spacing)]
        parts += [shape.boundary_samples(spacing) for shape in self.inner]
        return np.vstack(parts)

    def __repr__(self):
        return f"Subtraction({self.outer!r} - {self.inner!r})"


def signed_distance(shape: Shape, point):
    """Signed distance of one point (float) or many points (array)."""
    return shape.signed_distance(point)
