"""
Discretized level-set fields on a Cartesian background mesh.

A LevelSetField stores the signed distance of one body at cell centers,
origin + (i + 1/2) * l_f, and optionally a confinement band: the kernel
support integrals over the exterior, precomputed at cell centers so that
particles near the surface can pick up their missing support by
interpolation.
"""

from dataclasses import dataclass, field as dataclass_field, replace
from itertools import product
from typing import Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.signal import fftconvolve

from ..exceptions import GeometryValidationError, LevelSetDomainError, UndefinedNormalError
from .geometry import Shape, as_points
from .kernel import SmoothingKernel

logger = logging.getLogger(__name__)

MIN_PADDING_CELLS = 4
MIN_GRADIENT = 1e-8
# Queries this close to a cell center (in cell units) snap onto it
_SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class LevelSetField:
    origin: np.ndarray
    spacing: float
    phi: np.ndarray
    source_bounded: bool = True
    band: Optional[np.ndarray] = dataclass_field(default=None, repr=False)
    band_mask: Optional[np.ndarray] = dataclass_field(default=None, repr=False)
    band_cutoff: Optional[float] = None
    eps: Optional[float] = None

    @property
    def dimension(self) -> int:
        return self.phi.ndim

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.phi.shape

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.spacing * np.asarray(self.dims)

    @property
    def first_center(self) -> np.ndarray:
        return self.origin + 0.5 * self.spacing

    @property
    def last_center(self) -> np.ndarray:
        return self.origin + (np.asarray(self.dims) - 0.5) * self.spacing

    @property
    def has_band(self) -> bool:
        return self.band is not None

    def cell_centers(self) -> np.ndarray:
        """All cell centers as an (N, d) array in C order of ``phi``."""
        axes = [self.origin[k] + (np.arange(n) + 0.5) * self.spacing for k, n in enumerate(self.dims)]
        grids = np.meshgrid(*axes, indexing='ij')
        return np.stack([g.ravel() for g in grids], axis=1)

    def same_grid(self, other: 'LevelSetField') -> bool:
        return (self.dims == other.dims and self.spacing == other.spacing
                and np.array_equal(self.origin, other.origin))

    def inside_domain(self, points) -> np.ndarray:
        """True where a point lies within the range of cell centers."""
        pts, _ = as_points(points, self.dimension)
        s = self._cell_coordinates(pts)
        return np.all((s >= 0) & (s <= np.asarray(self.dims) - 1), axis=1)

    def _cell_coordinates(self, points: np.ndarray) -> np.ndarray:
        s = (points - self.origin) / self.spacing - 0.5
        nearest = np.rint(s)
        return np.where(np.abs(s - nearest) < _SNAP, nearest, s)

    def _interpolate(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation of cell-center values (scalar or vector)."""
        dims = np.asarray(self.dims)
        s = self._cell_coordinates(points)
        outside = np.any((s < 0) | (s > dims - 1), axis=1)
        if np.any(outside):
            bad = points[np.argmax(outside)]
            raise LevelSetDomainError(f"query outside level-set domain at {bad.tolist()}")
        base = np.minimum(np.floor(s).astype(np.int64), dims - 2)
        t = s - base
        result = np.zeros((len(points),) + values.shape[self.dimension:])
        for corner in product((0, 1), repeat=self.dimension):
            offset = np.asarray(corner)
            weight = np.prod(np.where(offset == 1, t, 1.0 - t), axis=1)
            index = tuple((base + offset).T)
            sample = values[index]
            if sample.ndim > 1:
                weight = weight[:, None]
            result += weight * sample
        return result

    def interpolate(self, points):
        pts, single = as_points(points, self.dimension)
        phi = self._interpolate(self.phi, pts)
        return float(phi[0]) if single else phi

    def gradients(self, points) -> np.ndarray:
        """Central differences of interpolated phi with step l_f / 2."""
        pts, _ = as_points(points, self.dimension)
        step = 0.5 * self.spacing
        low, high = self.first_center, self.last_center
        grad = np.empty_like(pts)
        for axis in range(self.dimension):
            forward = pts.copy()
            backward = pts.copy()
            forward[:, axis] = np.minimum(pts[:, axis] + step, high[axis])
            backward[:, axis] = np.maximum(pts[:, axis] - step, low[axis])
            width = forward[:, axis] - backward[:, axis]
            grad[:, axis] = (self._interpolate(self.phi, forward)
                             - self._interpolate(self.phi, backward)) / width
        return grad

    def normals(self, points) -> Tuple[np.ndarray, np.ndarray]:
        """Unit normals and a validity mask (False at skeleton points)."""
        grad = self.gradients(points)
        magnitude = np.linalg.norm(grad, axis=1)
        valid = magnitude > MIN_GRADIENT
        normals = np.zeros_like(grad)
        normals[valid] = grad[valid] / magnitude[valid, None]
        return normals, valid

    def confinement(self, points):
        if self.band is None:
            raise LevelSetDomainError("confinement band has not been precomputed")
        pts, single = as_points(points, self.dimension)
        values = self._interpolate(self.band, pts)
        return values[0] if single else values


def heaviside(phi, eps: float):
    """Smoothed Heaviside: 0 below -eps, 1 above eps, sinusoidal blend between."""
    phi = np.asarray(phi, dtype=float)
    ratio = np.clip(phi / eps, -1.0, 1.0)
    h = 0.5 + 0.5 * ratio + np.sin(math.pi * ratio) / (2.0 * math.pi)
    h = np.where(phi > eps, 1.0, np.where(phi < -eps, 0.0, h))
    return h if h.ndim else float(h)


def padding_for(spacing: float, cutoff: float = 0.0) -> float:
    """Margin around a body that fits the padding minimum and the confinement band."""
    cells = max(MIN_PADDING_CELLS, math.ceil(cutoff / spacing - 1e-9) + 2)
    return cells * spacing


def grid_bounds(lower: Sequence[float], upper: Sequence[float], spacing: float,
                margin: float, snap: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bounds of a grid enclosing [lower, upper] with the given margin.

    With ``snap`` the origin sits on a multiple of the spacing, so every
    field built this way shares cell centers with every other.
    """
    lo = np.asarray(lower, dtype=float) - margin
    hi = np.asarray(upper, dtype=float) + margin
    if snap:
        lo = np.floor(lo / spacing) * spacing
    counts = np.ceil((hi - lo) / spacing - 1e-9)
    return lo, lo + counts * spacing


def build_level_set(shape: Shape, bounds, spacing: float) -> LevelSetField:
    """
    Sample the signed distance of ``shape`` at every cell center.

    Args:
        shape: body geometry
        bounds: (lower, upper) corners of the grid
        spacing: cell size l_f

    Returns:
        LevelSetField without a confinement band
    """
    if not spacing > 0:
        raise GeometryValidationError(f"level-set spacing must be positive, got {spacing}")
    lower = np.asarray(bounds[0], dtype=float)
    upper = np.asarray(bounds[1], dtype=float)
    if lower.shape != (shape.dimension,) or upper.shape != (shape.dimension,):
        raise GeometryValidationError(f"level-set bounds must be {shape.dimension}D")
    dims = np.rint((upper - lower) / spacing).astype(np.int64)
    if np.any(dims < 3):
        raise GeometryValidationError("level-set grid needs at least 3 cells per axis")

    shape_box = shape.bounding_box()
    if shape_box is not None:
        grid_upper = lower + dims * spacing
        margin = min(np.min(shape_box[0] - lower), np.min(grid_upper - shape_box[1]))
        if margin < MIN_PADDING_CELLS * spacing * (1.0 - 1e-9):
            raise GeometryValidationError(
                f"insufficient level-set padding: {margin:.6g} < {MIN_PADDING_CELLS} cells of {spacing:.6g}"
            )

    field = LevelSetField(origin=lower, spacing=float(spacing), phi=np.zeros(tuple(dims)),
                          source_bounded=shape_box is not None)
    phi = shape.signed_distance(field.cell_centers()).reshape(tuple(dims))
    logger.debug("Built %s level set for %r with %d cells", "x".join(map(str, dims)), shape, phi.size)
    return replace(field, phi=phi)


def exterior_weights(field: LevelSetField, eps: float) -> np.ndarray:
    """H(phi_k, eps) on exterior cells (phi_k > 0), zero elsewhere."""
    return np.where(field.phi > 0, heaviside(field.phi, eps), 0.0)


def exterior_volume(field: LevelSetField, eps: float) -> float:
    """Smoothed volume of the grid lying outside the body."""
    return float(np.sum(exterior_weights(field, eps))) * field.spacing ** field.dimension


def precompute_confinement(field: LevelSetField, kernel: SmoothingKernel, eps: float) -> LevelSetField:
    """
    Store the exterior kernel-support integral I at every near-surface cell.

        I(c) = sum_{k, phi_k > 0} H(phi_k, eps) * l_f^d * grad W(c - x_k)

    Only exterior cells contribute, weighted by the smoothed Heaviside. It is
    evaluated as one FFT correlation of the masked H field with the
    kernel-gradient stencil.
    """
    if kernel.dimension != field.dimension:
        raise LevelSetDomainError("kernel and level-set dimensions differ")
    if not eps > 0:
        raise LevelSetDomainError(f"heaviside width must be positive, got {eps}")
    spacing = field.spacing
    cutoff = kernel.cutoff
    if cutoff < 2.0 * spacing * (1.0 - 1e-12):
        raise LevelSetDomainError("kernel cutoff must span at least 2 level-set cells")

    limit = cutoff + spacing
    mask = np.abs(field.phi) < limit
    if field.source_bounded:
        edges = np.zeros_like(mask)
        for axis in range(field.dimension):
            index = [slice(None)] * field.dimension
            index[axis] = [0, -1]
            edges[tuple(index)] = True
        if np.any(mask & edges):
            raise LevelSetDomainError("level-set domain too small for confinement band")

    reach = int(math.ceil(cutoff / spacing))
    offsets = np.arange(-reach, reach + 1) * spacing
    stencil_points = np.stack(np.meshgrid(*([offsets] * field.dimension), indexing='ij'), axis=-1)
    # Correlation with grad W(c - x_k) is convolution with grad W(offset)
    stencil = kernel.gradient(stencil_points) * spacing ** field.dimension

    volume_fraction = np.pad(exterior_weights(field, eps), reach, mode='edge')
    band = np.zeros(field.dims + (field.dimension,))
    for component in range(field.dimension):
        band[..., component] = fftconvolve(volume_fraction, stencil[..., component], mode='valid')
    band[~mask] = 0.0

    logger.debug("Confinement band: %d cells (cutoff %.6g, eps %.6g)", int(mask.sum()), cutoff, eps)
    return replace(field, band=band, band_mask=mask, band_cutoff=cutoff, eps=eps)


def subtract_fields(domain_field: LevelSetField, inner_fields: Sequence[LevelSetField]) -> LevelSetField:
    """Cell-wise max(phi_domain, -min_k phi_inner_k) on one shared grid."""
    phi = domain_field.phi.copy()
    if inner_fields:
        for inner in inner_fields:
            if not domain_field.same_grid(inner):
                raise LevelSetDomainError("boolean subtraction needs fields on one shared grid")
        inner_min = np.min([inner.phi for inner in inner_fields], axis=0)
        phi = np.maximum(phi, -inner_min)
    return LevelSetField(origin=domain_field.origin.copy(), spacing=domain_field.spacing, phi=phi,
                         source_bounded=domain_field.source_bounded)


def containment_violations(domain_field: LevelSetField, inner_fields: Sequence[LevelSetField]) -> np.ndarray:
    """
    Cell centers where an inner field reaches the domain surface or another inner field.

    An inner cell (phi <= 0) must lie strictly inside the domain and inside
    no other inner body. All fields must share one grid.
    """
    for inner in inner_fields:
        if not domain_field.same_grid(inner):
            raise LevelSetDomainError("containment check needs fields on one shared grid")
    if not inner_fields:
        return np.empty((0, domain_field.dimension))
    claimed = np.stack([inner.phi <= 0 for inner in inner_fields])
    clash = np.any(claimed, axis=0) & (domain_field.phi >= 0)
    clash |= np.sum(claimed, axis=0) > 1
    return domain_field.cell_centers()[clash.ravel()]


def interface_sign_mismatches(inner_field: LevelSetField, outer_field: LevelSetField,
                              band: float) -> np.ndarray:
    """
    Inner-field cell centers near the inner surface where both fields agree in sign.

    Both positive marks a gap (no body claims the point), both negative an
    overlap. Returns the offending centers as an (N, d) array.
    """
    centers = inner_field.cell_centers()
    phi_inner = inner_field.phi.ravel()
    near = np.abs(phi_inner) <= band
    near &= outer_field.inside_domain(centers)
    centers, phi_inner = centers[near], phi_inner[near]
    phi_outer = outer_field.interpolate(centers)
    clash = ((phi_inner > 0) & (phi_outer > 0)) | ((phi_inner < 0) & (phi_outer < 0))
    return centers[clash]


def interpolate_phi(field: LevelSetField, p):
    return field.interpolate(p)


def normal_at(field: LevelSetField, p) -> np.ndarray:
    normals, valid = field.normals(p)
    if not valid[0]:
        raise UndefinedNormalError(f"undefined normal at {np.asarray(p).tolist()}")
    return normals[0]


def normals_at(field: LevelSetField, points) -> Tuple[np.ndarray, np.ndarray]:
    return field.normals(points)


def confinement_gradient(field: LevelSetField, p):
    return field.confinement(p)
