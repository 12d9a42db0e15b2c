"""
Per-body particle state, lattice seeding and cell-list neighbor search.
"""

from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from itertools import product
from typing import List, Optional, Tuple
import logging
import math

import numpy as np
from scipy import ndimage
from scipy.spatial import KDTree

from ..exceptions import KernelArgumentError, SeedingError
from .kernel import SmoothingKernel
from .level_set import LevelSetField

logger = logging.getLogger(__name__)

SOLID_SMOOTHING_RATIO = 1.05
FLUID_SMOOTHING_RATIO = 1.3

# Candidate pairs held in memory at once during neighbor queries
_CANDIDATE_LIMIT = 4_000_000


class BodyRole(str, Enum):
    INNER_SOLID = 'inner-solid'
    OUTER_FLUID = 'outer-fluid'

    @property
    def default_smoothing_ratio(self) -> float:
        return SOLID_SMOOTHING_RATIO if self is BodyRole.INNER_SOLID else FLUID_SMOOTHING_RATIO


@dataclass(eq=False)
class ParticleSet:
    """
    Particles of one body. Volumes default to dx^d and masses to rho0 * V;
    accelerations hold the most recent relaxation force per unit mass.
    """

    body_id: str
    role: BodyRole
    positions: np.ndarray
    spacing: float
    smoothing_length: float
    reference_density: float = 1.0
    volumes: Optional[np.ndarray] = None
    masses: Optional[np.ndarray] = None
    accelerations: Optional[np.ndarray] = dataclass_field(default=None, repr=False)

    def __post_init__(self):
        self.role = BodyRole(self.role)
        self.positions = np.array(self.positions, dtype=float, ndmin=2)
        if self.positions.shape[1] not in (2, 3):
            raise SeedingError(f"positions must be 2D or 3D, got shape {self.positions.shape}")
        if not self.spacing > 0 or not self.smoothing_length > 0 or not self.reference_density > 0:
            raise SeedingError("spacing, smoothing length and reference density must be positive")
        count = len(self.positions)
        if self.volumes is None:
            self.volumes = np.full(count, self.spacing ** self.dimension)
        if self.masses is None:
            self.masses = self.reference_density * np.asarray(self.volumes, dtype=float)
        if self.accelerations is None:
            self.accelerations = np.zeros_like(self.positions)
        self.volumes = np.asarray(self.volumes, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)

    @property
    def count(self) -> int:
        return len(self.positions)

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    @property
    def kernel(self) -> SmoothingKernel:
        return SmoothingKernel(self.smoothing_length, self.dimension)

    @property
    def cutoff(self) -> float:
        return 2.0 * self.smoothing_length

    def copy(self) -> 'ParticleSet':
        return ParticleSet(
            body_id=self.body_id,
            role=self.role,
            positions=self.positions.copy(),
            spacing=self.spacing,
            smoothing_length=self.smoothing_length,
            reference_density=self.reference_density,
            volumes=self.volumes.copy(),
            masses=self.masses.copy(),
            accelerations=self.accelerations.copy(),
        )


def lattice_sites(field: LevelSetField, spacing: float) -> np.ndarray:
    """Sites (i + 1/2) * dx of the global lattice that fall within the field's cell centers."""
    axes = []
    for low, high in zip(field.first_center, field.last_center):
        first = math.ceil(low / spacing - 0.5)
        last = math.floor(high / spacing - 0.5)
        axes.append((np.arange(first, last + 1) + 0.5) * spacing)
    grids = np.meshgrid(*axes, indexing='ij')
    return np.stack([g.ravel() for g in grids], axis=1)


def lattice_seed(field: LevelSetField, spacing: float, role: BodyRole, body_id: Optional[str] = None,
                 smoothing_ratio: Optional[float] = None, reference_density: float = 1.0) -> ParticleSet:
    """
    Fill the region phi < 0 with a cubic lattice of spacing dx.

    Raises:
        SeedingError: no lattice site falls inside the region
    """
    if not spacing > 0:
        raise SeedingError(f"particle spacing must be positive, got {spacing}")
    role = BodyRole(role)
    sites = lattice_sites(field, spacing)
    inside = field.interpolate(sites) < 0 if len(sites) else np.zeros(0, dtype=bool)
    positions = sites[inside]
    name = body_id or role.value
    if len(positions) == 0:
        raise SeedingError(f"region unresolved at this spacing (body '{name}', dx={spacing:g})")

    ratio = role.default_smoothing_ratio if smoothing_ratio is None else smoothing_ratio
    particles = ParticleSet(
        body_id=name,
        role=role,
        positions=positions,
        spacing=spacing,
        smoothing_length=ratio * spacing,
        reference_density=reference_density,
    )
    logger.info("Seeded %d particles for body '%s' at dx=%g", particles.count, name, spacing)
    unresolved_regions(field, particles)
    return particles


def unresolved_regions(field: LevelSetField, particles: ParticleSet) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Bounding boxes of interior regions that no particle covers.

    Cells deeper than dx/2 and farther than dx from every particle are
    grouped into connected regions; each region is logged as a warning.
    """
    spacing = particles.spacing
    deep = field.phi < -0.5 * spacing
    if not np.any(deep):
        return []
    centers = field.cell_centers()[deep.ravel()]
    distance, _ = KDTree(particles.positions).query(centers, distance_upper_bound=spacing * (1 + 1e-9))
    uncovered = np.zeros(field.dims, dtype=bool)
    uncovered[deep] = ~np.isfinite(distance)
    labels, count = ndimage.label(uncovered)
    regions = []
    for region in ndimage.find_objects(labels):
        lower = field.origin + np.array([s.start for s in region]) * field.spacing
        upper = field.origin + np.array([s.stop for s in region]) * field.spacing
        regions.append((lower, upper))
        logger.warning(
            "Body '%s' has a region unresolved at dx=%g: %s to %s",
            particles.body_id, spacing, lower.tolist(), upper.tolist(),
        )
    return regions


@dataclass(frozen=True, eq=False)
class CellList:
    """
    Particles bucketed on a uniform grid in CSR form.

    ``order[cell_start[c]:cell_start[c + 1]]`` are the particles in flat
    cell ``c``; the snapshot of positions is kept so stale use is detectable.
    """

    cell_size: float
    origin: np.ndarray
    dims: np.ndarray
    order: np.ndarray
    cell_start: np.ndarray
    cell_of: np.ndarray
    positions: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.dims)

    def bucket(self, cell_index) -> np.ndarray:
        flat = int(np.ravel_multi_index(tuple(cell_index), tuple(self.dims)))
        return self.order[self.cell_start[flat]:self.cell_start[flat + 1]]

    def cell_coordinates(self, points: np.ndarray) -> np.ndarray:
        return np.floor((points - self.origin) / self.cell_size).astype(np.int64)

    def is_current(self, particles: ParticleSet) -> bool:
        return self.positions.shape == particles.positions.shape and np.array_equal(self.positions, particles.positions)


def build_cell_list(particles: ParticleSet, cutoff: float) -> CellList:
    if not cutoff > 0:
        raise KernelArgumentError(f"cell-list cutoff must be positive, got {cutoff}")
    if cutoff < particles.cutoff * (1.0 - 1e-12):
        raise KernelArgumentError(
            f"cell size {cutoff:g} is smaller than the kernel support {particles.cutoff:g} of '{particles.body_id}'"
        )
    positions = particles.positions.copy()
    dimension = particles.dimension
    if len(positions):
        origin = positions.min(axis=0)
        dims = np.floor((positions.max(axis=0) - origin) / cutoff).astype(np.int64) + 1
    else:
        origin = np.zeros(dimension)
        dims = np.ones(dimension, dtype=np.int64)
    coords = np.clip(np.floor((positions - origin) / cutoff).astype(np.int64), 0, dims - 1)
    cell_of = np.ravel_multi_index(tuple(coords.T), tuple(dims)) if len(positions) else np.zeros(0, np.int64)
    order = np.argsort(cell_of, kind='stable')
    counts = np.bincount(cell_of, minlength=int(np.prod(dims)))
    cell_start = np.concatenate([[0], np.cumsum(counts)])
    return CellList(cell_size=float(cutoff), origin=origin, dims=dims, order=order,
                    cell_start=cell_start, cell_of=cell_of, positions=positions)


def _query_pairs(cells: CellList, queries: np.ndarray, cutoff: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All (query, particle) pairs closer than ``cutoff``, sorted, with displacements query - particle."""
    dimension = cells.dimension
    reach = int(math.ceil(cutoff / cells.cell_size - 1e-12))
    offsets = np.array(list(product(range(-reach, reach + 1), repeat=dimension)), dtype=np.int64)
    occupied = max(1, np.count_nonzero(np.diff(cells.cell_start)))
    per_query = len(offsets) * max(1.0, len(cells.order) / occupied)
    chunk = max(1, int(_CANDIDATE_LIMIT // per_query))

    found_q, found_j, found_r = [], [], []
    for start in range(0, len(queries), chunk):
        block = queries[start:start + chunk]
        home = cells.cell_coordinates(block)
        cand_q, cand_j = [], []
        for offset in offsets:
            target = home + offset
            ok = np.all((target >= 0) & (target < cells.dims), axis=1)
            if not np.any(ok):
                continue
            flat = np.ravel_multi_index(tuple(target[ok].T), tuple(cells.dims))
            begin = cells.cell_start[flat]
            counts = cells.cell_start[flat + 1] - begin
            total = int(counts.sum())
            if total == 0:
                continue
            owners = np.repeat(np.nonzero(ok)[0], counts)
            run_offset = np.repeat(begin - (np.cumsum(counts) - counts), counts)
            cand_q.append(owners + start)
            cand_j.append(cells.order[run_offset + np.arange(total)])
        if not cand_q:
            continue
        q = np.concatenate(cand_q)
        j = np.concatenate(cand_j)
        rvec = queries[q] - cells.positions[j]
        close = np.einsum('ij,ij->i', rvec, rvec) < cutoff * cutoff
        found_q.append(q[close])
        found_j.append(j[close])
        found_r.append(rvec[close])

    if not found_q:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros((0, dimension))
    q = np.concatenate(found_q)
    j = np.concatenate(found_j)
    r = np.concatenate(found_r)
    order = np.lexsort((j, q))
    return q[order], j[order], r[order]


def neighbor_pairs(cells: CellList, particles: ParticleSet,
                   cutoff: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Ordered pairs (i, j), i != j, within one body, with displacements r_i - r_j.

    Both (i, j) and (j, i) appear, sorted by i then j.
    """
    cutoff = cells.cell_size if cutoff is None else cutoff
    i, j, rvec = _query_pairs(cells, particles.positions, cutoff)
    distinct = i != j
    return i[distinct], j[distinct], rvec[distinct]


def cross_pairs(cells: CellList, queries: np.ndarray,
                cutoff: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairs between arbitrary query points and the particles of another body."""
    cutoff = cells.cell_size if cutoff is None else cutoff
    return _query_pairs(cells, np.asarray(queries, dtype=float), cutoff)


def neighbors_within(cells: CellList, particles: ParticleSet, i: int) -> np.ndarray:
    """Indices j != i within the list's cutoff of particle i, ascending."""
    _, j, _ = _query_pairs(cells, particles.positions[i:i + 1], cells.cell_size)
    return j[j != i]


def cross_neighbors(cells: CellList, particles: ParticleSet, p, cutoff: float) -> np.ndarray:
    """Particles of another body within ``cutoff`` of point ``p``, ascending."""
    if cutoff > cells.cell_size * (1.0 + 1e-12):
        raise KernelArgumentError(f"cross-body cutoff {cutoff:g} exceeds cell size {cells.cell_size:g}")
    point = np.asarray(p, dtype=float).reshape(1, particles.dimension)
    _, j, _ = _query_pairs(cells, point, cutoff)
    return j
