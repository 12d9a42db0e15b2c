"""
Physics-driven particle relaxation.

Each step the particles feel the background-pressure force

    F_i = -(2 p0 V_i / m_i) * [sum_j grad W_ij V_j + I(r_i)]

where I is the confinement integral of the body's level set. Velocities
are reset every step, so a step moves a particle by F dt^2 / 2 with
dt = CFL * sqrt(h / max|F|), after which particles that drifted past
phi = -dx/2 are projected back onto that offset surface.

In complex relaxation the outer (fluid) body additionally sums over the
particles of the contacting inner (solid) bodies, which completes its
kernel support at the shared interface; its confinement band and
surface bounding then only act on the external boundary.
"""

from dataclasses import dataclass, field as dataclass_field
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from ..exceptions import ConfigError, InconsistentGeometryError, LevelSetDomainError, UnknownBodyError
from .diagnostics import interface_layer, kinetic_energy
from .level_set import LevelSetField
from .particles import BodyRole, CellList, ParticleSet, build_cell_list, cross_pairs, neighbor_pairs

logger = logging.getLogger(__name__)

MAX_CFL = 0.25
# Force floor, relative to h, below which a body counts as at rest
REST_FLOOR = 1e-12
BOUNDING_SLACK = 0.1


@dataclass
class RelaxationConfig:
    cfl: float = 0.25
    max_steps: int = 10000
    convergence_threshold: float = 1e-4
    background_pressure: float = 1.0
    body_pressures: Dict[str, float] = dataclass_field(default_factory=dict)
    bounding_slack: float = BOUNDING_SLACK
    log_every: int = 100

    def __post_init__(self):
        if not 0 < self.cfl <= MAX_CFL:
            raise ConfigError(f"CFL factor must lie in (0, {MAX_CFL}], got {self.cfl}", key='cfl')
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ConfigError(f"max steps must be a positive integer, got {self.max_steps}", key='max_steps')
        if not self.convergence_threshold > 0:
            raise ConfigError("convergence threshold must be positive", key='convergence_threshold')
        if not self.background_pressure > 0:
            raise ConfigError("background pressure must be positive", key='fluid_pressure')
        for body_id, pressure in self.body_pressures.items():
            if not pressure > 0:
                raise ConfigError(f"background pressure of body '{body_id}' must be positive", key='pressure')
        if self.log_every < 1:
            raise ConfigError("log_every must be at least 1", key='log_every')

    def pressure_for(self, body_id: str) -> float:
        return self.body_pressures.get(body_id, self.background_pressure)


@dataclass(eq=False)
class Body:
    """
    Particles plus the level set they live in.

    ``boundary_field`` carries the confinement band and the surface used
    for bounding when it differs from ``field``; the outer body in complex
    relaxation bounds against the external boundary only.
    """

    particles: ParticleSet
    field: LevelSetField
    boundary_field: Optional[LevelSetField] = None

    @property
    def body_id(self) -> str:
        return self.particles.body_id

    @property
    def bounding_field(self) -> LevelSetField:
        return self.boundary_field if self.boundary_field is not None else self.field


@dataclass(eq=False)
class MultiBodySystem:
    outer: Body
    inners: List[Body] = dataclass_field(default_factory=list)

    def __post_init__(self):
        if self.outer.particles.role is not BodyRole.OUTER_FLUID:
            raise InconsistentGeometryError("outer body must have the outer-fluid role")
        names = [body.body_id for body in self.bodies]
        if len(set(names)) != len(names):
            raise InconsistentGeometryError(f"body ids must be unique, got {names}")
        for body in self.inners:
            if body.particles.role is not BodyRole.INNER_SOLID:
                raise InconsistentGeometryError(f"inner body '{body.body_id}' must have the inner-solid role")
            if body.particles.dimension != self.outer.particles.dimension:
                raise InconsistentGeometryError("all bodies must share one spatial dimension")

    @property
    def bodies(self) -> List[Body]:
        return [*self.inners, self.outer]

    @property
    def inner_fields(self) -> List[LevelSetField]:
        return [body.field for body in self.inners]

    def body(self, body_id: str) -> Body:
        for body in self.bodies:
            if body.body_id == body_id:
                return body
        raise UnknownBodyError(body_id)


@dataclass
class EnergyRecord:
    step: int
    dt: float
    total: float
    interface: float
    normalized: float


@dataclass
class EnergyHistory:
    """
    Kinetic energy per step, normalized by the first step's value.

    The tracked metric is the interface-layer energy when the body has an
    interface, falling back to the all-particle energy when the first
    step's interface energy is zero.
    """

    body_id: str
    track_interface: bool = False
    records: List[EnergyRecord] = dataclass_field(default_factory=list)
    reference: Optional[float] = None

    def record(self, step: int, dt: float, total: float, interface: float) -> float:
        if self.reference is None:
            if self.track_interface and interface == 0.0:
                self.track_interface = False
            self.reference = interface if self.track_interface else total
        value = interface if self.track_interface else total
        normalized = value / self.reference if self.reference > 0 else 0.0
        self.records.append(EnergyRecord(step, dt, total, interface, normalized))
        return normalized

    @property
    def normalized(self) -> np.ndarray:
        return np.array([r.normalized for r in self.records])

    @property
    def terminal(self) -> float:
        return self.records[-1].normalized if self.records else 1.0

    def __len__(self):
        return len(self.records)


@dataclass
class RelaxationResult:
    particles: Dict[str, ParticleSet]
    histories: Dict[str, EnergyHistory]
    converged: bool
    steps: int
    outer_id: str

    @property
    def outer(self) -> ParticleSet:
        return self.particles[self.outer_id]

    @property
    def history(self) -> EnergyHistory:
        return self.histories[self.outer_id]


def _pair_sum(particles: ParticleSet, cells: CellList) -> np.ndarray:
    """Sum_j grad W_ij V_j over same-body neighbors."""
    i, j, rvec = neighbor_pairs(cells, particles, particles.cutoff)
    contributions = particles.kernel.gradient(rvec) * particles.volumes[j, None]
    return _accumulate(i, contributions, particles.count)


def _accumulate(index: np.ndarray, contributions: np.ndarray, count: int) -> np.ndarray:
    total = np.zeros((count, contributions.shape[1]))
    for axis in range(contributions.shape[1]):
        total[:, axis] = np.bincount(index, weights=contributions[:, axis], minlength=count)
    return total


def _band_for(particles: ParticleSet, field: LevelSetField) -> np.ndarray:
    if not field.has_band:
        raise LevelSetDomainError(f"confinement band missing for body '{particles.body_id}'")
    if not math.isclose(field.band_cutoff, particles.cutoff, rel_tol=1e-12):
        raise LevelSetDomainError(
            f"confinement band of body '{particles.body_id}' was built for cutoff {field.band_cutoff:g}, "
            f"particles use {particles.cutoff:g}"
        )
    return field.confinement(particles.positions)


def pressure_force_confined(particles: ParticleSet, cells: CellList, field: LevelSetField,
                            pressure: float = 1.0) -> np.ndarray:
    """Single-body force with static confinement; writes and returns accelerations."""
    support = _pair_sum(particles, cells) + _band_for(particles, field)
    scale = 2.0 * pressure * particles.volumes / particles.masses
    particles.accelerations = -scale[:, None] * support
    return particles.accelerations


def pressure_force_complex(outer: ParticleSet, outer_cells: CellList, boundary_field: LevelSetField,
                           inners: Sequence[ParticleSet] = (), inner_cells: Sequence[CellList] = (),
                           pressure: float = 1.0, inner_pressures: Sequence[float] = ()) -> np.ndarray:
    """
    Outer-body force with contributions from contacting inner bodies.

    Cross terms use the outer kernel; inner cell lists must be built with
    the outer cutoff. The confinement term comes from ``boundary_field``,
    the external boundary of the outer body.
    """
    if len(inner_cells) != len(inners):
        raise InconsistentGeometryError("one cell list per inner body is required")
    pressures = list(inner_pressures) or [pressure] * len(inners)
    kernel = outer.kernel
    support = _pair_sum(outer, outer_cells)
    for inner, cells, inner_pressure in zip(inners, inner_cells, pressures):
        if cells.cell_size < outer.cutoff * (1.0 - 1e-12):
            raise InconsistentGeometryError(
                f"cell list of '{inner.body_id}' is finer than the outer cutoff {outer.cutoff:g}"
            )
        i, k, rvec = cross_pairs(cells, outer.positions, outer.cutoff)
        weights = (inner_pressure / pressure) * inner.volumes[k]
        support += _accumulate(i, kernel.gradient(rvec) * weights[:, None], outer.count)
    support += _band_for(outer, boundary_field)
    scale = 2.0 * pressure * outer.volumes / outer.masses
    outer.accelerations = -scale[:, None] * support
    return outer.accelerations


def relax_time_step(particles: ParticleSet, config: RelaxationConfig) -> Tuple[float, bool]:
    """
    Step size dt = CFL * sqrt(h / max|F|) and whether the body is at rest.

    With all forces zero a floor of 1e-12 h replaces max|F| and the body is
    flagged as at rest.
    """
    h = particles.smoothing_length
    largest = float(np.max(np.linalg.norm(particles.accelerations, axis=1))) if particles.count else 0.0
    floor = REST_FLOOR * h
    at_rest = largest <= floor
    return config.cfl * math.sqrt(h / max(largest, floor)), at_rest


def advance_positions(particles: ParticleSet, dt: float) -> np.ndarray:
    # Velocity restarts from zero each step
    particles.positions += 0.5 * particles.accelerations * dt * dt
    return particles.positions


def surface_bound(particles: ParticleSet, field: LevelSetField) -> np.ndarray:
    """Project particles with phi >= -dx/2 back onto the phi = -dx/2 surface."""
    half = 0.5 * particles.spacing
    phi = field.interpolate(particles.positions)
    crossing = np.nonzero(phi >= -half)[0]
    if len(crossing):
        normals, valid = field.normals(particles.positions[crossing])
        moved = crossing[valid]
        shift = (phi[moved] + half)[:, None] * normals[valid]
        particles.positions[moved] -= shift
        skipped = len(crossing) - len(moved)
        if skipped:
            logger.warning("Body '%s': %d particles skipped surface bounding (undefined normal)",
                           particles.body_id, skipped)
    return particles.positions


def bounding_violations(particles: ParticleSet, field: LevelSetField, tolerance: float) -> np.ndarray:
    """Indices of particles with phi > -dx/2 + tolerance."""
    phi = field.interpolate(particles.positions)
    return np.nonzero(phi > -0.5 * particles.spacing + tolerance)[0]


def check_interface_consistency(system: MultiBodySystem) -> None:
    """Require phi_outer = -phi_inner to within 2 l_f near every inner surface."""
    outer_field = system.outer.field
    for body in system.inners:
        inner_field = body.field
        limit = 2.0 * max(inner_field.spacing, outer_field.spacing)
        centers = inner_field.cell_centers()
        phi_inner = inner_field.phi.ravel()
        near = (np.abs(phi_inner) <= limit) & outer_field.inside_domain(centers)
        mismatch = np.abs(outer_field.interpolate(centers[near]) + phi_inner[near])
        if len(mismatch) and mismatch.max() > limit:
            raise InconsistentGeometryError(
                f"geometry fields inconsistent at body '{body.body_id}' "
                f"(mismatch {mismatch.max():.3g} > {limit:.3g}): rebuild with Boolean subtraction"
            )


class _BodyStepper:
    """Per-body bookkeeping shared by the single-body and complex drivers."""

    def __init__(self, body: Body, config: RelaxationConfig, interface_fields: Sequence[LevelSetField] = ()):
        self.body = body
        self.particles = body.particles
        self.config = config
        self.interface_fields = list(interface_fields)
        self.history = EnergyHistory(body.body_id, track_interface=bool(self.interface_fields))
        self.converged = False
        self._violations_reported = False

    @property
    def pressure(self) -> float:
        return self.config.pressure_for(self.body.body_id)

    def finish_step(self, step: int) -> None:
        particles = self.particles
        dt, at_rest = relax_time_step(particles, self.config)
        total = kinetic_energy(particles, dt)
        if self.interface_fields:
            layer = interface_layer(particles, self.interface_fields)
            interface = kinetic_energy(particles, dt, layer)
        else:
            interface = total
        normalized = self.history.record(step, dt, total, interface)
        advance_positions(particles, dt)
        surface_bound(particles, self.body.bounding_field)
        self._check_bounding()
        self.converged = at_rest or normalized < self.config.convergence_threshold
        if step % self.config.log_every == 0:
            logger.debug("step %d body '%s': dt=%.6g E=%.6g E_interface=%.6g E_norm=%.6g",
                         step, particles.body_id, dt, total, interface, normalized)

    def _check_bounding(self) -> None:
        if self._violations_reported:
            return
        tolerance = self.config.bounding_slack * self.particles.spacing
        outside = bounding_violations(self.particles, self.body.bounding_field, tolerance)
        if len(outside):
            self._violations_reported = True
            logger.warning("Body '%s': %d particles beyond the bounding surface after projection",
                           self.particles.body_id, len(outside))


def _summarize(steppers: Sequence[_BodyStepper], steps: int, converged: bool, outer_id: str) -> RelaxationResult:
    for stepper in steppers:
        logger.info("Body '%s': %d steps, terminal normalized energy %.3e",
                    stepper.body.body_id, steps, stepper.history.terminal)
    if not converged:
        logger.warning("Relaxation did not converge within %d steps", steps)
    return RelaxationResult(
        particles={s.body.body_id: s.particles for s in steppers},
        histories={s.body.body_id: s.history for s in steppers},
        converged=converged,
        steps=steps,
        outer_id=outer_id,
    )


def relax_single_body(particles: ParticleSet, field: LevelSetField, config: RelaxationConfig,
                      interface_fields: Sequence[LevelSetField] = ()) -> RelaxationResult:
    """
    Relax one body with static confinement and surface bounding.

    Args:
        particles: seeded particles, updated in place
        field: level set carrying a confinement band for this body's kernel
        config: step control
        interface_fields: inner-body fields whose first particle layer defines
            the interface energy (separate relaxation of an outer body)

    Returns:
        RelaxationResult; ``converged`` is False when max steps ran out
    """
    stepper = _BodyStepper(Body(particles, field), config, interface_fields)
    step = 0
    for step in range(1, config.max_steps + 1):
        cells = build_cell_list(particles, particles.cutoff)
        pressure_force_confined(particles, cells, field, stepper.pressure)
        stepper.finish_step(step)
        if stepper.converged:
            break
    return _summarize([stepper], step, stepper.converged, particles.body_id)


def relax_complex(system: MultiBodySystem, config: RelaxationConfig) -> RelaxationResult:
    """
    Coupled relaxation of inner solids and the outer fluid.

    Every iteration relaxes all inner bodies first, then the outer body
    with the inner particles completing its support, and stops when every
    body has converged.
    """
    outer = system.outer
    if not system.inners:
        return relax_single_body(outer.particles, outer.bounding_field, config)
    check_interface_consistency(system)

    inner_steppers = [_BodyStepper(body, config) for body in system.inners]
    outer_stepper = _BodyStepper(outer, config, system.inner_fields)
    fluid = outer.particles
    step = 0
    converged = False
    for step in range(1, config.max_steps + 1):
        for stepper in inner_steppers:
            solid = stepper.particles
            cells = build_cell_list(solid, solid.cutoff)
            pressure_force_confined(solid, cells, stepper.body.bounding_field, stepper.pressure)
            stepper.finish_step(step)

        fluid_cells = build_cell_list(fluid, fluid.cutoff)
        solid_cells = [build_cell_list(s.particles, fluid.cutoff) for s in inner_steppers]
        pressure_force_complex(
            fluid, fluid_cells, outer.bounding_field,
            inners=[s.particles for s in inner_steppers],
            inner_cells=solid_cells,
            pressure=outer_stepper.pressure,
            inner_pressures=[s.pressure for s in inner_steppers],
        )
        outer_stepper.finish_step(step)

        converged = outer_stepper.converged and all(s.converged for s in inner_steppers)
        if converged:
            break
    return _summarize([*inner_steppers, outer_stepper], step, converged, fluid.body_id)
