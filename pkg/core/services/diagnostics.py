"""
Quality metrics for relaxed particle distributions.

Kernel gradient summation (KGS) measures zero-order consistency, the
kinetic energy built from v = F dt tracks convergence, and density
summation shows how homogeneous the packing is.
"""

from dataclasses import dataclass, field as dataclass_field
from typing import TYPE_CHECKING, Dict, Optional, Sequence
import logging

import numpy as np

from .level_set import LevelSetField
from .particles import BodyRole, ParticleSet, build_cell_list, cross_pairs, neighbor_pairs

if TYPE_CHECKING:
    from .relaxation import MultiBodySystem, RelaxationResult

logger = logging.getLogger(__name__)


def kinetic_energy(particles: ParticleSet, dt: float, layer: Optional[np.ndarray] = None) -> float:
    """E = 1/2 sum m (|F| dt)^2, optionally over a boolean particle filter."""
    speed_squared = np.sum(particles.accelerations ** 2, axis=1) * dt * dt
    masses = particles.masses
    if layer is not None:
        speed_squared = speed_squared[layer]
        masses = masses[layer]
    return 0.5 * float(np.sum(masses * speed_squared))


def interface_layer(particles: ParticleSet, inner_fields: Sequence[LevelSetField]) -> np.ndarray:
    """Flag particles within one spacing of any inner surface."""
    flags = np.zeros(particles.count, dtype=bool)
    for inner in inner_fields:
        inside = inner.inside_domain(particles.positions)
        if not np.any(inside):
            continue
        distance = np.abs(inner.interpolate(particles.positions[inside]))
        flags[np.nonzero(inside)[0][distance <= particles.spacing]] = True
    return flags


def kernel_gradient_sum(particles: ParticleSet, contacts: Sequence[ParticleSet] = ()) -> np.ndarray:
    """
    Sum_j grad W_ij V_j over own particles plus contact-body particles.

    Contact terms use this body's kernel, as in the complex force.
    """
    kernel = particles.kernel
    cells = build_cell_list(particles, particles.cutoff)
    i, j, rvec = neighbor_pairs(cells, particles)
    summed = np.zeros_like(particles.positions)
    _add(summed, i, kernel.gradient(rvec) * particles.volumes[j, None])
    for other in contacts:
        if other.count == 0:
            continue
        other_cells = build_cell_list(other, max(particles.cutoff, other.cutoff))
        i, k, rvec = cross_pairs(other_cells, particles.positions, particles.cutoff)
        _add(summed, i, kernel.gradient(rvec) * other.volumes[k, None])
    return summed


def density_summation(particles: ParticleSet, contacts: Sequence[ParticleSet] = ()) -> np.ndarray:
    """rho_i = sum_j m_j W_ij including the particle itself."""
    kernel = particles.kernel
    density = particles.masses * kernel.value(0.0)
    cells = build_cell_list(particles, particles.cutoff)
    i, j, rvec = neighbor_pairs(cells, particles)
    density += np.bincount(i, weights=particles.masses[j] * kernel.value(np.linalg.norm(rvec, axis=1)),
                           minlength=particles.count)
    for other in contacts:
        if other.count == 0:
            continue
        other_cells = build_cell_list(other, max(particles.cutoff, other.cutoff))
        i, k, rvec = cross_pairs(other_cells, particles.positions, particles.cutoff)
        density += np.bincount(i, weights=other.masses[k] * kernel.value(np.linalg.norm(rvec, axis=1)),
                               minlength=particles.count)
    return density


def _add(target: np.ndarray, index: np.ndarray, values: np.ndarray) -> None:
    for axis in range(target.shape[1]):
        target[:, axis] += np.bincount(index, weights=values[:, axis], minlength=len(target))


def _contacts(system: 'MultiBodySystem', body_id: str):
    body = system.body(body_id)
    if body.particles.role is BodyRole.OUTER_FLUID:
        return body, [inner.particles for inner in system.inners]
    return body, []


def kernel_gradient_summation(system: 'MultiBodySystem', body_id: str) -> np.ndarray:
    """
    KGS of one body: own neighbors, plus contact solids for the outer fluid.

    The confinement band is left out; KGS measures particle-only support.
    """
    body, contacts = _contacts(system, body_id)
    return kernel_gradient_sum(body.particles, contacts)


@dataclass
class BodyDiagnostics:
    body_id: str
    role: BodyRole
    spacing: float
    kgs: np.ndarray
    density: np.ndarray
    interface_layer: np.ndarray

    @property
    def kgs_magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.kgs, axis=1)

    @property
    def interface_kgs(self) -> float:
        """Mean |KGS| * dx over the interface layer (0 when the layer is empty)."""
        if not np.any(self.interface_layer):
            return 0.0
        return float(np.mean(self.kgs_magnitude[self.interface_layer]) * self.spacing)

    @property
    def mean_kgs(self) -> float:
        return float(np.mean(self.kgs_magnitude) * self.spacing) if len(self.kgs) else 0.0


@dataclass
class DiagnosticsReport:
    bodies: Dict[str, BodyDiagnostics] = dataclass_field(default_factory=dict)
    normalized_energy: Optional[np.ndarray] = None
    converged: Optional[bool] = None

    def __getitem__(self, body_id: str) -> BodyDiagnostics:
        return self.bodies[body_id]

    def summary(self) -> Dict[str, Dict[str, float]]:
        return {
            body_id: {
                'mean_kgs': body.mean_kgs,
                'interface_kgs': body.interface_kgs,
                'interface_particles': int(body.interface_layer.sum()),
                'density_min': float(body.density.min()) if len(body.density) else 0.0,
                'density_max': float(body.density.max()) if len(body.density) else 0.0,
            }
            for body_id, body in self.bodies.items()
        }


def build_report(system: 'MultiBodySystem', result: Optional['RelaxationResult'] = None) -> DiagnosticsReport:
    """Compute KGS, density and interface membership for every body."""
    report = DiagnosticsReport()
    inner_fields = system.inner_fields
    for body in system.bodies:
        particles = body.particles
        _, contacts = _contacts(system, body.body_id)
        if particles.role is BodyRole.OUTER_FLUID and inner_fields:
            layer = interface_layer(particles, inner_fields)
        else:
            layer = np.zeros(particles.count, dtype=bool)
        report.bodies[body.body_id] = BodyDiagnostics(
            body_id=body.body_id,
            role=particles.role,
            spacing=particles.spacing,
            kgs=kernel_gradient_sum(particles, contacts),
            density=density_summation(particles, contacts),
            interface_layer=layer,
        )
    if result is not None:
        report.normalized_energy = result.history.normalized
        report.converged = result.converged
    for body_id, values in report.summary().items():
        logger.info("Diagnostics '%s': mean |KGS|dx=%.3e, interface |KGS|dx=%.3e over %d particles",
                    body_id, values['mean_kgs'], values['interface_kgs'], values['interface_particles'])
    return report
