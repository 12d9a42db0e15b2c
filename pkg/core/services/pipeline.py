"""
End-to-end packing runs built from a RunConfig.

The three relaxation modes differ only in how the level sets are built:

- complex: every field on one shared grid, the outer field is the cell-wise
  Boolean subtraction of the inner fields from the domain field, and the
  outer body relaxes against the inner particles (coupled).
- separate: same fields, but every body relaxes on its own with only its
  own boundary treatment.
- separate-no-boolean: each inner field sits on a grid anchored to its own
  bounding box and the outer field is the exact subtraction SDF sampled on
  the domain grid, so the two discretizations can disagree at the
  interface; bodies relax on their own.
"""

from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Dict, List, Optional
import logging

from ..exceptions import GeometryValidationError, ParticleFileError, UnknownBodyError
from .diagnostics import DiagnosticsReport, build_report
from .geometry import Shape, Subtraction
from .kernel import SmoothingKernel
from .level_set import (
    LevelSetField,
    build_level_set,
    containment_violations,
    grid_bounds,
    padding_for,
    precompute_confinement,
    subtract_fields,
)
from .particle_io import read_particles, write_energy_history, write_particles
from .particles import BodyRole, ParticleSet, lattice_seed
from .relaxation import Body, MultiBodySystem, RelaxationResult, relax_complex, relax_single_body
from .run_config import OUTER_BODY_ID, RunConfig

logger = logging.getLogger(__name__)

ENERGY_HISTORY_FILE = 'energy_history.csv'


@dataclass
class BodyFields:
    field: LevelSetField
    boundary_field: Optional[LevelSetField] = None


@dataclass
class PipelineOutcome:
    system: MultiBodySystem
    paths: List[Path] = dataclass_field(default_factory=list)
    result: Optional[RelaxationResult] = None
    report: Optional[DiagnosticsReport] = None

    @property
    def converged(self) -> bool:
        return self.result is None or self.result.converged


class PackingPipeline:
    """
    Builds shapes, level sets and particles for one configuration.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.dimension = config.dimension
        self.solid_kernel = SmoothingKernel(config.solid_smoothing_ratio * config.dx, self.dimension)
        self.fluid_kernel = SmoothingKernel(config.fluid_smoothing_ratio * config.dx, self.dimension)
        self.eps = config.heaviside_ratio * config.level_set_spacing
        self._shapes = None

    @property
    def shapes(self) -> Dict[str, Shape]:
        """Domain under the outer body id, then every inner body by name."""
        if self._shapes is None:
            domain = self.config.domain.build()
            inners = {body.name: body.shape.build() for body in self.config.bodies}
            # Validates that the inner shapes sit strictly inside the domain
            Subtraction(domain, list(inners.values()))
            self._shapes = {OUTER_BODY_ID: domain, **inners}
        return self._shapes

    def build_fields(self) -> Dict[str, BodyFields]:
        config = self.config
        spacing = config.level_set_spacing
        shapes = dict(self.shapes)
        domain = shapes.pop(OUTER_BODY_ID)
        margin = padding_for(spacing, max(self.fluid_kernel.cutoff, self.solid_kernel.cutoff))
        lower, upper = domain.bounding_box()

        if config.mode == 'separate-no-boolean':
            bounds = grid_bounds(lower, upper, spacing, margin, snap=False)
            inner_raw = {
                name: build_level_set(shape, grid_bounds(*shape.bounding_box(), spacing, margin, snap=False), spacing)
                for name, shape in shapes.items()
            }
            outer_raw = build_level_set(Subtraction(domain, list(shapes.values())), bounds, spacing)
            domain_field = None
        else:
            bounds = grid_bounds(lower, upper, spacing, margin)
            domain_field = build_level_set(domain, bounds, spacing)
            inner_raw = {name: build_level_set(shape, bounds, spacing) for name, shape in shapes.items()}
            clashes = containment_violations(domain_field, list(inner_raw.values()))
            if len(clashes):
                raise GeometryValidationError(
                    f"inner bodies overlap each other or the domain surface at {len(clashes)} level-set cells, "
                    f"e.g. {clashes[0].tolist()}"
                )
            outer_raw = subtract_fields(domain_field, list(inner_raw.values()))

        fields = {
            name: BodyFields(precompute_confinement(raw, self.solid_kernel, self.eps))
            for name, raw in inner_raw.items()
        }
        if config.mode == 'complex':
            boundary = precompute_confinement(domain_field, self.fluid_kernel, self.eps)
            fields[OUTER_BODY_ID] = BodyFields(outer_raw, boundary)
        else:
            fields[OUTER_BODY_ID] = BodyFields(precompute_confinement(outer_raw, self.fluid_kernel, self.eps))
        logger.info("Built %d level sets (%s mode, l_f=%g, grid %s)", len(fields), config.mode, spacing,
                    "x".join(map(str, outer_raw.dims)))
        return fields

    def _role(self, body_id: str) -> BodyRole:
        if body_id == OUTER_BODY_ID:
            return BodyRole.OUTER_FLUID
        if any(body.name == body_id for body in self.config.bodies):
            return BodyRole.INNER_SOLID
        raise UnknownBodyError(body_id)

    def _ratio(self, role: BodyRole) -> float:
        if role is BodyRole.OUTER_FLUID:
            return self.config.fluid_smoothing_ratio
        return self.config.solid_smoothing_ratio

    def _system(self, fields: Dict[str, BodyFields], particles: Dict[str, ParticleSet]) -> MultiBodySystem:
        inners = [
            Body(particles[body.name], fields[body.name].field)
            for body in self.config.bodies if body.name in particles
        ]
        outer_fields = fields[OUTER_BODY_ID]
        outer = Body(particles[OUTER_BODY_ID], outer_fields.field, outer_fields.boundary_field)
        return MultiBodySystem(outer, inners)

    def seed(self) -> MultiBodySystem:
        fields = self.build_fields()
        particles = {}
        for body_id, body_fields in fields.items():
            role = self._role(body_id)
            particles[body_id] = lattice_seed(
                body_fields.field,
                self.config.dx,
                role,
                body_id=body_id,
                smoothing_ratio=self._ratio(role),
                reference_density=self.config.reference_density,
            )
        return self._system(fields, particles)

    def relax(self, system: MultiBodySystem) -> RelaxationResult:
        settings = self.config.relaxation_config()
        if self.config.mode == 'complex':
            return relax_complex(system, settings)

        results = [relax_single_body(body.particles, body.field, settings) for body in system.inners]
        outer = system.outer
        results.append(relax_single_body(outer.particles, outer.field, settings,
                                         interface_fields=system.inner_fields))
        return RelaxationResult(
            particles={k: v for r in results for k, v in r.particles.items()},
            histories={k: v for r in results for k, v in r.histories.items()},
            converged=all(r.converged for r in results),
            steps=max(r.steps for r in results),
            outer_id=OUTER_BODY_ID,
        )

    def load_system(self, particles_path: Path) -> MultiBodySystem:
        """Rebuild a system from a particle CSV, with fields from the config."""
        records = read_particles(particles_path)
        if OUTER_BODY_ID not in records:
            raise ParticleFileError(f"particle file {particles_path} has no '{OUTER_BODY_ID}' body")
        fields = self.build_fields()
        particles = {}
        for body_id, record in records.items():
            role = self._role(body_id)
            particles[body_id] = ParticleSet(
                body_id=body_id,
                role=role,
                positions=record.positions,
                spacing=self.config.dx,
                smoothing_length=self._ratio(role) * self.config.dx,
                reference_density=self.config.reference_density,
                volumes=record.volumes,
            )
        return self._system(fields, particles)

    def write_outputs(self, system: MultiBodySystem, report: Optional[DiagnosticsReport], stem: str) -> List[Path]:
        directory = self.config.output_directory
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ParticleFileError(f"cannot create output directory {directory}: {exc}") from exc
        bodies = [body.particles for body in system.bodies]
        return [
            write_particles(bodies, report, fmt, directory / f'{stem}.{fmt}')
            for fmt in self.config.output_formats
        ]


def run_seed(config: RunConfig) -> PipelineOutcome:
    pipeline = PackingPipeline(config)
    system = pipeline.seed()
    return PipelineOutcome(system, pipeline.write_outputs(system, None, 'particles_seed'))


def run_relax(config: RunConfig) -> PipelineOutcome:
    """
    Seed, relax in the configured mode, diagnose and write every output.

    Files are written whether or not the run converged.
    """
    pipeline = PackingPipeline(config)
    system = pipeline.seed()
    result = pipeline.relax(system)
    report = build_report(system, result)
    paths = pipeline.write_outputs(system, report, 'particles')
    paths.append(write_energy_history(result.history, config.output_directory / ENERGY_HISTORY_FILE))
    return PipelineOutcome(system, paths, result, report)


def run_diagnose(config: RunConfig, particles_path: Path) -> PipelineOutcome:
    pipeline = PackingPipeline(config)
    system = pipeline.load_system(particles_path)
    report = build_report(system)
    return PipelineOutcome(system, pipeline.write_outputs(system, report, 'particles_diagnosed'), report=report)
