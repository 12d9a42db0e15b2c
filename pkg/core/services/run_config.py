"""
Run configuration: a flat ``key = value`` grammar with sections.

    # disk in a unit box
    [domain]
    shape = box
    min = 0, 0
    max = 1, 1

    [body.disk]
    shape = circle
    center = 0.5, 0.5
    radius = 0.25

    [discretization]
    dx = 0.02

Sections are ``[domain]``, ``[discretization]``, ``[relaxation]``,
``[output]`` and one ``[body.<name>]`` per inner body. ``#`` starts a
comment at the start of a line or after whitespace. File paths are
resolved against the config file's directory and must exist.
"""

from dataclasses import dataclass, field as dataclass_field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Type, Union
import logging
import re

from rest_framework import serializers
from rest_framework.settings import api_settings

from ..exceptions import ConfigError
from ..serializers import (
    BodySerializer,
    DiscretizationSerializer,
    OutputSerializer,
    RelaxationSerializer,
    SHAPE_DIMENSION,
    ShapeSerializer,
)
from .geometry import Ball, Box, Shape
from .geometry_io import load_polygon_csv, load_stl
from .relaxation import RelaxationConfig

logger = logging.getLogger(__name__)

OUTER_BODY_ID = 'fluid'
SECTION_SERIALIZERS: Dict[str, Type[serializers.Serializer]] = {
    'domain': ShapeSerializer,
    'discretization': DiscretizationSerializer,
    'relaxation': RelaxationSerializer,
    'output': OutputSerializer,
}

_SECTION = re.compile(r'^\[\s*([^\]]*?)\s*\]$')
_COMMENT = re.compile(r'(^|\s)#.*$')
_BODY_NAME = re.compile(r'^[A-Za-z0-9_-]+$')


@dataclass(frozen=True)
class ShapeDeclaration:
    kind: str
    min: Optional[Tuple[float, ...]] = None
    max: Optional[Tuple[float, ...]] = None
    center: Optional[Tuple[float, ...]] = None
    radius: Optional[float] = None
    file: Optional[Path] = None

    @property
    def dimension(self) -> int:
        if self.kind == 'box':
            return len(self.min)
        return SHAPE_DIMENSION[self.kind]

    def build(self) -> Shape:
        if self.kind == 'box':
            return Box(self.min, self.max)
        if self.kind in ('circle', 'sphere'):
            return Ball(self.center, self.radius)
        if self.kind == 'polygon':
            return load_polygon_csv(self.file)
        return load_stl(self.file)

    def entries(self) -> List[Tuple[str, str]]:
        lines = [('shape', self.kind)]
        for key in ('min', 'max', 'center'):
            value = getattr(self, key)
            if value is not None:
                lines.append((key, ', '.join(repr(float(v)) for v in value)))
        if self.radius is not None:
            lines.append(('radius', repr(self.radius)))
        if self.file is not None:
            lines.append(('file', str(self.file)))
        return lines


@dataclass(frozen=True)
class BodyDeclaration:
    name: str
    shape: ShapeDeclaration
    pressure: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    domain: ShapeDeclaration
    dx: float
    level_set_spacing: float
    bodies: Tuple[BodyDeclaration, ...] = ()
    solid_smoothing_ratio: float = 1.05
    fluid_smoothing_ratio: float = 1.3
    heaviside_ratio: float = 0.75
    reference_density: float = 1.0
    mode: str = 'complex'
    cfl: float = 0.25
    max_steps: int = 10000
    convergence_threshold: float = 1e-4
    fluid_pressure: float = 1.0
    log_every: int = 100
    output_directory: Path = Path('output')
    output_formats: Tuple[str, ...] = ('csv', 'vtk')
    source: Optional[Path] = dataclass_field(default=None, compare=False)

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    def body(self, name: str) -> BodyDeclaration:
        for body in self.bodies:
            if body.name == name:
                return body
        raise KeyError(name)

    def relaxation_config(self) -> RelaxationConfig:
        return RelaxationConfig(
            cfl=self.cfl,
            max_steps=self.max_steps,
            convergence_threshold=self.convergence_threshold,
            background_pressure=self.fluid_pressure,
            body_pressures={b.name: b.pressure for b in self.bodies if b.pressure is not None},
            log_every=self.log_every,
        )


@dataclass
class _Section:
    name: str
    line: int
    entries: Dict[str, Tuple[str, int]] = dataclass_field(default_factory=dict)


def _split_sections(text: str) -> List[_Section]:
    sections: List[_Section] = []
    seen = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _COMMENT.sub('', raw).strip()
        if not line:
            continue
        header = _SECTION.match(line)
        if header:
            name = header.group(1)
            if name in seen:
                raise ConfigError(f"duplicate section [{name}]", line=number)
            seen.add(name)
            sections.append(_Section(name, number))
            continue
        if '=' not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=number)
        key, value = (part.strip() for part in line.split('=', 1))
        if not sections:
            raise ConfigError("key outside of any section", key=key, line=number)
        section = sections[-1]
        if key in section.entries:
            raise ConfigError(f"duplicate key in [{section.name}]", key=key, line=number)
        section.entries[key] = (value, number)
    return sections


def _validate(section: _Section, serializer_class: Type[serializers.Serializer]) -> dict:
    serializer = serializer_class(data={key: value for key, (value, _) in section.entries.items()})
    unknown = [key for key in section.entries if key not in serializer.fields]
    if unknown:
        key = unknown[0]
        raise ConfigError(f"unknown key in [{section.name}]", key=key, line=section.entries[key][1])
    if serializer.is_valid():
        return dict(serializer.validated_data)

    key, details = next(iter(serializer.errors.items()))
    detail = details[0] if isinstance(details, list) else details
    if key == api_settings.NON_FIELD_ERRORS_KEY:
        raise ConfigError(f"invalid [{section.name}]: {detail}", line=section.line)
    if getattr(detail, 'code', None) == 'required' and key not in section.entries:
        raise ConfigError(f"missing required key in [{section.name}]", key=key, line=section.line)
    line = section.entries[key][1] if key in section.entries else section.line
    raise ConfigError(f"invalid value in [{section.name}]: {detail}", key=key, line=line)


def _resolve(value: str, base_dir: Path) -> Path:
    path = Path(value).expanduser()
    return path if path.is_absolute() else base_dir / path


def _shape(section: _Section, data: dict, base_dir: Path) -> ShapeDeclaration:
    file_path = None
    if 'file' in data:
        file_path = _resolve(data['file'], base_dir)
        if not file_path.is_file():
            raise ConfigError(f"file not found: {file_path}", key='file', line=section.entries['file'][1])
    return ShapeDeclaration(
        kind=data['shape'],
        min=data.get('min'),
        max=data.get('max'),
        center=data.get('center'),
        radius=data.get('radius'),
        file=file_path,
    )


def parse_config(text: str, base_dir: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Parse and validate a run configuration.

    Args:
        text: config file contents
        base_dir: directory relative paths resolve against (default: cwd)

    Returns:
        RunConfig with every default applied

    Raises:
        ConfigError: naming the offending key and line
    """
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    sections = _split_sections(text)
    by_name = {}
    bodies = []
    for section in sections:
        if section.name.startswith('body.'):
            name = section.name[len('body.'):]
            if not _BODY_NAME.match(name):
                raise ConfigError(f"invalid body name '{name}'", line=section.line)
            if name == OUTER_BODY_ID:
                raise ConfigError(f"body name '{OUTER_BODY_ID}' is reserved for the outer body", line=section.line)
            data = _validate(section, BodySerializer)
            bodies.append(BodyDeclaration(name, _shape(section, data, base_dir), data.get('pressure')))
        elif section.name in SECTION_SERIALIZERS:
            by_name[section.name] = section
        else:
            raise ConfigError(f"unknown section [{section.name}]", line=section.line)

    if 'domain' not in by_name:
        raise ConfigError("missing section [domain]", key='shape')
    if 'discretization' not in by_name:
        raise ConfigError("missing required key in [discretization]", key='dx')

    domain_section = by_name['domain']
    domain = _shape(domain_section, _validate(domain_section, ShapeSerializer), base_dir)
    validated = {
        name: _validate(by_name.get(name, _Section(name, 0)), SECTION_SERIALIZERS[name])
        for name in ('discretization', 'relaxation', 'output')
    }

    for body, section in zip(bodies, [s for s in sections if s.name.startswith('body.')]):
        if body.shape.dimension != domain.dimension:
            raise ConfigError(
                f"body '{body.name}' is {body.shape.dimension}D, domain is {domain.dimension}D",
                key='shape', line=section.entries['shape'][1],
            )

    output = validated['output']
    return RunConfig(
        domain=domain,
        bodies=tuple(bodies),
        output_directory=_resolve(output['directory'], base_dir),
        output_formats=tuple(output['formats']),
        **validated['discretization'],
        **validated['relaxation'],
    )


def render_config(config: RunConfig) -> str:
    """Inverse of parse_config: floats in repr form, paths as stored."""
    blocks = []

    def block(header: str, entries: List[Tuple[str, str]]):
        blocks.append('\n'.join([f'[{header}]', *(f'{key} = {value}' for key, value in entries)]))

    block('domain', config.domain.entries())
    block('discretization', [
        ('dx', repr(config.dx)),
        ('level_set_spacing', repr(config.level_set_spacing)),
        ('solid_smoothing_ratio', repr(config.solid_smoothing_ratio)),
        ('fluid_smoothing_ratio', repr(config.fluid_smoothing_ratio)),
        ('heaviside_ratio', repr(config.heaviside_ratio)),
        ('reference_density', repr(config.reference_density)),
    ])
    block('relaxation', [
        ('mode', config.mode),
        ('cfl', repr(config.cfl)),
        ('max_steps', str(config.max_steps)),
        ('convergence_threshold', repr(config.convergence_threshold)),
        ('fluid_pressure', repr(config.fluid_pressure)),
        ('log_every', str(config.log_every)),
    ])
    block('output', [
        ('directory', str(config.output_directory)),
        ('formats', ', '.join(config.output_formats)),
    ])
    for body in config.bodies:
        entries = body.shape.entries()
        if body.pressure is not None:
            entries.append(('pressure', repr(body.pressure)))
        block(f'body.{body.name}', entries)
    return '\n\n'.join(blocks) + '\n'


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    config = parse_config(text, base_dir=path.resolve().parent)
    logger.info("Loaded config %s: %s mode, %d inner bodies, dx=%g",
                path, config.mode, len(config.bodies), config.dx)
    return replace(config, source=path)
