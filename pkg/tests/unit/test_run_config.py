import pytest

from core.exceptions import ConfigError
from core.services.geometry import Ball, Box, Polygon
from core.services.run_config import load_config, parse_config, render_config
from tests.factories import RunConfigFactory

DISK_IN_BOX = """\
# disk in a unit box
[domain]
shape = box
min = 0, 0
max = 1, 1

[body.disk]
shape = circle
center = 0.5, 0.5   # middle of the box
radius = 0.25

[discretization]
dx = 0.02
"""


def test_defaults_are_applied(tmp_path):
    config = parse_config(DISK_IN_BOX, tmp_path)
    assert config.dx == 0.02
    assert config.level_set_spacing == pytest.approx(0.01)
    assert config.cfl == 0.25
    assert config.mode == 'complex'
    assert config.solid_smoothing_ratio == 1.05
    assert config.fluid_smoothing_ratio == 1.3
    assert config.output_formats == ('csv', 'vtk')
    assert config.output_directory == tmp_path / 'output'
    assert config.dimension == 2
    assert [body.name for body in config.bodies] == ['disk']
    assert isinstance(config.domain.build(), Box)
    assert isinstance(config.body('disk').shape.build(), Ball)


def test_negative_spacing_names_key_and_line(tmp_path):
    text = DISK_IN_BOX.replace('dx = 0.02', 'dx = -0.1')
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text, tmp_path)
    assert excinfo.value.key == 'dx'
    assert excinfo.value.line == 13
    assert "key 'dx'" in str(excinfo.value)
    assert 'line 13' in str(excinfo.value)


@pytest.mark.parametrize('replacement,key', [
    ('dx = abc', 'dx'),
    ('dx = nan', 'dx'),
    ('dx = 0.02\nspacing = 0.01', 'spacing'),
    ('level_set_spacing = 0.01', 'dx'),
])
def test_invalid_discretization(tmp_path, replacement, key):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(DISK_IN_BOX.replace('dx = 0.02', replacement), tmp_path)
    assert excinfo.value.key == key


def test_missing_discretization_section(tmp_path):
    text = DISK_IN_BOX.split('[discretization]')[0]
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text, tmp_path)
    assert excinfo.value.key == 'dx'


@pytest.mark.parametrize('text,message', [
    ('[domain]\nshape = box\nmin = 0, 0\nmax = 1, 1\n[discretization]\ndx = 0.1\n[mesh]\n', 'unknown section'),
    ('dx = 0.1\n', 'outside of any section'),
    ('[domain]\nshape = box\nshape = circle\n', 'duplicate key'),
    ('[domain]\nshape box\n', "expected 'key = value'"),
    ('[domain]\nshape = box\nmin = 0, 0\nmax = 1, 1\n[discretization]\ndx = 0.1\n[body.fluid]\n'
     'shape = circle\ncenter = 0.5, 0.5\nradius = 0.1\n', 'reserved'),
    ('[domain]\nshape = box\nmin = 0, 0\nmax = 1, 1\n[discretization]\ndx = 0.1\n[relaxation]\ncfl = 0.3\n',
     'CFL factor'),
])
def test_malformed_configs(tmp_path, text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text, tmp_path)


def test_shape_keys_follow_the_kind(tmp_path):
    text = DISK_IN_BOX.replace('radius = 0.25', 'radius = 0.25\nmin = 0, 0')
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text, tmp_path)
    assert excinfo.value.key == 'min'


def test_body_dimension_must_match_domain(tmp_path):
    text = DISK_IN_BOX.replace('shape = circle\ncenter = 0.5, 0.5', 'shape = sphere\ncenter = 0.5, 0.5, 0.5')
    with pytest.raises(ConfigError, match='3D, domain is 2D'):
        parse_config(text, tmp_path)


def test_missing_geometry_file_names_the_file_key(tmp_path):
    text = DISK_IN_BOX.replace('shape = circle\ncenter = 0.5, 0.5   # middle of the box\nradius = 0.25',
                               'shape = polygon\nfile = absent.csv')
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text, tmp_path)
    assert excinfo.value.key == 'file'


def test_polygon_path_resolves_against_the_config_directory(tmp_path):
    (tmp_path / 'wall.csv').write_text('0.3,0.3\n0.7,0.3\n0.5,0.7\n')
    text = DISK_IN_BOX.replace('shape = circle\ncenter = 0.5, 0.5   # middle of the box\nradius = 0.25',
                               'shape = polygon\nfile = wall.csv')
    config = parse_config(text, tmp_path)
    assert config.body('disk').shape.file == tmp_path / 'wall.csv'
    assert isinstance(config.body('disk').shape.build(), Polygon)


@pytest.mark.parametrize('mode', ['complex', 'separate', 'separate-no-boolean'])
def test_mode_is_parsed(tmp_path, mode):
    config = parse_config(DISK_IN_BOX + f'\n[relaxation]\nmode = {mode}\n', tmp_path)
    assert config.mode == mode


def test_unknown_mode_is_rejected(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(DISK_IN_BOX + '\n[relaxation]\nmode = together\n', tmp_path)
    assert excinfo.value.key == 'mode'


def test_output_formats_are_validated(tmp_path):
    config = parse_config(DISK_IN_BOX + '\n[output]\nformats = vtk\ndirectory = runs/disk\n', tmp_path)
    assert config.output_formats == ('vtk',)
    assert config.output_directory == tmp_path / 'runs' / 'disk'
    with pytest.raises(ConfigError, match='Unknown format'):
        parse_config(DISK_IN_BOX + '\n[output]\nformats = ply\n', tmp_path)


def test_relaxation_config_carries_body_pressures(tmp_path):
    text = DISK_IN_BOX.replace('radius = 0.25', 'radius = 0.25\npressure = 2.0')
    config = parse_config(text + '\n[relaxation]\nfluid_pressure = 3.0\n', tmp_path)
    relaxation = config.relaxation_config()
    assert relaxation.pressure_for('disk') == 2.0
    assert relaxation.pressure_for('fluid') == 3.0
    assert relaxation.cfl == config.cfl


def test_render_then_parse_preserves_the_config():
    for config in RunConfigFactory.build_batch(10):
        assert parse_config(render_config(config)) == config


def test_load_config(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text(DISK_IN_BOX)
    config = load_config(path)
    assert config.source == path
    assert config.output_directory == tmp_path.resolve() / 'output'
    with pytest.raises(ConfigError) as excinfo:
        load_config(tmp_path / 'absent.cfg')
    assert 'not found' in str(excinfo.value)
