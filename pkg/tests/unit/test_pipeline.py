from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from scipy.spatial import KDTree

from core.exceptions import ParticleFileError, UnknownBodyError
from core.services.level_set import interface_sign_mismatches
from core.services.pipeline import PackingPipeline, run_diagnose, run_relax, run_seed
from core.services.run_config import load_config, parse_config

DATA = Path(__file__).resolve().parent.parent / 'data'


def _config(tmp_path, dx=0.1, mode='complex', bodies='', domain='shape = box\nmin = 0, 0\nmax = 1, 1',
            relaxation=''):
    text = (
        f"[domain]\n{domain}\n\n{bodies}\n"
        f"[discretization]\ndx = {dx!r}\n\n"
        f"[relaxation]\nmode = {mode}\n{relaxation}\n\n"
        "[output]\nformats = csv\n"
    )
    return parse_config(text, tmp_path)


DISK = '[body.disk]\nshape = circle\ncenter = 0.5, 0.5\nradius = 0.25\n'


def test_complex_fields_share_one_grid(tmp_path):
    fields = PackingPipeline(_config(tmp_path, bodies=DISK)).build_fields()
    assert set(fields) == {'disk', 'fluid'}
    disk, fluid = fields['disk'], fields['fluid']
    assert disk.field.same_grid(fluid.field)
    assert disk.field.has_band
    assert not fluid.field.has_band
    assert fluid.boundary_field is not None and fluid.boundary_field.has_band
    assert len(interface_sign_mismatches(disk.field, fluid.field, 0.1)) == 0


def test_separate_fields_carry_their_own_band(tmp_path):
    fields = PackingPipeline(_config(tmp_path, mode='separate', bodies=DISK)).build_fields()
    assert fields['fluid'].boundary_field is None
    assert fields['fluid'].field.has_band
    assert fields['disk'].field.same_grid(fields['fluid'].field)


def test_fields_without_boolean_subtraction_use_separate_grids(tmp_path):
    fields = PackingPipeline(_config(tmp_path, mode='separate-no-boolean', bodies=DISK)).build_fields()
    assert not fields['disk'].field.same_grid(fields['fluid'].field)
    assert not np.array_equal(fields['disk'].field.origin, fields['fluid'].field.origin)


def test_seed_fills_the_domain_once(tmp_path):
    config = _config(tmp_path, bodies=DISK)
    outcome = run_seed(config)
    counts = {body.body_id: body.particles.count for body in outcome.system.bodies}
    assert counts['disk'] > 0
    assert counts['disk'] + counts['fluid'] == 100
    assert [path.name for path in outcome.paths] == ['particles_seed.csv']
    frame = pd.read_csv(outcome.paths[0])
    assert list(frame.columns) == ['body_id', 'x', 'y', 'volume']
    assert outcome.converged


def test_relax_writes_particles_and_energy_history(tmp_path):
    config = _config(tmp_path, bodies=DISK, relaxation='max_steps = 5')
    outcome = run_relax(config)
    names = sorted(path.name for path in outcome.paths)
    assert names == ['energy_history.csv', 'particles.csv']
    history = pd.read_csv(config.output_directory / 'energy_history.csv')
    assert len(history) == outcome.result.steps
    assert history['E_normalized'].iloc[0] == pytest.approx(1.0)
    assert outcome.report is not None
    assert 'kgs_mag' in pd.read_csv(config.output_directory / 'particles.csv').columns


def test_modes_agree_without_inner_bodies(tmp_path):
    complex_ = _config(tmp_path / 'complex', relaxation='max_steps = 20')
    separate = _config(tmp_path / 'separate', mode='separate', relaxation='max_steps = 20')
    run_relax(complex_)
    run_relax(separate)
    first = (complex_.output_directory / 'particles.csv').read_bytes()
    second = (separate.output_directory / 'particles.csv').read_bytes()
    assert first == second


def test_runs_are_byte_identical(tmp_path):
    config = _config(tmp_path, bodies=DISK, relaxation='max_steps = 10')
    run_relax(config)
    first = (config.output_directory / 'particles.csv').read_bytes()
    second_config = replace(config, output_directory=tmp_path / 'again')
    run_relax(second_config)
    assert (second_config.output_directory / 'particles.csv').read_bytes() == first


def test_diagnose_reads_back_relaxed_particles(tmp_path):
    config = _config(tmp_path, bodies=DISK, relaxation='max_steps = 5')
    relaxed = run_relax(config)
    outcome = run_diagnose(config, config.output_directory / 'particles.csv')
    assert [path.name for path in outcome.paths] == ['particles_diagnosed.csv']
    for body in relaxed.system.bodies:
        assert np.array_equal(outcome.system.body(body.body_id).particles.positions, body.particles.positions)
    diagnosed = pd.read_csv(outcome.paths[0])
    assert diagnosed['interface_layer'].sum() == relaxed.report['fluid'].interface_layer.sum()


def test_diagnose_rejects_foreign_particle_files(tmp_path):
    config = _config(tmp_path, bodies=DISK)
    stray = tmp_path / 'stray.csv'
    stray.write_text('body_id,x,y,volume\nfluid,0.5,0.5,0.01\nwing,0.2,0.2,0.01\n')
    with pytest.raises(UnknownBodyError):
        run_diagnose(config, stray)
    stray.write_text('body_id,x,y,volume\ndisk,0.5,0.5,0.01\n')
    with pytest.raises(ParticleFileError, match="no 'fluid' body"):
        run_diagnose(config, stray)

def _shipped(name, tmp_path, **changes):
    config = replace(load_config(DATA / name), **changes)
    return replace(config, output_directory=tmp_path / config.mode)


@pytest.mark.parametrize('mode, gaps', [('separate-no-boolean', True), ('complex', False)])
def test_slot_below_grid_spacing_opens_a_gap_without_subtraction(tmp_path, mode, gaps):
    config = _shipped('slotted_block.cfg', tmp_path, mode=mode)
    fields = PackingPipeline(config).build_fields()
    band = 2.0 * config.level_set_spacing
    mismatches = interface_sign_mismatches(fields['block'].field, fields['fluid'].field, band)
    assert (len(mismatches) > 0) == gaps



def _interface_kgs(tmp_path, mode, dx, bodies, domain='shape = box\nmin = 0, 0\nmax = 1, 1'):
    config = _config(tmp_path / mode, dx=dx, mode=mode, bodies=bodies, domain=domain,
                     relaxation='max_steps = 5000\nconvergence_threshold = 1e-4')
    outcome = run_relax(config)
    return outcome, outcome.report['fluid'].interface_kgs


@pytest.mark.slow
def test_single_disk_converges(tmp_path):
    dx = 1.0 / 25.0
    config = _config(tmp_path, dx=dx, mode='separate',
                     domain='shape = circle\ncenter = 0, 0\nradius = 1.0',
                     relaxation='max_steps = 5000\nconvergence_threshold = 1e-3')
    outcome = run_relax(config)
    assert outcome.converged
    fluid = outcome.system.outer
    phi = fluid.field.interpolate(fluid.particles.positions)
    assert np.all(phi <= -0.5 * dx + 0.1 * dx)
    density = outcome.report['fluid'].density
    interior = phi < -3.0 * dx
    assert np.ptp(density[interior]) / np.mean(density[interior]) <= 0.02


@pytest.mark.slow
def test_complex_relaxation_beats_separate_at_the_interface(tmp_path):
    complex_, complex_kgs = _interface_kgs(tmp_path, 'complex', 0.02, DISK)
    separate, separate_kgs = _interface_kgs(tmp_path, 'separate', 0.02, DISK)
    assert complex_kgs <= 0.5 * separate_kgs
    assert complex_.result.history.terminal <= 0.1 * separate.result.history.terminal


@pytest.mark.slow
def test_mirrored_disks_relax_symmetrically(tmp_path):
    dx = 0.04
    bodies = (
        '[body.left]\nshape = circle\ncenter = 0.3, 0.5\nradius = 0.12\n\n'
        '[body.right]\nshape = circle\ncenter = 0.7, 0.5\nradius = 0.12\n'
    )
    outcome, _ = _interface_kgs(tmp_path, 'complex', dx, bodies)
    fluid = outcome.system.outer.particles.positions
    mirrored = fluid * [-1.0, 1.0] + [1.0, 0.0]
    distance, _ = KDTree(fluid).query(mirrored)
    assert np.max(distance) <= 0.05 * dx
    left = outcome.system.body('left').particles.positions
    right = outcome.system.body('right').particles.positions
    distance, _ = KDTree(right).query(left * [-1.0, 1.0] + [1.0, 0.0])
    assert np.max(distance) <= 0.05 * dx


@pytest.mark.slow
def test_sphere_in_cube_smoke(tmp_path):
    sphere = '[body.sphere]\nshape = sphere\ncenter = 0.5, 0.5, 0.5\nradius = 0.15\n'
    cube = 'shape = box\nmin = 0, 0, 0\nmax = 1, 1, 1'
    _, complex_kgs = _interface_kgs(tmp_path, 'complex', 0.02, sphere, domain=cube)
    _, separate_kgs = _interface_kgs(tmp_path, 'separate', 0.02, sphere, domain=cube)
    assert complex_kgs <= 0.2
    assert complex_kgs <= 0.5 * separate_kgs


def _assert_inner_bodies_bounded(outcome, dx):
    for body in outcome.system.inners:
        phi = body.field.interpolate(body.particles.positions)
        assert np.all(phi <= -0.5 * dx + 0.1 * dx), body.body_id


@pytest.mark.slow
def test_zigzag_wall_relaxes_conformally(tmp_path):
    config = _shipped('zigzag_wall.cfg', tmp_path)
    complex_ = run_relax(config)
    separate = run_relax(_shipped('zigzag_wall.cfg', tmp_path, mode='separate'))
    _assert_inner_bodies_bounded(complex_, config.dx)
    assert complex_.report['fluid'].interface_kgs <= separate.report['fluid'].interface_kgs


@pytest.mark.slow
def test_two_element_airfoil_relaxes(tmp_path):
    config = _shipped('two_element_airfoil.cfg', tmp_path)
    outcome = run_relax(config)
    assert {body.body_id for body in outcome.system.inners} == {'main', 'flap'}
    _assert_inner_bodies_bounded(outcome, config.dx)
    assert outcome.result.history.terminal < 1.0
    assert np.isfinite(outcome.report['fluid'].interface_kgs)


@pytest.mark.slow
def test_triangle_mesh_block_in_cube(tmp_path):
    config = _shipped('block_in_cube.cfg', tmp_path)
    outcome = run_relax(config)
    _assert_inner_bodies_bounded(outcome, config.dx)
    assert outcome.report['fluid'].interface_kgs <= 0.2
