import logging

import numpy as np
import pytest

from core.exceptions import UnknownBodyError
from core.services.diagnostics import (
    build_report,
    density_summation,
    interface_layer,
    kernel_gradient_sum,
    kernel_gradient_summation,
    kinetic_energy,
)
from core.services.geometry import Subtraction
from core.services.particles import BodyRole, lattice_seed
from core.services.relaxation import Body, EnergyHistory, MultiBodySystem, RelaxationResult
from tests.factories import ParticleSetFactory, lattice, make_field


@pytest.fixture
def disk_in_box(unit_box, centered_disk):
    bounds = ((-0.2, -0.2), (1.2, 1.2))
    outer_field = make_field(Subtraction(unit_box, [centered_disk]), 0.05, bounds=bounds)
    disk_field = make_field(centered_disk, 0.05, bounds=bounds)
    fluid = lattice_seed(outer_field, 0.1, BodyRole.OUTER_FLUID, body_id='fluid')
    solid = lattice_seed(disk_field, 0.1, BodyRole.INNER_SOLID, body_id='disk')
    return MultiBodySystem(Body(fluid, outer_field), [Body(solid, disk_field)])


def test_kinetic_energy_of_resting_particles_is_zero():
    particles = ParticleSetFactory()
    assert kinetic_energy(particles, 0.1) == 0.0


def test_kinetic_energy_example():
    particles = ParticleSetFactory(positions=[[0.0, 0.0]], masses=[2.0])
    particles.accelerations = np.array([[3.0, 0.0]])
    assert kinetic_energy(particles, 1.0) == pytest.approx(9.0)
    assert kinetic_energy(particles, 2.0) == pytest.approx(36.0)


def test_kinetic_energy_over_a_layer():
    particles = ParticleSetFactory(positions=[[0.0, 0.0], [1.0, 0.0]], masses=[1.0, 1.0])
    particles.accelerations = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert kinetic_energy(particles, 1.0, np.array([False, True])) == pytest.approx(2.0)
    assert kinetic_energy(particles, 1.0, np.array([False, False])) == 0.0


def test_interface_layer_flags_particles_near_inner_surfaces(centered_disk):
    inner = make_field(centered_disk, 0.05, bounds=((-0.1, -0.1), (1.1, 1.1)))
    particles = ParticleSetFactory(positions=[[0.74, 0.5], [1.0, 0.5], [2.0, 2.0]], spacing=0.1)
    assert interface_layer(particles, [inner]).tolist() == [True, False, False]
    assert interface_layer(particles, []).tolist() == [False, False, False]


def test_pair_kgs_points_towards_the_neighbor():
    particles = ParticleSetFactory(positions=[[0.0, 0.0], [0.1, 0.0]])
    kgs = kernel_gradient_sum(particles)
    assert kgs[0, 0] > 0
    assert kgs[0, 1] == 0.0
    assert np.array_equal(kgs[0], -kgs[1])


def test_lattice_kgs_vanishes_with_full_support():
    particles = ParticleSetFactory(positions=lattice((-1.0, -1.0), (1.0, 1.0), 0.1))
    kgs = kernel_gradient_sum(particles)
    center = np.argmin(np.linalg.norm(particles.positions - [0.05, 0.05], axis=1))
    assert np.linalg.norm(kgs[center]) < 1e-12 / 0.1
    # Truncated support at the lattice corner
    corner = np.argmin(np.linalg.norm(particles.positions - [-0.95, -0.95], axis=1))
    assert np.linalg.norm(kgs[corner]) > 1.0


def test_kgs_matches_brute_force():
    particles = ParticleSetFactory(positions=np.random.default_rng(4).uniform(0, 1, size=(150, 2)))
    kernel = particles.kernel
    expected = np.zeros_like(particles.positions)
    for i, p in enumerate(particles.positions):
        rvec = np.delete(p - particles.positions, i, axis=0)
        expected[i] = np.sum(kernel.gradient(rvec) * np.delete(particles.volumes, i)[:, None], axis=0)
    assert np.allclose(kernel_gradient_sum(particles), expected, rtol=1e-10, atol=1e-12)


def test_kgs_is_translation_invariant():
    positions = np.random.default_rng(8).uniform(0, 1, size=(200, 2))
    here = ParticleSetFactory(positions=positions)
    there = ParticleSetFactory(positions=positions + [3.7, -1.2])
    assert np.allclose(kernel_gradient_sum(here), kernel_gradient_sum(there), atol=1e-10)


def test_density_on_a_lattice_is_near_reference():
    particles = ParticleSetFactory(positions=lattice((-1.0, -1.0), (1.0, 1.0), 0.1))
    density = density_summation(particles)
    center = np.argmin(np.linalg.norm(particles.positions - [0.05, 0.05], axis=1))
    assert 0.98 <= density[center] <= 1.02


def test_density_of_an_isolated_particle_is_its_self_contribution():
    particles = ParticleSetFactory(positions=[[0.0, 0.0]])
    assert density_summation(particles)[0] == pytest.approx(0.01 * particles.kernel.value(0.0))


def test_contact_solids_complete_the_fluid_support(disk_in_box):
    fluid = disk_in_box.outer.particles
    layer = interface_layer(fluid, disk_in_box.inner_fields)
    assert layer.any()
    alone = kernel_gradient_sum(fluid)
    with_contacts = kernel_gradient_summation(disk_in_box, 'fluid')
    assert np.max(np.linalg.norm(with_contacts[layer], axis=1)) < 1e-10
    assert np.max(np.linalg.norm(alone[layer], axis=1)) > 1.0


def test_solid_kgs_ignores_the_fluid(disk_in_box):
    solid = disk_in_box.inners[0].particles
    assert np.array_equal(kernel_gradient_summation(disk_in_box, 'disk'), kernel_gradient_sum(solid))


def test_unknown_body_raises(disk_in_box):
    with pytest.raises(UnknownBodyError):
        kernel_gradient_summation(disk_in_box, 'missing')


def test_report_summarizes_every_body(disk_in_box, caplog):
    with caplog.at_level(logging.INFO, logger='core.services.diagnostics'):
        report = build_report(disk_in_box)
    assert set(report.bodies) == {'disk', 'fluid'}
    summary = report.summary()
    assert summary['fluid']['interface_particles'] > 0
    assert summary['fluid']['interface_kgs'] < 1e-10
    assert summary['disk']['interface_particles'] == 0
    assert summary['disk']['interface_kgs'] == 0.0
    assert summary['fluid']['density_min'] <= summary['fluid']['density_max']
    assert report['fluid'].kgs_magnitude.shape == (disk_in_box.outer.particles.count,)
    assert report.normalized_energy is None
    assert "Diagnostics 'fluid'" in caplog.text


def test_report_carries_the_energy_history(disk_in_box):
    history = EnergyHistory('fluid')
    history.record(1, 0.1, 4.0, 0.0)
    history.record(2, 0.1, 1.0, 0.0)
    result = RelaxationResult(
        particles={body.body_id: body.particles for body in disk_in_box.bodies},
        histories={'fluid': history},
        converged=False,
        steps=2,
        outer_id='fluid',
    )
    report = build_report(disk_in_box, result)
    assert np.allclose(report.normalized_energy, [1.0, 0.25])
    assert report.converged is False
