import math

import numpy as np
import pytest
from scipy.spatial import KDTree

from core.exceptions import GeometryValidationError
from core.services.geometry import (
    Ball,
    Box,
    Circle,
    HalfSpace,
    Polygon,
    Subtraction,
    TriangleMesh,
    boundary_edges,
    mesh_volume,
    signed_distance,
)
from tests.factories import CUBE_TRIANGLES, CUBE_VERTICES

ZIGZAG = [
    (0.1, 0.2), (0.9, 0.2), (0.9, 0.5), (0.8, 0.6), (0.7, 0.4), (0.6, 0.6),
    (0.5, 0.4), (0.4, 0.6), (0.3, 0.4), (0.2, 0.6), (0.1, 0.5),
]


def test_circle_signed_distance():
    circle = Circle((0.0, 0.0), 1.0)
    assert signed_distance(circle, (2.0, 0.0)) == 1.0
    assert signed_distance(circle, (0.0, 0.0)) == -1.0
    assert circle.contains((0.5, 0.5))
    assert not circle.contains((1.5, 0.0))


def test_ball_needs_positive_radius():
    with pytest.raises(GeometryValidationError):
        Ball((0.0, 0.0), 0.0)
    with pytest.raises(GeometryValidationError):
        Ball((0.0, 0.0, 0.0), -1.0)


def test_box_signed_distance():
    box = Box((0.0, 0.0), (2.0, 1.0))
    assert box.signed_distance((1.0, 0.5)) == pytest.approx(-0.5)
    assert box.signed_distance((3.0, 0.5)) == pytest.approx(1.0)
    assert box.signed_distance((3.0, 2.0)) == pytest.approx(math.sqrt(2.0))


def test_box_needs_ordered_corners():
    with pytest.raises(GeometryValidationError):
        Box((0.0, 0.0), (1.0, 0.0))


def test_half_space_is_unbounded():
    plane = HalfSpace((0.0, 0.0), (0.0, 2.0))
    assert plane.signed_distance((5.0, 2.0)) == pytest.approx(2.0)
    assert plane.signed_distance((5.0, -0.5)) == pytest.approx(-0.5)
    assert plane.bounding_box() is None


def test_subtraction_values(unit_box, centered_disk):
    fluid = Subtraction(unit_box, [centered_disk])
    assert fluid.signed_distance((0.9, 0.5)) == pytest.approx(-0.1)
    assert fluid.signed_distance((0.5, 0.5)) == pytest.approx(0.2)
    assert fluid.contains((0.05, 0.05))
    assert not fluid.contains((0.5, 0.5))


def test_subtraction_without_inner_shapes_is_the_outer_shape(unit_box):
    points = np.random.default_rng(0).uniform(-0.5, 1.5, size=(100, 2))
    assert np.array_equal(Subtraction(unit_box, []).signed_distance(points), unit_box.signed_distance(points))


def test_subtraction_rejects_inner_touching_outer(unit_box):
    with pytest.raises(GeometryValidationError, match='not strictly inside'):
        Subtraction(unit_box, [Ball((0.1, 0.5), 0.2)])


def test_subtraction_rejects_overlapping_inner_shapes(unit_box):
    with pytest.raises(GeometryValidationError, match='overlap'):
        Subtraction(unit_box, [Ball((0.4, 0.5), 0.2), Ball((0.6, 0.5), 0.2)])


def test_polygon_square():
    square = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert square.area == pytest.approx(1.0)
    assert square.signed_distance((0.5, 0.5)) == pytest.approx(-0.5)
    assert square.signed_distance((2.0, 0.5)) == pytest.approx(1.0)
    assert square.signed_distance((1.0, 0.5)) == pytest.approx(0.0)


def test_polygon_rejects_bow_tie():
    with pytest.raises(GeometryValidationError, match='self-intersecting'):
        Polygon([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_polygon_rejects_repeated_vertices():
    with pytest.raises(GeometryValidationError):
        Polygon([(0, 0), (1, 0), (1, 0), (0, 1)])


def _sign_mismatches(shape, points, spacing):
    phi = shape.signed_distance(points)
    inside = shape.contains(points)
    checked = np.abs(phi) >= spacing
    return int(np.sum(checked & ((phi < 0) != inside)))


def test_sign_agrees_with_brute_force_for_disk_in_box(unit_box, centered_disk):
    points = np.random.default_rng(5).uniform(-0.1, 1.1, size=(10_000, 2))
    fluid = Subtraction(unit_box, [centered_disk])
    assert _sign_mismatches(fluid, points, 0.02) == 0
    assert _sign_mismatches(centered_disk, points, 0.02) == 0


def test_sign_agrees_with_brute_force_for_zigzag_wall(unit_box):
    points = np.random.default_rng(7).uniform(-0.1, 1.1, size=(10_000, 2))
    wall = Polygon(ZIGZAG)
    fluid = Subtraction(unit_box, [wall])
    assert _sign_mismatches(wall, points, 0.02) == 0
    assert _sign_mismatches(fluid, points, 0.02) == 0


def test_cube_mesh_signed_distance():
    cube = TriangleMesh(CUBE_VERTICES, CUBE_TRIANGLES)
    assert cube.volume == pytest.approx(1.0)
    assert cube.signed_distance((0.5, 0.5, 0.5)) == pytest.approx(-0.5)
    assert cube.signed_distance((2.0, 0.5, 0.5)) == pytest.approx(1.0)
    assert cube.signed_distance((1.5, 1.5, 1.5)) == pytest.approx(math.sqrt(0.75))
    assert cube.contains((0.3, 0.6, 0.2))
    assert not cube.contains((1.3, 0.6, 0.2))


def test_cube_mesh_matches_box():
    cube = TriangleMesh(CUBE_VERTICES, CUBE_TRIANGLES)
    box = Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    points = np.random.default_rng(2).uniform(-0.5, 1.5, size=(500, 3))
    assert np.allclose(cube.signed_distance(points), box.signed_distance(points), atol=1e-12)


def test_inward_mesh_is_flipped():
    cube = TriangleMesh(CUBE_VERTICES, CUBE_TRIANGLES[:, ::-1])
    assert mesh_volume(CUBE_VERTICES, CUBE_TRIANGLES[:, ::-1]) == pytest.approx(-1.0)
    assert cube.volume == pytest.approx(1.0)
    assert cube.signed_distance((0.5, 0.5, 0.5)) == pytest.approx(-0.5)


def test_open_mesh_is_rejected():
    with pytest.raises(GeometryValidationError, match='not watertight'):
        TriangleMesh(CUBE_VERTICES, CUBE_TRIANGLES[:-1])


def test_points_must_match_dimension(centered_disk):
    with pytest.raises(GeometryValidationError):
        centered_disk.signed_distance((0.5, 0.5, 0.5))


def test_boundary_edges_of_open_and_closed_meshes():
    assert len(boundary_edges(CUBE_TRIANGLES)) == 0
    open_edges = boundary_edges(CUBE_TRIANGLES[1:])
    assert len(open_edges) == 3
    assert {tuple(edge) for edge in open_edges} == {
        tuple(sorted(pair)) for pair in zip(CUBE_TRIANGLES[0], np.roll(CUBE_TRIANGLES[0], -1))
    }


def test_subtraction_rejects_crossing_boxes(unit_box):
    horizontal = Box((0.2, 0.45), (0.8, 0.55))
    vertical = Box((0.45, 0.2), (0.55, 0.8))
    with pytest.raises(GeometryValidationError, match='overlap'):
        Subtraction(unit_box, [horizontal, vertical])


def test_subtraction_rejects_inner_spanning_a_notch():
    notched = Polygon([(0, 0), (1, 0), (1, 1), (0.6, 1), (0.6, 0.5), (0.4, 0.5), (0.4, 1), (0, 1)])
    bridge = Box((0.3, 0.55), (0.7, 0.6))
    assert np.all(notched.signed_distance(bridge.boundary_samples(1.0)) < 0)
    with pytest.raises(GeometryValidationError, match='not strictly inside'):
        Subtraction(notched, [bridge])


def test_subtraction_rejects_domain_hole_inside_inner_shape():
    ring = Subtraction(Box((0.0, 0.0), (1.0, 1.0)), [Ball((0.5, 0.5), 0.05)])
    with pytest.raises(GeometryValidationError, match='not strictly inside'):
        Subtraction(ring, [Ball((0.5, 0.5), 0.2)])


def test_boundary_samples_respect_the_spacing(unit_box):
    for shape in (unit_box, Polygon(ZIGZAG), Ball((0.5, 0.5), 0.2)):
        samples = shape.boundary_samples(0.01)
        assert np.allclose(shape.signed_distance(samples), 0.0, atol=1e-12)
        gaps, _ = KDTree(samples).query(samples, k=2)
        assert np.max(gaps[:, 1]) <= 0.01 + 1e-12
    cube = TriangleMesh(CUBE_VERTICES, CUBE_TRIANGLES)
    samples = cube.boundary_samples(0.1)
    assert np.allclose(cube.signed_distance(samples), 0.0, atol=1e-12)
    assert len(samples) >= 6 * 11 * 11
