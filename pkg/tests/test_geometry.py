import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from abcrack.geometry import (DomainSpec, GeometryError, SizeField, build_domain, duplicate_crack,
                              generate_mesh, insert_crack, nested_disk_mesh, normalize_angle, read_mesh,
                              restrict_to_radius, write_mesh)


@pytest.fixture(scope="module")
def disk():
    return build_domain(DomainSpec.disk(1.0))


@pytest.fixture(scope="module")
def disk_mesh(disk):
    return generate_mesh(disk, insert_crack(disk, 0.3, 0.1), h=0.08)


def test_domain_spec_round_trip():
    for spec in (DomainSpec.disk(2.0), DomainSpec.rectangle(1.0, 0.6),
                 DomainSpec.polygon([(-1, -1), (2, -1), (0, 1)])):
        assert DomainSpec.from_dict(spec.to_dict()) == spec


def test_domain_spec_rejects_unknown_or_missing_keys():
    with pytest.raises(GeometryError):
        DomainSpec.from_dict({"kind": "disk", "radius": 1.0, "colour": "red"})
    with pytest.raises(GeometryError):
        DomainSpec.from_dict({"kind": "rectangle", "w1": 1.0})
    with pytest.raises(GeometryError):
        DomainSpec.from_dict({"kind": "ellipse"})


def test_build_domain_validation():
    with pytest.raises(GeometryError, match="counterclockwise"):
        build_domain(DomainSpec.polygon([(-1, -1), (-1, 1), (1, 1), (1, -1)]))
    with pytest.raises(GeometryError, match="self-intersecting"):
        build_domain(DomainSpec.polygon([(-1, -1), (1, 1), (1, -1), (-1, 1)]))
    with pytest.raises(GeometryError, match="origin"):
        build_domain(DomainSpec.polygon([(1, 1), (2, 1), (2, 2), (1, 2)]))
    with pytest.raises(GeometryError):
        # a generic triangle is not symmetric about x1
        build_domain(DomainSpec.polygon([(-1, -1), (2, -1), (0, 1)], symmetry=("x1-axis",)))


def test_domain_properties(disk):
    rect = build_domain(DomainSpec.rectangle(1.0, 0.6))
    assert rect.area == pytest.approx(2.4)
    assert rect.diam == pytest.approx(2 * math.hypot(1.0, 0.6))
    assert rect.has_symmetry("x1-axis") and not rect.has_symmetry("rotation:4")
    assert disk.has_symmetry("rotation:7")
    assert_array_equal(rect.contains([[0, 0], [0.99, 0.59], [1.2, 0]]), [True, True, False])
    assert not rect.contains([0.95, 0.0], margin=0.1)[0]


@given(st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_normalize_angle_range(a):
    b = normalize_angle(a)
    assert -math.pi < b <= math.pi
    assert math.isclose(math.cos(a), math.cos(b), abs_tol=1e-9)
    assert math.isclose(math.sin(a), math.sin(b), abs_tol=1e-9)


@settings(max_examples=25)
@given(st.floats(min_value=-math.pi, max_value=math.pi), st.floats(min_value=0.0, max_value=0.9))
def test_disk_crack_geometry(alpha, t):
    disk = build_domain(DomainSpec.disk(1.0))
    c = insert_crack(disk, alpha, t)
    assert_allclose(c.exit_point, -c.direction, atol=1e-14)
    assert_allclose(c.pole, t * c.direction, atol=1e-14)
    assert c.normal @ c.direction == pytest.approx(0.0, abs=1e-15)
    # normal is the direction rotated by +90 degrees
    assert c.direction[0] * c.normal[1] - c.direction[1] * c.normal[0] == pytest.approx(1.0)


def test_crack_rejections(disk):
    square = build_domain(DomainSpec.rectangle(0.5, 0.5))
    with pytest.raises(GeometryError, match="corner"):
        insert_crack(square, math.pi / 4, 0.1)
    with pytest.raises(GeometryError, match="outside"):
        insert_crack(disk, 0.0, 1.0)
    with pytest.raises(GeometryError, match="outside"):
        insert_crack(square, 0.0, 0.6)
    with pytest.raises(GeometryError):
        insert_crack(disk, 0.0, -0.1)


def test_size_field_grades_toward_centres():
    f = SizeField(h=0.1, mu=2.0, length=1.0, centers=((0.0, 0.0),))
    d = np.array([[1e-4, 0], [0.01, 0], [0.1, 0], [0.5, 0]])
    s = f(d)
    assert np.all(np.diff(s) >= 0) and s[-1] > s[1]
    assert s[-1] <= 0.1 + 1e-15
    # plateau h (h/L)^(mu-1) inside distance (h/L)^mu
    assert_allclose(s[:2], 0.1 * 0.1, rtol=1e-12)


def test_mesh_structure(disk_mesh):
    m = disk_mesh
    assert m.euler_characteristic() == 1
    assert m.min_angle() >= 20.0
    assert np.all(m.areas() > 0)
    # coincident crack copies
    assert_allclose(m.vertices[m.crack_pairs[:, 0]], m.vertices[m.crack_pairs[:, 1]], atol=0)
    assert_allclose(m.vertices[m.tip_node], m.crack.pole, atol=1e-12)
    assert m.tip_node not in set(m.crack_pairs.ravel().tolist())
    pos = m.vertices[m.s_a_pairs[:, 0]] @ m.crack.direction
    assert np.all((pos >= -1e-14) & (pos < m.crack.t_pole))
    assert_allclose(np.min(pos), 0.0, atol=1e-14)
    r = np.hypot(*m.vertices[m.dirichlet_nodes].T)
    assert_allclose(r, 1.0, atol=1e-12)


def test_crack_sides_are_separated(disk_mesh):
    m = disk_mesh
    plus, minus = set(m.crack_pairs[:, 0].tolist()), set(m.crack_pairs[:, 1].tolist())
    cen = m.vertices[m.triangles].mean(axis=1)
    side = cen @ m.crack.normal
    for tri, s in zip(m.triangles, side):
        if plus & set(tri.tolist()):
            assert s > 0
        if minus & set(tri.tolist()):
            assert s < 0


def test_mesh_is_deterministic(disk):
    c = insert_crack(disk, 1.0, 0.2)
    assert generate_mesh(disk, c, 0.1).identical_to(generate_mesh(disk, c, 0.1))


def test_symmetric_mesh_is_mirror_image():
    rect = build_domain(DomainSpec.rectangle(1.0, 0.6))
    m = generate_mesh(rect, insert_crack(rect, 0.0, 0.2), 0.1, symmetric=True)
    pts = {(round(x, 12), round(y, 12)) for x, y in m.vertices}
    assert pts == {(x, round(-y, 12) + 0.0) for x, y in pts}
    assert m.euler_characteristic() == 1


def test_crack_free_mesh(disk):
    m = generate_mesh(disk, None, 0.1)
    assert m.tip_node == -1 and len(m.crack_pairs) == 0
    assert m.areas().sum() == pytest.approx(math.pi, rel=2e-2)


def test_mesh_round_trip(tmp_path, disk_mesh):
    path = tmp_path / "m.abmesh"
    write_mesh(disk_mesh, path)
    back = read_mesh(path, crack=disk_mesh.crack)
    assert back.identical_to(disk_mesh)
    assert_array_equal(back.s_a_pairs, disk_mesh.s_a_pairs)
    path.write_text("NOTAMESH\n")
    with pytest.raises(GeometryError):
        read_mesh(path)


def test_duplicate_crack_on_two_triangles():
    v = np.array([[-1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    t = np.array([[0, 1, 2], [0, 3, 1]])
    verts, tris, pairs = duplicate_crack(v, t, np.array([0]), np.array([0.0, 1.0]))
    assert len(verts) == 5
    assert_array_equal(pairs, [[0, 4]])
    assert 4 in tris[1] and 0 not in tris[1]
    assert 0 in tris[0]


def test_nested_disks_restrict_cleanly():
    size = SizeField(h=0.25, mu=2.0, length=1.0, centers=((0.0, 0.0), (1.0, 0.0)), growth_from=2.0)
    m = nested_disk_mesh((2.0, 4.0), 1.0, size)
    inner = restrict_to_radius(m, 2.0)
    assert inner.euler_characteristic() == 1
    assert_allclose(np.hypot(*inner.vertices[inner.dirichlet_nodes].T), 2.0, rtol=1e-12)
    assert np.hypot(*inner.vertices.T).max() <= 2.0 + 1e-12
    assert len(inner.s_a_pairs) == len(m.s_a_pairs)
    assert inner.areas().sum() == pytest.approx(4 * math.pi, rel=2e-2)
    with pytest.raises(GeometryError):
        restrict_to_radius(m, 3.0)
