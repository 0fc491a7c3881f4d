import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgcontrol.dofs import (
    broken_dof_map,
    build_trace_map,
    element_face_slots,
    face_node_coordinates,
    interpolate_boundary,
)
from edgcontrol.mesh import build_structured_mesh
from edgcontrol.shape import segment_basis, segment_quadrature


def brute_force_trace_nodes(mesh, k):
    """Distinct node coordinates on interior faces, deduplicated by rounding."""
    nodes = set()
    for f in mesh.interior_faces:
        a, b = mesh.vertices[mesh.faces[f]]
        for l in range(k + 1):
            x = a + (b - a) * l / k
            nodes.add((round(x[0], 12), round(x[1], 12)))
    return nodes


def test_single_cell_trace_count():
    assert build_trace_map(build_structured_mesh(1), 1).size == 2


def test_n2_trace_count_by_enumeration():
    m = build_structured_mesh(2)
    assert len(m.interior_faces) == 8
    nodes = brute_force_trace_nodes(m, 1)
    # one interior vertex plus the six boundary vertices reached by interior
    # edges; with every cell cut the same way the corners (1,0), (0,1) are not
    assert len(nodes) == 7
    assert (1.0, 0.0) not in nodes and (0.0, 1.0) not in nodes
    assert build_trace_map(m, 1).size == len(nodes)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=4))
def test_trace_size_matches_node_dedup(n, k):
    m = build_structured_mesh(n)
    tr = build_trace_map(m, k)
    assert tr.size == len(brute_force_trace_nodes(m, k))
    # continuity shrinks the count below the discontinuous one once faces meet
    assert tr.size <= (k + 1) * len(m.interior_faces)
    if n >= 2:
        assert tr.size < (k + 1) * len(m.interior_faces)
    # every index used, coordinates consistent with face nodes
    used = tr.face_dofs[m.interior_faces]
    assert set(used.ravel()) == set(range(tr.size))
    np.testing.assert_allclose(tr.coordinates[used], face_node_coordinates(m, k)[m.interior_faces])
    assert np.all(tr.face_dofs[m.boundary_faces] == -1)


def test_shared_vertex_gets_one_index():
    m = build_structured_mesh(3)
    tr = build_trace_map(m, 2)
    centre = np.array([1 / 3, 1 / 3])
    hits = set()
    for f in m.interior_faces:
        for l in (0, 2):
            if np.allclose(face_node_coordinates(m, 2)[f, l], centre):
                hits.add(int(tr.face_dofs[f, l]))
    assert len(hits) == 1


def test_numbering_is_lexicographic_and_deterministic():
    m = build_structured_mesh(4)
    a, b = build_trace_map(m, 3), build_trace_map(m, 3)
    np.testing.assert_array_equal(a.face_dofs, b.face_dofs)
    c = a.coordinates
    keys = list(zip(c[:, 0], c[:, 1]))
    assert keys == sorted(keys)


def test_broken_dof_map():
    dm = broken_dof_map(build_structured_mesh(2), 2)
    assert dm.m == 6 and dm.n_scalar == 48 and dm.n_vector == 96
    np.testing.assert_array_equal(dm.scalar_offsets[:3], [0, 6, 12])


def test_element_face_slots_hit_face_nodes():
    m = build_structured_mesh(3)
    k = 3
    faces, node = element_face_slots(m, k)
    coords = face_node_coordinates(m, k)
    for e in range(m.n_elements):
        for j in range(3):
            a, b = m.face_vertices(e, j)
            for l in range(k + 1):
                expect = a + (b - a) * l / k
                np.testing.assert_allclose(coords[faces[e, j], node[e, j, l]], expect,
                                           atol=1e-15)


def test_interpolate_zero_and_linear():
    m = build_structured_mesh(4)
    z = interpolate_boundary(lambda x: np.zeros(len(x)), m, 2)
    assert np.all(z.values == 0)
    lin = interpolate_boundary(lambda x: x[:, 0], m, 1)
    coords = face_node_coordinates(m, 1)
    bf = m.boundary_faces
    np.testing.assert_array_equal(lin.values[bf], coords[bf, :, 0])
    assert np.all(lin.values[m.interior_faces] == 0)


def bottom_face_error(n, k):
    """L2 error of the interpolant of sin(pi x) along y = 0."""
    m = build_structured_mesh(n)
    g = lambda x: np.sin(np.pi * x[:, 0])  # noqa: E731
    tr = interpolate_boundary(g, m, k)
    coords = face_node_coordinates(m, k)
    quad = segment_quadrature(2 * k + 8)
    psi = segment_basis(k).values(quad.points)
    err2 = 0.0
    for f in m.boundary_faces:
        a, b = coords[f, 0], coords[f, -1]
        if not (a[1] == 0 and b[1] == 0):
            continue
        # nodal residual vanishes
        assert np.max(np.abs(tr.values[f] - g(coords[f]))) == 0.0
        x = a[0] + quad.points * (b[0] - a[0])
        err2 += abs(b[0] - a[0]) * np.sum(quad.weights * (psi @ tr.values[f] - np.sin(np.pi * x)) ** 2)
    return np.sqrt(err2)


def test_boundary_interpolation_rate():
    errs = [bottom_face_error(n, 1) for n in (8, 16, 32)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    np.testing.assert_allclose(rates, 2.0, atol=0.05)


def test_trace_rejects_bad_degree():
    with pytest.raises(ValueError):
        build_trace_map(build_structured_mesh(2), 0)
