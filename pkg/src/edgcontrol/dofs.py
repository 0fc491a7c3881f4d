"""Degree-of-freedom numbering for broken element spaces and skeleton traces.

Face nodes are parametrized by ``t`` in ``[0, 1]`` running from the lower to
the higher global vertex of the face, with node ``l`` at ``t = l / k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .shape import triangle_basis

__all__ = [
    "BrokenDofMap",
    "TraceDofMap",
    "BoundaryTrace",
    "broken_dof_map",
    "build_trace_map",
    "interpolate_boundary",
    "face_node_coordinates",
    "element_face_slots",
]


@dataclass(frozen=True)
class BrokenDofMap:
    """Contiguous per-element blocks for ``W_h`` (scalar) and ``V_h`` (vector)."""

    n_elements: int
    m: int

    @property
    def scalar_offsets(self) -> np.ndarray:
        return np.arange(self.n_elements) * self.m

    @property
    def vector_offsets(self) -> np.ndarray:
        return np.arange(self.n_elements) * 2 * self.m

    @property
    def n_scalar(self) -> int:
        return self.n_elements * self.m

    @property
    def n_vector(self) -> int:
        return 2 * self.n_elements * self.m


def broken_dof_map(mesh: Mesh, k: int) -> BrokenDofMap:
    return BrokenDofMap(mesh.n_elements, triangle_basis(k).size)


@dataclass(frozen=True, eq=False)
class TraceDofMap:
    """Continuous Lagrange numbering on the interior skeleton.

    ``face_dofs[f, l]`` is the global index of node ``l`` of face ``f``, or
    -1 when ``f`` is a boundary face.
    """

    k: int
    face_dofs: np.ndarray
    coordinates: np.ndarray

    @property
    def size(self) -> int:
        return len(self.coordinates)


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """Nodal values of the boundary interpolant on every boundary face.

    ``values[f, l]`` is the interpolant at node ``l`` of face ``f``; rows of
    interior faces are zero.
    """

    k: int
    values: np.ndarray
    boundary_mask: np.ndarray


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError(f"trace degree must be >= 1, got {k!r}")
    return int(k)


def face_node_coordinates(mesh: Mesh, k: int) -> np.ndarray:
    """Physical coordinates of all face nodes, shape (n_faces, k + 1, 2)."""
    t = np.arange(k + 1) / k
    a = mesh.vertices[mesh.faces[:, 0]]
    b = mesh.vertices[mesh.faces[:, 1]]
    return a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]


def build_trace_map(mesh: Mesh, k: int) -> TraceDofMap:
    """Number the interior-skeleton nodes, sharing nodes at common vertices.

    Numbering is lexicographic in the node coordinate ``(x, y)``.
    """
    k = _check_k(k)
    coords = face_node_coordinates(mesh, k)
    keys = {}
    for f in mesh.interior_faces:
        va, vb = mesh.faces[f]
        for l in range(k + 1):
            if l == 0:
                key = ("v", int(va))
            elif l == k:
                key = ("v", int(vb))
            else:
                key = ("e", int(f), l)
            keys.setdefault(key, coords[f, l])

    order = sorted(keys, key=lambda key: (keys[key][0], keys[key][1]))
    index = {key: i for i, key in enumerate(order)}

    face_dofs = np.full((mesh.n_faces, k + 1), -1, dtype=np.int64)
    for f in mesh.interior_faces:
        va, vb = mesh.faces[f]
        face_dofs[f, 0] = index[("v", int(va))]
        face_dofs[f, k] = index[("v", int(vb))]
        for l in range(1, k):
            face_dofs[f, l] = index[("e", int(f), l)]

    coordinates = np.array([keys[key] for key in order]).reshape(-1, 2)
    return TraceDofMap(k, face_dofs, coordinates)


def interpolate_boundary(g, mesh: Mesh, k: int) -> BoundaryTrace:
    """Nodal Lagrange interpolant of ``g`` on the boundary faces.

    ``g`` is called with an array of points of shape (n, 2).
    """
    k = _check_k(k)
    coords = face_node_coordinates(mesh, k)
    values = np.zeros((mesh.n_faces, k + 1))
    bf = mesh.boundary_faces
    if len(bf):
        pts = coords[bf].reshape(-1, 2)
        values[bf] = np.asarray(g(pts), dtype=float).reshape(len(bf), k + 1)
    return BoundaryTrace(k, values, mesh.boundary_mask.copy())


def element_face_slots(mesh: Mesh, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Map element-local face slots to global face node indices.

    Slot ``(j, l)`` of an element is the node at local parameter ``l / k``
    along local face ``j``, walking counterclockwise.  Returns the face index
    ``(n_elements, 3)`` and the face-node index ``(n_elements, 3, k + 1)``.
    """
    faces = mesh.element_faces
    tri = mesh.triangles
    start = tri
    aligned = mesh.faces[faces, 0] == start
    l = np.arange(k + 1)
    node = np.where(aligned[:, :, None], l, k - l)
    return faces, node
