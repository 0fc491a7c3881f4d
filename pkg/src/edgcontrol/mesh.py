"""Structured triangulations of the unit square.

Every cell ``[i/n, (i+1)/n] x [j/n, (j+1)/n]`` is split along the diagonal
from its lower-left to its upper-right corner, giving two counterclockwise
right triangles.  Local face ``j`` of a triangle joins local vertices ``j``
and ``j + 1`` (mod 3).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Mesh", "build_structured_mesh", "outward_normal", "dump_mesh"]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangle mesh with full face connectivity.

    Attributes
    ----------
    n : int
        Subdivisions per side.
    vertices : ndarray, shape (n_vertices, 2)
    triangles : ndarray, shape (n_elements, 3)
        Counterclockwise vertex indices.
    faces : ndarray, shape (n_faces, 2)
        Vertex pairs, lower index first.
    element_faces : ndarray, shape (n_elements, 3)
        Global face index of each local face.
    face_elements : ndarray, shape (n_faces, 2)
        Adjacent elements; the second entry is -1 on boundary faces.
    face_local : ndarray, shape (n_faces, 2)
        Local face index inside each adjacent element (-1 where absent).
    boundary_mask : ndarray of bool, shape (n_faces,)
    h : float
        Largest element diameter.
    """

    n: int
    vertices: np.ndarray
    triangles: np.ndarray
    faces: np.ndarray
    element_faces: np.ndarray
    face_elements: np.ndarray
    face_local: np.ndarray
    boundary_mask: np.ndarray
    h: float
    _jac: np.ndarray = field(repr=False, default=None)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    @property
    def boundary_faces(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)

    @property
    def jacobians(self) -> np.ndarray:
        """Affine map matrices ``J`` with ``x = v0 + J @ xi``, shape (n_elements, 2, 2)."""
        return self._jac

    @property
    def areas(self) -> np.ndarray:
        """Signed element areas."""
        return 0.5 * np.linalg.det(self._jac)

    @property
    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        edges = p[:, [1, 2, 0]] - p
        return np.linalg.norm(edges, axis=2).max(axis=1)

    def face_vertices(self, element: int, local_face: int) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints of a local face, in the element's counterclockwise order."""
        tri = self.triangles[element]
        return self.vertices[tri[local_face]], self.vertices[tri[(local_face + 1) % 3]]

    def to_reference(self, element: int, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        v0 = self.vertices[self.triangles[element, 0]]
        return np.linalg.solve(self._jac[element], (points - v0).T).T

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Index of an element containing each point of the closed unit square."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if np.any(points < -1e-12) or np.any(points > 1 + 1e-12):
            raise ValueError("points must lie in the unit square")
        s = np.clip(points * self.n, 0.0, self.n * (1 - 1e-15))
        cell = np.floor(s).astype(int)
        cell = np.minimum(cell, self.n - 1)
        local = s - cell
        upper = local[:, 1] > local[:, 0]
        return 2 * (cell[:, 0] + self.n * cell[:, 1]) + upper


def build_structured_mesh(n: int) -> Mesh:
    """Uniform right-triangle mesh of the unit square with ``2 n**2`` elements."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)

    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    tris = []
    for j in range(n):
        for i in range(n):
            a = i + j * (n + 1)
            b, c, d = a + 1, a + n + 2, a + n + 1
            tris.append((a, b, c))
            tris.append((a, c, d))
    triangles = np.array(tris, dtype=np.int64)

    face_id: dict[tuple[int, int], int] = {}
    faces = []
    element_faces = np.empty((len(triangles), 3), dtype=np.int64)
    face_elements = []
    face_local = []
    for e, tri in enumerate(triangles):
        for lf in range(3):
            key = tuple(sorted((int(tri[lf]), int(tri[(lf + 1) % 3]))))
            f = face_id.get(key)
            if f is None:
                f = face_id[key] = len(faces)
                faces.append(key)
                face_elements.append([e, -1])
                face_local.append([lf, -1])
            else:
                face_elements[f][1] = e
                face_local[f][1] = lf
            element_faces[e, lf] = f

    face_elements = np.array(face_elements, dtype=np.int64)
    p = vertices[triangles]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)

    return Mesh(
        n=n,
        vertices=vertices,
        triangles=triangles,
        faces=np.array(faces, dtype=np.int64),
        element_faces=element_faces,
        face_elements=face_elements,
        face_local=np.array(face_local, dtype=np.int64),
        boundary_mask=face_elements[:, 1] < 0,
        h=float(np.sqrt(2.0) / n),
        _jac=jac,
    )


def outward_normal(mesh: Mesh, element: int, local_face: int) -> np.ndarray:
    """Unit normal pointing out of ``element`` across ``local_face``."""
    if not 0 <= element < mesh.n_elements:
        raise IndexError(f"element {element} out of range")
    if not 0 <= local_face < 3:
        raise IndexError(f"local face {local_face} out of range")
    a, b = mesh.face_vertices(element, local_face)
    d = b - a
    return np.array([d[1], -d[0]]) / np.hypot(*d)


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text listing of vertices, triangles and faces (debugging aid)."""
    lines = [
        f"# edgcontrol mesh n={mesh.n} h={mesh.h:.16e}",
        "# V <index> <x> <y> | T <index> <v0> <v1> <v2> | F <index> <va> <vb> <boundary>",
    ]
    lines += [f"V {i} {x:.16e} {y:.16e}" for i, (x, y) in enumerate(mesh.vertices)]
    lines += [f"T {i} {a} {b} {c}" for i, (a, b, c) in enumerate(mesh.triangles)]
    lines += [
        f"F {i} {a} {b} {int(bd)}"
        for i, ((a, b), bd) in enumerate(zip(mesh.faces, mesh.boundary_mask))
    ]
    return "\n".join(lines) + "\n"
