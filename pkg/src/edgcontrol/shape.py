"""Lagrange bases and quadrature on the reference triangle and segment.

The reference triangle has vertices ``(0, 0), (1, 0), (0, 1)``; the reference
segment is ``[0, 1]``.  Nodes are equispaced.  Triangle nodes are ordered
vertices first, then the ``k - 1`` interior nodes of each edge (edge ``j``
runs from vertex ``j`` to vertex ``j + 1``), then interior nodes row by row.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "MAX_DEGREE",
    "TriangleBasis",
    "SegmentBasis",
    "QuadratureRule",
    "triangle_basis",
    "segment_basis",
    "triangle_quadrature",
    "segment_quadrature",
    "REFERENCE_VERTICES",
]

MAX_DEGREE = 4
MAX_TRIANGLE_EXACTNESS = 16
MAX_SEGMENT_EXACTNESS = 20

REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _check_degree(k):
    if int(k) != k or not 1 <= k <= MAX_DEGREE:
        raise ValueError(f"degree must be an integer in [1, {MAX_DEGREE}], got {k!r}")
    return int(k)


def _monomial_exponents(k):
    return [(i, d - i) for d in range(k + 1) for i in range(d, -1, -1)]


@dataclass(frozen=True, eq=False)
class TriangleBasis:
    degree: int
    nodes: np.ndarray
    _exponents: tuple
    _coeffs: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    def _monomials(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack([x**i * y**j for i, j in self._exponents])

    def _monomial_grads(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        dx = [i * x ** max(i - 1, 0) * y**j for i, j in self._exponents]
        dy = [j * x**i * y ** max(j - 1, 0) for i, j in self._exponents]
        return np.column_stack(dx), np.column_stack(dy)

    def values(self, points) -> np.ndarray:
        """Basis values, shape (n_points, m)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self._monomials(pts) @ self._coeffs

    def gradients(self, points) -> np.ndarray:
        """Reference gradients, shape (n_points, m, 2)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dx, dy = self._monomial_grads(pts)
        return np.stack([dx @ self._coeffs, dy @ self._coeffs], axis=2)


@dataclass(frozen=True, eq=False)
class SegmentBasis:
    degree: int
    nodes: np.ndarray
    _coeffs: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    def values(self, t) -> np.ndarray:
        """Basis values, shape (n_points, k + 1)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.vander(t, self.degree + 1, increasing=True) @ self._coeffs


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    exactness: int

    def __len__(self):
        return len(self.weights)


def _triangle_nodes(k):
    nodes = [tuple(v) for v in REFERENCE_VERTICES]
    for j in range(3):
        a, b = REFERENCE_VERTICES[j], REFERENCE_VERTICES[(j + 1) % 3]
        nodes += [tuple(a + (b - a) * s / k) for s in range(1, k)]
    for jy in range(1, k):
        for ix in range(1, k - jy):
            nodes.append((ix / k, jy / k))
    return np.array(nodes)


@lru_cache(maxsize=None)
def triangle_basis(k: int) -> TriangleBasis:
    """Degree-``k`` Lagrange basis on the reference triangle."""
    k = _check_degree(k)
    nodes = _triangle_nodes(k)
    exps = tuple(_monomial_exponents(k))
    x, y = nodes[:, 0], nodes[:, 1]
    vander = np.column_stack([x**i * y**j for i, j in exps])
    return TriangleBasis(k, nodes, exps, np.linalg.inv(vander))


@lru_cache(maxsize=None)
def segment_basis(k: int) -> SegmentBasis:
    """Degree-``k`` Lagrange basis on ``[0, 1]`` with equispaced nodes."""
    k = _check_degree(k)
    nodes = np.arange(k + 1) / k
    vander = np.vander(nodes, k + 1, increasing=True)
    return SegmentBasis(k, nodes, np.linalg.inv(vander))


@lru_cache(maxsize=None)
def segment_quadrature(exactness: int) -> QuadratureRule:
    """Gauss-Legendre rule on ``[0, 1]``."""
    if int(exactness) != exactness or not 0 <= exactness <= MAX_SEGMENT_EXACTNESS:
        raise ValueError(f"segment exactness must be in [0, {MAX_SEGMENT_EXACTNESS}]")
    npts = exactness // 2 + 1
    x, w = np.polynomial.legendre.leggauss(npts)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, int(exactness))


@lru_cache(maxsize=None)
def triangle_quadrature(exactness: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss rule on the reference triangle.

    With ``x = u (1 - v)``, ``y = v`` a degree-``d`` polynomial becomes degree
    ``d`` in ``u`` and at most ``d + 1`` in ``v`` after the Jacobian ``1 - v``.
    """
    if int(exactness) != exactness or not 0 <= exactness <= MAX_TRIANGLE_EXACTNESS:
        raise ValueError(f"triangle exactness must be in [0, {MAX_TRIANGLE_EXACTNESS}]")
    gu = segment_quadrature(exactness)
    gv = segment_quadrature(exactness + 1)
    U, V = np.meshgrid(gu.points, gv.points, indexing="ij")
    WU, WV = np.meshgrid(gu.weights, gv.weights, indexing="ij")
    points = np.column_stack([(U * (1 - V)).ravel(), V.ravel()])
    weights = (WU * WV * (1 - V)).ravel()
    return QuadratureRule(points, weights, int(exactness))
