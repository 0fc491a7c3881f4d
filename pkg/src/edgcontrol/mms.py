"""Manufactured solutions for the optimality system.

Given exact state ``y`` and adjoint ``z`` (with ``z = 0`` on the boundary)
and a Tikhonov weight ``gamma``, the data reproducing them are

    u   = z / gamma
    f   = -lap(y) - u
    g   = y on the boundary
    y_d = -lap(z) + y

All callables take points of shape (n, 2) and return arrays of shape (n,)
(scalars) or (n, 2) (vectors).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ExactSolution",
    "ProblemData",
    "manufacture",
    "builtin_paper_case",
    "polynomial_case",
    "zero_data",
    "boundary_sample_points",
]

Scalar = Callable[[np.ndarray], np.ndarray]
Vector = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ExactSolution:
    y: Scalar
    grad_y: Vector
    lap_y: Scalar
    z: Scalar
    grad_z: Vector
    lap_z: Scalar
    gamma: float = 1.0
    name: str = "custom"

    def q(self, x):
        """Exact state flux ``-grad y``."""
        return -np.asarray(self.grad_y(x))

    def p(self, x):
        """Exact adjoint flux ``-grad z``."""
        return -np.asarray(self.grad_z(x))

    def u(self, x):
        return np.asarray(self.z(x)) / self.gamma


@dataclass(frozen=True)
class ProblemData:
    f: Scalar
    g: Scalar
    y_d: Scalar
    gamma: float
    source: str = field(default="")


def boundary_sample_points(n_per_side: int = 17) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n_per_side)
    zero, one = np.zeros_like(t), np.ones_like(t)
    return np.concatenate([
        np.column_stack([t, zero]),
        np.column_stack([one, t]),
        np.column_stack([t, one]),
        np.column_stack([zero, t]),
    ])


def manufacture(exact: ExactSolution, atol: float = 1e-12) -> ProblemData:
    """Problem data for which ``exact`` solves the optimality system."""
    if not exact.gamma > 0:
        raise ValueError(f"gamma must be positive, got {exact.gamma!r}")
    zb = np.asarray(exact.z(boundary_sample_points()))
    if np.max(np.abs(zb)) > atol:
        raise ValueError(
            f"exact adjoint must vanish on the boundary (max |z| = {np.max(np.abs(zb)):.3e})"
        )
    gamma = float(exact.gamma)

    def f(x):
        return -np.asarray(exact.lap_y(x)) - np.asarray(exact.z(x)) / gamma

    def y_d(x):
        return -np.asarray(exact.lap_z(x)) + np.asarray(exact.y(x))

    return ProblemData(f=f, g=exact.y, y_d=y_d, gamma=gamma, source=f"manufactured:{exact.name}")


def zero_data(gamma: float = 1.0) -> ProblemData:
    def zero(x):
        return np.zeros(len(np.atleast_2d(x)))

    return ProblemData(f=zero, g=zero, y_d=zero, gamma=float(gamma), source="zero")


def builtin_paper_case(gamma: float = 1.0) -> ExactSolution:
    """``y = sin(pi x1)``, ``z = sin(pi x1) sin(pi x2)`` on the unit square."""
    pi = np.pi

    def y(x):
        return np.sin(pi * x[:, 0])

    def grad_y(x):
        return np.column_stack([pi * np.cos(pi * x[:, 0]), np.zeros(len(x))])

    def lap_y(x):
        return -pi**2 * np.sin(pi * x[:, 0])

    def z(x):
        return np.sin(pi * x[:, 0]) * np.sin(pi * x[:, 1])

    def grad_z(x):
        s1, s2 = np.sin(pi * x[:, 0]), np.sin(pi * x[:, 1])
        c1, c2 = np.cos(pi * x[:, 0]), np.cos(pi * x[:, 1])
        return pi * np.column_stack([c1 * s2, s1 * c2])

    def lap_z(x):
        return -2 * pi**2 * np.sin(pi * x[:, 0]) * np.sin(pi * x[:, 1])

    return ExactSolution(y, grad_y, lap_y, z, grad_z, lap_z, gamma=float(gamma), name="builtin")


def _poly2d(coeffs):
    """Value, gradient and Laplacian of ``sum c[i, j] x^i y^j``."""
    c = np.asarray(coeffs, dtype=float)
    deg = c.shape[0] - 1
    dx = np.polynomial.polynomial.polyder(c, axis=0)
    dy = np.polynomial.polynomial.polyder(c, axis=1)
    lap = (np.polynomial.polynomial.polyder(c, 2, axis=0)
           if deg >= 2 else np.zeros((1, 1)))
    lap_y = (np.polynomial.polynomial.polyder(c, 2, axis=1)
             if deg >= 2 else np.zeros((1, 1)))
    val2 = np.polynomial.polynomial.polyval2d

    def value(x):
        return val2(x[:, 0], x[:, 1], c)

    def grad(x):
        return np.column_stack([val2(x[:, 0], x[:, 1], dx), val2(x[:, 0], x[:, 1], dy)])

    def laplacian(x):
        return val2(x[:, 0], x[:, 1], lap) + val2(x[:, 0], x[:, 1], lap_y)

    return value, grad, laplacian


def polynomial_case(degree: int, gamma: float = 1.0, seed: int = 0) -> ExactSolution:
    """Random polynomial state of total degree ``degree``.

    The adjoint is the bubble ``x1 (1 - x1) x2 (1 - x2)`` times a random
    constant, so it vanishes on the boundary as required.
    """
    rng = np.random.default_rng(seed)
    c = np.zeros((degree + 1, degree + 1))
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            c[i, j] = rng.uniform(-1.0, 1.0)
    y, gy, ly = _poly2d(c)

    a = rng.uniform(0.5, 2.0)
    # x(1-x) y(1-y) = (x - x^2)(y - y^2)
    cz = np.zeros((3, 3))
    cz[1, 1], cz[2, 1], cz[1, 2], cz[2, 2] = a, -a, -a, a
    z, gz, lz = _poly2d(cz)
    return ExactSolution(y, gy, ly, z, gz, lz, gamma=float(gamma),
                         name=f"polynomial-{degree}-seed{seed}")
