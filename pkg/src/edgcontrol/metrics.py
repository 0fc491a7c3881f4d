"""Errors, projections, convergence orders and the cost functional."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh
from .shape import triangle_basis, triangle_quadrature

__all__ = [
    "FIELDS",
    "error_exactness",
    "l2_error_scalar",
    "l2_error_vector",
    "l2_project_scalar",
    "l2_project_vector",
    "evaluate",
    "eoc",
    "fit_order",
    "cost_functional",
    "ConvergenceLevel",
    "ConvergenceRecord",
]

FIELDS = ("q", "p", "y", "z", "u")
CSV_HEADER = ["n", "h", "e_q", "ord_q", "e_p", "ord_p", "e_y", "ord_y",
              "e_z", "ord_z", "e_u", "ord_u"]


def error_exactness(k: int, quad_bump: int = 0) -> int:
    return 2 * k + 6 + quad_bump


def _element_quadrature(mesh, k, exactness):
    quad = triangle_quadrature(exactness)
    phi = triangle_basis(k).values(quad.points)
    v0 = mesh.vertices[mesh.triangles[:, 0]]
    pts = v0[:, None, :] + np.einsum("eij,qj->eqi", mesh.jacobians, quad.points)
    wdet = np.abs(np.linalg.det(mesh.jacobians))[:, None] * quad.weights
    return pts, wdet, phi


def _eval(func, pts):
    flat = np.asarray(func(pts.reshape(-1, 2)), dtype=float)
    return flat.reshape(pts.shape[:-1] + flat.shape[1:])


def _check_scalar(field, mesh, k):
    field = np.asarray(field, dtype=float)
    m = triangle_basis(k).size
    if field.shape != (mesh.n_elements, m):
        raise ValueError(f"expected scalar field of shape {(mesh.n_elements, m)}, got {field.shape}")
    return field


def _check_vector(field, mesh, k):
    field = np.asarray(field, dtype=float)
    m = triangle_basis(k).size
    if field.shape != (mesh.n_elements, 2, m):
        raise ValueError(f"expected vector field of shape {(mesh.n_elements, 2, m)}, got {field.shape}")
    return field


def l2_error_scalar(field, exact, mesh: Mesh, k: int, exactness: int | None = None) -> float:
    """``||u_h - u||`` over the domain; ``exact=None`` means zero."""
    field = _check_scalar(field, mesh, k)
    pts, wdet, phi = _element_quadrature(mesh, k, exactness or error_exactness(k))
    diff = field @ phi.T
    if exact is not None:
        diff = diff - _eval(exact, pts)
    return float(np.sqrt(np.sum(wdet * diff**2)))


def l2_error_vector(field, exact, mesh: Mesh, k: int, exactness: int | None = None) -> float:
    field = _check_vector(field, mesh, k)
    pts, wdet, phi = _element_quadrature(mesh, k, exactness or error_exactness(k))
    diff = np.einsum("edi,qi->eqd", field, phi)
    if exact is not None:
        diff = diff - _eval(exact, pts)
    return float(np.sqrt(np.sum(wdet[..., None] * diff**2)))


def _local_mass(mesh, k, exactness):
    pts, wdet, phi = _element_quadrature(mesh, k, exactness)
    return pts, wdet, phi, np.einsum("eq,qi,qj->eij", wdet, phi, phi)


def l2_project_scalar(exact, mesh: Mesh, k: int, exactness: int | None = None) -> np.ndarray:
    """Elementwise L2 projection onto degree-``k`` polynomials."""
    pts, wdet, phi, M = _local_mass(mesh, k, exactness or error_exactness(k))
    rhs = np.einsum("eq,eq,qi->ei", wdet, _eval(exact, pts), phi)
    return np.linalg.solve(M, rhs[..., None])[..., 0]


def l2_project_vector(exact, mesh: Mesh, k: int, exactness: int | None = None) -> np.ndarray:
    pts, wdet, phi, M = _local_mass(mesh, k, exactness or error_exactness(k))
    rhs = np.einsum("eq,eqd,qi->edi", wdet, _eval(exact, pts), phi)
    return np.linalg.solve(M[:, None], rhs[..., None])[..., 0]


def evaluate(field, mesh: Mesh, k: int, points) -> np.ndarray:
    """Point values of a broken field (scalar or vector) at physical points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    elems = mesh.locate(points)
    v0 = mesh.vertices[mesh.triangles[elems, 0]]
    xi = np.linalg.solve(mesh.jacobians[elems], (points - v0)[..., None])[..., 0]
    phi = triangle_basis(k).values(xi)
    field = np.asarray(field)
    if field.ndim == 2:
        return np.einsum("pi,pi->p", field[elems], phi)
    return np.einsum("pdi,pi->pd", field[elems], phi)


def eoc(errors, hs) -> list[float]:
    """Orders ``log(e[i-1]/e[i]) / log(h[i-1]/h[i])`` between consecutive levels."""
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if errors.shape != hs.shape or errors.ndim != 1 or len(errors) < 2:
        raise ValueError("errors and hs must be 1-D sequences of equal length >= 2")
    if np.any(hs <= 0):
        raise ValueError("mesh sizes must be positive")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive; a zero error means exact reproduction")
    return list(np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:]))


def fit_order(errors, hs) -> float:
    """Least-squares slope of ``log e`` against ``log h``."""
    slope, _ = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope)


def cost_functional(y_h, u_h, y_d, gamma: float, mesh: Mesh, k: int,
                    exactness: int | None = None) -> float:
    """``0.5 ||y_h - y_d||^2 + 0.5 gamma ||u_h||^2``."""
    ey = l2_error_scalar(y_h, y_d, mesh, k, exactness)
    eu = l2_error_scalar(u_h, None, mesh, k, exactness)
    return 0.5 * ey**2 + 0.5 * gamma * eu**2


@dataclass
class ConvergenceLevel:
    n: int
    h: float
    errors: dict
    extras: dict = field(default_factory=dict)


@dataclass
class ConvergenceRecord:
    k: int
    levels: list = field(default_factory=list)

    def append(self, level: ConvergenceLevel):
        if self.levels and level.n <= self.levels[-1].n:
            raise ValueError("levels must be strictly increasing")
        self.levels.append(level)

    @property
    def hs(self):
        return np.array([lv.h for lv in self.levels])

    def errors(self, name):
        return np.array([lv.errors[name] for lv in self.levels])

    def orders(self, name) -> list:
        """Order per level; ``None`` for the first level, ``"exact"`` if an error vanishes."""
        out = [None]
        e = self.errors(name)
        for i in range(1, len(e)):
            if e[i - 1] <= 0 or e[i] <= 0:
                out.append("exact")
            else:
                out.append(eoc(e[i - 1:i + 1], self.hs[i - 1:i + 1])[0])
        return out

    def rows(self):
        orders = {name: self.orders(name) for name in FIELDS}
        for i, lv in enumerate(self.levels):
            row = [str(lv.n), f"{lv.h:.6e}"]
            for name in FIELDS:
                row.append(f"{lv.errors[name]:.6e}")
                o = orders[name][i]
                row.append("-" if o is None else o if isinstance(o, str) else f"{o:.4f}")
            yield row

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(self.rows())
        return buf.getvalue()

    def to_table(self) -> str:
        """Aligned text table, one block per field, levels as columns."""
        labels = {"q": "||q-q_h||", "p": "||p-p_h||", "y": "||y-y_h||",
                  "z": "||z-z_h||", "u": "||u-u_h||"}
        head = ["h/sqrt2"] + [f"1/{lv.n}" for lv in self.levels]
        lines = [head]
        for name in FIELDS:
            lines.append([labels[name]] + [f"{e:.4e}" for e in self.errors(name)])
            lines.append(["order"] + [
                "-" if o is None else o if isinstance(o, str) else f"{o:.2f}"
                for o in self.orders(name)
            ])
        widths = [max(len(r[c]) for r in lines) for c in range(len(head))]
        return "\n".join(
            "  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in lines
        ) + "\n"

    @staticmethod
    def from_csv(text: str, k: int) -> "ConvergenceRecord":
        rec = ConvergenceRecord(k)
        for row in csv.DictReader(io.StringIO(text)):
            rec.append(ConvergenceLevel(
                int(row["n"]), float(row["h"]),
                {name: float(row[f"e_{name}"]) for name in FIELDS}))
        return rec


def is_finite_record(record: ConvergenceRecord) -> bool:
    return all(math.isfinite(v) and v >= 0 for lv in record.levels for v in lv.errors.values())
