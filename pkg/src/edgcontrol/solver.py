"""Global assembly and solution of the discrete optimality system.

Two routes produce the same discrete solution:

* :func:`solve_condensed` eliminates the element unknowns and solves only for
  the interior-skeleton traces of the state and the adjoint;
* :func:`solve_monolithic` assembles every unknown from the single-field
  operator and the mass couplings, and serves as the oracle for the first.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dofs import TraceDofMap, build_trace_map, interpolate_boundary
from .edg import (
    _geometry,
    _load,
    _reference,
    _slot_indices,
    assemble_local_batch,
    assemble_operator_B,
    condense,
    scheme_exactness,
    stabilization,
)
from .mesh import Mesh
from .mms import ProblemData

__all__ = [
    "SolverError",
    "SparseSystem",
    "SolutionFields",
    "sparse_solve",
    "solve_condensed",
    "solve_monolithic",
    "transmission_residual",
]

logger = logging.getLogger(__name__)

CHUNK = 2048
RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """Global linear solve failed; carries the discretization context."""

    def __init__(self, message, **context):
        self.context = context
        detail = ", ".join(f"{k}={v}" for k, v in context.items())
        super().__init__(f"{message} ({detail})" if detail else message)


@dataclass(eq=False)
class SparseSystem:
    """Square sparse system stored as triplets (duplicates are summed)."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.vals)) or not np.all(np.isfinite(self.rhs)):
            raise ValueError("system contains non-finite entries")
        if len(self.rhs) != self.dim:
            raise ValueError("right-hand side length does not match dimension")

    @classmethod
    def from_matrix(cls, matrix, rhs):
        coo = sp.coo_matrix(matrix)
        if coo.shape[0] != coo.shape[1]:
            raise ValueError("matrix must be square")
        return cls(coo.shape[0], coo.row, coo.col, coo.data, np.asarray(rhs, dtype=float))

    def tocsc(self):
        mat = sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(self.dim, self.dim))
        mat = mat.tocsc()
        mat.sum_duplicates()
        return mat


def sparse_solve(system: SparseSystem, info: dict | None = None, **context) -> np.ndarray:
    """Direct LU solve (SuperLU) with a relative residual check.

    ``info``, if given, receives the relative residual and fill-in.
    """
    A = system.tocsc()
    b = system.rhs
    if system.dim == 0:
        return np.zeros(0)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}", dim=system.dim, **context) from exc
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite solution", dim=system.dim, **context)
    res = np.linalg.norm(A @ x - b)
    scale = np.linalg.norm(b) + spla.norm(A) * np.linalg.norm(x)
    rel = res / scale if scale > 0 else res
    if rel > RESIDUAL_TOL:
        raise SolverError(f"residual {res:.3e} exceeds tolerance", dim=system.dim, **context)
    if info is not None:
        info["linear_residual"] = float(rel)
        info["lu_nnz"] = int(lu.L.nnz + lu.U.nnz)
    logger.debug("sparse solve dim=%d rel. residual=%.2e", system.dim, rel)
    return x


@dataclass(eq=False)
class SolutionFields:
    """Discrete solution.

    ``q``, ``p`` have shape (n_elements, 2, m); ``y``, ``z``, ``u`` have
    shape (n_elements, m); ``y_trace``, ``z_trace`` are indexed by the trace
    map.
    """

    mesh: Mesh
    k: int
    gamma: float
    q: np.ndarray
    p: np.ndarray
    y: np.ndarray
    z: np.ndarray
    u: np.ndarray
    y_trace: np.ndarray
    z_trace: np.ndarray
    trace: TraceDofMap
    diagnostics: dict = field(default_factory=dict)

    def state_vector(self):
        """``[q, y, y_trace]`` in the single-field operator layout."""
        return np.concatenate([self.q.ravel(), self.y.ravel(), self.y_trace])

    def adjoint_vector(self):
        return np.concatenate([self.p.ravel(), self.z.ravel(), self.z_trace])

    def field(self, name):
        return getattr(self, name)


def _check_inputs(mesh, k, data):
    if not data.gamma > 0:
        raise ValueError(f"gamma must be positive, got {data.gamma!r}")
    if int(k) != k or k < 1:
        raise ValueError(f"degree must be >= 1, got {k!r}")


def _unpack_local(x, m):
    q = x[:, :2 * m].reshape(-1, 2, m)
    y = x[:, 2 * m:3 * m]
    p = x[:, 3 * m:5 * m].reshape(-1, 2, m)
    z = x[:, 5 * m:]
    return q, y, p, z


def boundary_lift(mesh, k, g_trace, stab="global", trace=None, quad_bump=0):
    """Right-hand side of the state equations from the boundary data.

    Returns ``(v part, w part)`` in the single-field layout:
    ``<I_h g, h^-1 w1 - r1.n>`` over boundary faces.
    """
    ref = _reference(k, scheme_exactness(k, quad_bump))
    elems = np.arange(mesh.n_elements)
    geo = _geometry(mesh, elems)
    tau = stabilization(mesh, stab, elems)
    if trace is None:
        trace = build_trace_map(mesh, k)
    faces, node, _ = _slot_indices(mesh, trace, elems)
    m, nf = ref.m, ref.nf
    rv = np.zeros((mesh.n_elements, 2, m))
    rw = np.zeros((mesh.n_elements, m))
    for j in range(3):
        bnd = mesh.boundary_mask[faces[:, j]]
        b = np.flatnonzero(bnd)
        if not len(b):
            continue
        gj = g_trace.values[faces[b, j][:, None], node[b, j]]  # (b, nf)
        Eg = geo.length[b, j, None] * np.einsum("il,bl->bi", ref.face_mixed[j], gj)
        rw[b] += tau[b, None] * Eg
        for d in range(2):
            rv[b, d] -= geo.normal[b, j, d, None] * Eg
    return rv.ravel(), rw.ravel()


def _data_norm(mesh, k, data, g_trace, stab, trace, quad_bump):
    ref = _reference(k, scheme_exactness(k, quad_bump))
    geo = _geometry(mesh, np.arange(mesh.n_elements))
    rv, rw = boundary_lift(mesh, k, g_trace, stab, trace, quad_bump)
    lf = _load(ref, geo, data.f).ravel() + rw
    ly = _load(ref, geo, data.y_d).ravel()
    return float(np.linalg.norm(np.concatenate([rv, lf, ly])))


def transmission_residual(sol: SolutionFields, stab: str = "global", operator=None,
                          quad_bump: int = 0) -> tuple[float, float]:
    """Max-norm of the transmission conditions for the state and the adjoint.

    These are the trace-test rows of the single-field operator applied to
    the computed fields; the boundary interpolant never enters them.
    """
    if operator is None:
        operator = assemble_operator_B(sol.mesh, sol.k, stab, sol.trace, quad_bump)
    nv, ns = operator.n_vector, operator.n_scalar
    rows = operator.matrix[nv + ns:]
    ry = rows @ sol.state_vector()
    rz = rows @ sol.adjoint_vector()
    return (float(np.max(np.abs(ry), initial=0.0)), float(np.max(np.abs(rz), initial=0.0)))


def _finish(sol, data, g_trace, stab, quad_bump, operator=None):
    ty, tz = transmission_residual(sol, stab, operator, quad_bump)
    norm = _data_norm(sol.mesh, sol.k, data, g_trace, stab, sol.trace, quad_bump)
    sol.diagnostics["transmission_residual_abs"] = max(ty, tz)
    sol.diagnostics["data_norm"] = norm
    sol.diagnostics["transmission_residual"] = max(ty, tz) / norm if norm > 0 else max(ty, tz)
    return sol


def _chunks(n):
    for start in range(0, n, CHUNK):
        yield np.arange(start, min(start + CHUNK, n))


def solve_condensed(mesh: Mesh, k: int, gamma: float, data: ProblemData,
                    stab: str = "global", quad_bump: int = 0) -> SolutionFields:
    """Solve by static condensation onto the interior-skeleton traces."""
    if gamma is None:
        gamma = data.gamma
    data = _with_gamma(data, gamma)
    _check_inputs(mesh, k, data)
    trace = build_trace_map(mesh, k)
    g_trace = interpolate_boundary(data.g, mesh, k)
    n_tr = trace.size
    dim = 2 * n_tr

    rows, cols, vals = [], [], []
    rhs = np.zeros(dim)
    for elems in _chunks(mesh.n_elements):
        local = assemble_local_batch(mesh, k, gamma, data.f, data.y_d, g_trace, elems,
                                     stab, trace, quad_bump)
        cond = condense(local)
        s = local.slots
        keep = s >= 0
        r = np.broadcast_to(s[:, :, None], cond.schur.shape)
        c = np.broadcast_to(s[:, None, :], cond.schur.shape)
        mask = keep[:, :, None] & keep[:, None, :]
        rows.append(r[mask])
        cols.append(c[mask])
        vals.append(cond.schur[mask])
        np.add.at(rhs, s[keep], cond.rhs[keep])

    system = SparseSystem(dim, np.concatenate(rows), np.concatenate(cols),
                          np.concatenate(vals), rhs)
    info = {}
    t = sparse_solve(system, info, n=mesh.n, k=k, route="condensed")

    m = _reference(k, scheme_exactness(k, quad_bump)).m
    x = np.empty((mesh.n_elements, 6 * m))
    t_pad = np.append(t, 0.0)
    for elems in _chunks(mesh.n_elements):
        local = assemble_local_batch(mesh, k, gamma, data.f, data.y_d, g_trace, elems,
                                     stab, trace, quad_bump)
        cond = condense(local)
        tl = t_pad[local.slots]  # -1 picks the trailing zero
        x[elems] = np.einsum("bij,bj->bi", cond.recovery, tl) + cond.offset

    q, y, p, z = _unpack_local(x, m)
    sol = SolutionFields(mesh, k, gamma, q, p, y, z, z / gamma, t[:n_tr], t[n_tr:], trace,
                         {"route": "condensed", "dim": dim, "nnz": len(system.vals), **info})
    return _finish(sol, data, g_trace, stab, quad_bump)


def _with_gamma(data, gamma):
    if gamma is None or gamma == data.gamma:
        return data
    return ProblemData(data.f, data.g, data.y_d, float(gamma), data.source)


def monolithic_system(mesh: Mesh, k: int, gamma: float, data: ProblemData,
                      stab: str = "global", quad_bump: int = 0, trace=None):
    """Full system in the layout ``[q, y, y_trace, p, z, z_trace]``."""
    if trace is None:
        trace = build_trace_map(mesh, k)
    op = assemble_operator_B(mesh, k, stab, trace, quad_bump)
    ref = _reference(k, scheme_exactness(k, quad_bump))
    geo = _geometry(mesh, np.arange(mesh.n_elements))
    g_trace = interpolate_boundary(data.g, mesh, k)

    nv, ns, nt = op.n_vector, op.n_scalar, op.n_trace
    n1 = op.size
    # element mass on W_h, padded to the single-field layout
    M = sp.block_diag(list(geo.det[:, None, None] * ref.mass))
    Mfull = sp.block_diag((sp.csr_matrix((nv, nv)), M, sp.csr_matrix((nt, nt))))
    A = sp.bmat([[op.matrix, -Mfull / gamma], [Mfull, op.matrix]], format="csr")
    W = slice(nv, nv + ns)

    rv, rw = boundary_lift(mesh, k, g_trace, stab, trace, quad_bump)
    rhs = np.zeros(2 * n1)
    rhs[:nv] = rv
    rhs[W] = _load(ref, geo, data.f).ravel() + rw
    rhs[n1 + nv:n1 + nv + ns] = _load(ref, geo, data.y_d).ravel()
    return SparseSystem.from_matrix(A, rhs), op, trace, g_trace


def solve_monolithic(mesh: Mesh, k: int, gamma: float, data: ProblemData,
                     stab: str = "global", quad_bump: int = 0) -> SolutionFields:
    """Solve all unknowns at once; the oracle for :func:`solve_condensed`."""
    if gamma is None:
        gamma = data.gamma
    data = _with_gamma(data, gamma)
    _check_inputs(mesh, k, data)
    system, op, trace, g_trace = monolithic_system(mesh, k, gamma, data, stab, quad_bump)
    info = {}
    x = sparse_solve(system, info, n=mesh.n, k=k, route="monolithic")

    nv, ns, n1 = op.n_vector, op.n_scalar, op.size
    m = ns // mesh.n_elements
    sv, sw, st = op.split(x[:n1])
    av, aw, at = op.split(x[n1:])
    q = sv.reshape(-1, 2, m)
    p = av.reshape(-1, 2, m)
    y = sw.reshape(-1, m)
    z = aw.reshape(-1, m)
    sol = SolutionFields(mesh, k, gamma, q, p, y, z, z / gamma, st.copy(), at.copy(), trace,
                         {"route": "monolithic", "dim": system.dim, "nnz": len(system.vals),
                          **info})
    return _finish(sol, data, g_trace, stab, quad_bump, op)
