"""Element-local EDG systems for the state/adjoint optimality system.

Local unknowns on an element are ordered ``[qx, qy, y, px, py, z]`` with
``m`` coefficients each.  Trace unknowns are addressed through *slots*:
slot ``(j, l)`` is node ``l`` (counterclockwise) on local face ``j``, so each
field has ``3 (k + 1)`` slots and vertex nodes appear in two slots.  Slots
of boundary faces carry data (the boundary interpolant for the state, zero
for the adjoint) rather than unknowns.

The control is eliminated through ``u_h = z_h / gamma`` before assembly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .dofs import BoundaryTrace, TraceDofMap, build_trace_map, element_face_slots
from .mesh import Mesh
from .shape import (
    REFERENCE_VERTICES,
    segment_basis,
    segment_quadrature,
    triangle_basis,
    triangle_quadrature,
)

__all__ = [
    "STAB_MODES",
    "SingularLocalSystem",
    "LocalSystem",
    "Condensed",
    "OperatorB",
    "stabilization",
    "assemble_local",
    "assemble_local_batch",
    "condense",
    "assemble_operator_B",
    "scheme_exactness",
]

STAB_MODES = ("global", "local")


class SingularLocalSystem(RuntimeError):
    """Raised when an element matrix cannot be factorized."""


def scheme_exactness(k: int, quad_bump: int = 0) -> int:
    """Quadrature exactness for the scheme's integrals."""
    return 2 * k + 2 + quad_bump


# ----------------------------------------------------------------------------
# reference tables and geometry


class _Reference:
    def __init__(self, k, exactness):
        tb = triangle_basis(k)
        sb = segment_basis(k)
        self.k = k
        self.m = tb.size
        self.nf = k + 1

        quad = triangle_quadrature(exactness)
        self.qpoints = quad.points
        self.qweights = quad.weights
        self.phi = tb.values(quad.points)
        self.dphi = tb.gradients(quad.points)

        w, phi, dphi = quad.weights, self.phi, self.dphi
        self.mass = np.einsum("q,qi,qj->ij", w, phi, phi)
        # K[c, i, j] = int d_c(phi_i) phi_j
        self.grad_mass = np.einsum("q,qic,qj->cij", w, dphi, phi)

        fq = segment_quadrature(exactness)
        psi = sb.values(fq.points)
        self.face_mass = np.empty((3, self.m, self.m))
        self.face_mixed = np.empty((3, self.m, self.nf))
        self.face_phi = []
        for j in range(3):
            a, b = REFERENCE_VERTICES[j], REFERENCE_VERTICES[(j + 1) % 3]
            xi = a + fq.points[:, None] * (b - a)
            ph = tb.values(xi)
            self.face_phi.append(ph)
            self.face_mass[j] = np.einsum("g,gi,gj->ij", fq.weights, ph, ph)
            self.face_mixed[j] = np.einsum("g,gi,gl->il", fq.weights, ph, psi)
        self.trace_mass = np.einsum("g,gi,gj->ij", fq.weights, psi, psi)
        self.face_points = fq.points
        self.face_weights = fq.weights
        self.psi = psi


@lru_cache(maxsize=None)
def _reference(k, exactness):
    return _Reference(k, exactness)


class _Geometry(NamedTuple):
    det: np.ndarray      # (b,)
    jinv: np.ndarray     # (b, 2, 2)
    length: np.ndarray   # (b, 3)
    normal: np.ndarray   # (b, 3, 2)
    origin: np.ndarray   # (b, 2)
    jac: np.ndarray      # (b, 2, 2)


def _geometry(mesh, elems):
    jac = mesh.jacobians[elems]
    det = np.linalg.det(jac)
    if np.any(det <= 0):
        raise ValueError("mesh contains non-positively oriented elements")
    p = mesh.vertices[mesh.triangles[elems]]
    d = p[:, [1, 2, 0]] - p
    length = np.linalg.norm(d, axis=2)
    normal = np.stack([d[..., 1], -d[..., 0]], axis=2) / length[..., None]
    return _Geometry(det, np.linalg.inv(jac), length, normal, p[:, 0], jac)


def stabilization(mesh: Mesh, stab: str = "global", elems=None) -> np.ndarray:
    """Per-element stabilization ``1/h``: global mesh size or element diameter."""
    if elems is None:
        elems = np.arange(mesh.n_elements)
    if stab == "global":
        return np.full(len(elems), 1.0 / mesh.h)
    if stab == "local":
        return 1.0 / mesh.diameters[elems]
    raise ValueError(f"unknown stabilization mode {stab!r}; expected one of {STAB_MODES}")


def _physical_blocks(ref, geo):
    """Mass, derivative, and face matrices on a batch of elements."""
    det = geo.det
    M = det[:, None, None] * ref.mass
    # D[d, i, j] = int d_{x_d}(phi_i) phi_j
    D = np.einsum("b,bcd,cij->bdij", det, geo.jinv, ref.grad_mass)
    F = geo.length[:, :, None, None] * ref.face_mass
    E = geo.length[:, :, None, None] * ref.face_mixed
    G = geo.length[:, :, None, None] * ref.trace_mass
    return M, D, F, E, G


def _quad_points(ref, geo):
    return geo.origin[:, None, :] + np.einsum("bij,qj->bqi", geo.jac, ref.qpoints)


def _eval_field(func, pts):
    shape = pts.shape[:-1]
    return np.asarray(func(pts.reshape(-1, 2)), dtype=float).reshape(shape)


def _load(ref, geo, func):
    if func is None:
        return np.zeros((len(geo.det), ref.m))
    vals = _eval_field(func, _quad_points(ref, geo))
    return np.einsum("b,q,bq,qi->bi", geo.det, ref.qweights, vals, ref.phi)


# ----------------------------------------------------------------------------
# local systems


@dataclass(eq=False)
class LocalSystem:
    """Dense blocks of one element (or a batch, with a leading axis).

    ``A x + B t = load`` are the element equations for the local unknowns
    ``x`` given slot traces ``t``; ``C x + D t`` are the element's
    contributions to the transmission conditions.  Columns of ``B`` and rows
    of ``C``/``D`` that belong to boundary slots are zero; the boundary data
    is already folded into ``load``.  ``slots`` holds the global condensed
    index of every slot (adjoint slots offset by the trace count), -1 on
    boundary faces.
    """

    element: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    load: np.ndarray
    slots: np.ndarray

    @property
    def B_tr(self):
        return self.B

    def condition_number(self):
        return np.linalg.cond(self.A)


class Condensed(NamedTuple):
    schur: np.ndarray
    rhs: np.ndarray
    recovery: np.ndarray
    offset: np.ndarray


def _slot_indices(mesh, trace, elems):
    k = trace.k
    faces, node = element_face_slots(mesh, k)
    faces, node = faces[elems], node[elems]
    glob = trace.face_dofs[faces[:, :, None], node].reshape(len(elems), -1)
    return faces, node, glob


def assemble_local_batch(
    mesh: Mesh,
    k: int,
    gamma: float,
    f,
    y_d,
    g_trace: BoundaryTrace | None,
    elements,
    stab: str = "global",
    trace: TraceDofMap | None = None,
    quad_bump: int = 0,
) -> LocalSystem:
    """Local systems of several elements at once (leading batch axis)."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    elems = np.atleast_1d(np.asarray(elements, dtype=np.int64))
    if np.any(elems < 0) or np.any(elems >= mesh.n_elements):
        raise IndexError("element index out of range")
    if trace is None:
        trace = build_trace_map(mesh, k)

    ref = _reference(k, scheme_exactness(k, quad_bump))
    geo = _geometry(mesh, elems)
    tau = stabilization(mesh, stab, elems)
    M, D, F, E, G = _physical_blocks(ref, geo)
    n_el, m, nf = len(elems), ref.m, ref.nf
    ns = 3 * nf
    n = geo.normal

    A = np.zeros((n_el, 6 * m, 6 * m))
    Bm = np.zeros((n_el, 6 * m, 2 * ns))
    Cm = np.zeros((n_el, 2 * ns, 6 * m))
    Dm = np.zeros((n_el, 2 * ns, 2 * ns))

    Fsum = F.sum(axis=1)
    # n_d E_j laid out as (b, m, 3 * nf) for each direction
    nE = [np.concatenate([n[:, j, d, None, None] * E[:, j] for j in range(3)], axis=2)
          for d in range(2)]
    tE = np.concatenate([E[:, j] for j in range(3)], axis=2) * tau[:, None, None]
    nF = [np.einsum("bj,bjik->bik", n[:, :, d], F) for d in range(2)]

    for field, (q0, w0, s0) in enumerate(((0, 2 * m, 0), (3 * m, 5 * m, ns))):
        for d in range(2):
            qd = slice(q0 + d * m, q0 + (d + 1) * m)
            A[:, qd, qd] = M
            A[:, qd, w0:w0 + m] = -D[:, d]
            A[:, w0:w0 + m, qd] = -D[:, d] + nF[d]
            Bm[:, qd, s0:s0 + ns] = nE[d]
            Cm[:, s0:s0 + ns, qd] = nE[d].transpose(0, 2, 1)
        A[:, w0:w0 + m, w0:w0 + m] = tau[:, None, None] * Fsum
        Bm[:, w0:w0 + m, s0:s0 + ns] = -tE
        Cm[:, s0:s0 + ns, w0:w0 + m] = tE.transpose(0, 2, 1)
        for j in range(3):
            sj = slice(s0 + j * nf, s0 + (j + 1) * nf)
            Dm[:, sj, sj] = -tau[:, None, None] * G[:, j]

    Y, Z = slice(2 * m, 3 * m), slice(5 * m, 6 * m)
    A[:, Y, Z] = -M / gamma
    A[:, Z, Y] = M

    load = np.zeros((n_el, 6 * m))
    load[:, Y] = _load(ref, geo, f)
    load[:, Z] = _load(ref, geo, y_d)

    faces, node, glob = _slot_indices(mesh, trace, elems)
    boundary = glob < 0
    if g_trace is not None:
        gvals = g_trace.values[faces[:, :, None], node].reshape(n_el, ns)
        gvals = np.where(boundary, gvals, 0.0)
        load -= np.einsum("bis,bs->bi", Bm[:, :, :ns], gvals)

    keep = ~np.concatenate([boundary, boundary], axis=1)
    Bm *= keep[:, None, :]
    Cm *= keep[:, :, None]
    Dm *= keep[:, :, None] & keep[:, None, :]

    slots = np.concatenate([glob, np.where(boundary, -1, glob + trace.size)], axis=1)
    return LocalSystem(elems, A, Bm, Cm, Dm, load, slots)


def assemble_local(mesh, k, gamma, f, y_d, g_trace, element, stab="global",
                   trace=None, quad_bump=0) -> LocalSystem:
    """Local system of a single element."""
    batch = assemble_local_batch(mesh, k, gamma, f, y_d, g_trace, [element], stab,
                                 trace, quad_bump)
    return LocalSystem(int(batch.element[0]), batch.A[0], batch.B[0], batch.C[0],
                       batch.D[0], batch.load[0], batch.slots[0])


def _local_solve(A, rhs, elements):
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        bad = [int(e) for e, a in zip(np.atleast_1d(elements), np.atleast_3d(A))
               if not np.all(np.isfinite(a)) or np.linalg.matrix_rank(a) < a.shape[-1]]
        raise SingularLocalSystem(f"singular local matrix on elements {bad}") from exc


def condense(local: LocalSystem) -> Condensed:
    """Eliminate local unknowns: ``S = C A^-1 B - D``, ``rhs = C A^-1 load``.

    The recovery is ``x = recovery @ t + offset``.  Works on single systems
    and on batches.
    """
    rhs_cols = np.concatenate([local.B, local.load[..., None]], axis=-1)
    X = _local_solve(local.A, rhs_cols, local.element)
    AinvB, Ainvf = X[..., :-1], X[..., -1]
    S = local.C @ AinvB - local.D
    g = np.einsum("...ij,...j->...i", local.C, Ainvf)
    return Condensed(S, g, -AinvB, Ainvf)


# ----------------------------------------------------------------------------
# the bilinear operator on V_h x W_h x M~_h(o)


@dataclass(eq=False)
class OperatorB:
    """Matrix of the single-field EDG form.

    Unknowns are laid out ``[v (2 m per element), w (m per element), mu]``;
    ``matrix[i, j]`` is the form with trial basis ``j`` and test basis ``i``,
    so ``B(x; x') = x' @ matrix @ x``.
    """

    matrix: sp.csr_matrix
    n_vector: int
    n_scalar: int
    n_trace: int

    @property
    def size(self):
        return self.n_vector + self.n_scalar + self.n_trace

    def split(self, x):
        nv, ns = self.n_vector, self.n_scalar
        return x[:nv], x[nv:nv + ns], x[nv + ns:]

    def __call__(self, trial, test):
        return float(test @ (self.matrix @ trial))


def assemble_operator_B(mesh: Mesh, k: int, stab: str = "global",
                        trace: TraceDofMap | None = None, quad_bump: int = 0) -> OperatorB:
    """Assemble the single-field EDG form term by term."""
    if trace is None:
        trace = build_trace_map(mesh, k)
    ref = _reference(k, scheme_exactness(k, quad_bump))
    elems = np.arange(mesh.n_elements)
    geo = _geometry(mesh, elems)
    tau = stabilization(mesh, stab, elems)
    M, D, F, E, G = _physical_blocks(ref, geo)
    n_el, m, nf = mesh.n_elements, ref.m, ref.nf
    nv, ns = 2 * m * n_el, m * n_el

    v_idx = (2 * m * elems)[:, None] + np.arange(2 * m)  # (b, 2m)
    w_idx = nv + (m * elems)[:, None] + np.arange(m)
    rows, cols, vals = [], [], []

    def add(r, c, block):
        rr = np.broadcast_to(r[:, :, None], block.shape)
        cc = np.broadcast_to(c[:, None, :], block.shape)
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        vals.append(block.ravel())

    for d in range(2):
        vd = v_idx[:, d * m:(d + 1) * m]
        # (v, r)
        add(vd, vd, M)
        # -(w, div r)
        add(vd, w_idx, -D[:, d])
        # -(v, grad w1)
        add(w_idx, vd, -D[:, d])
        # <v.n, w1> over all of dT
        add(w_idx, vd, np.einsum("bj,bjik->bik", geo.normal[:, :, d], F))
    # <h^-1 w, w1> over all of dT
    add(w_idx, w_idx, tau[:, None, None] * F.sum(axis=1))

    faces, node, glob = _slot_indices(mesh, trace, elems)
    mu_idx = nv + ns + glob.reshape(n_el, 3, nf)
    for j in range(3):
        interior = ~mesh.boundary_mask[faces[:, j]]
        b = np.flatnonzero(interior)
        if not len(b):
            continue
        Ej, Gj, nj, tb = E[b, j], G[b, j], geo.normal[b, j], tau[b, None, None]
        mu = mu_idx[b, j]
        for d in range(2):
            vd = v_idx[b, d * m:(d + 1) * m]
            # <mu, r.n>
            add(vd, mu, nj[:, d, None, None] * Ej)
            # -<v.n, mu1>
            add(mu, vd, -nj[:, d, None, None] * Ej.transpose(0, 2, 1))
        # -<h^-1 mu, w1>
        add(w_idx[b], mu, -tb * Ej)
        # -<h^-1 (w - mu), mu1>
        add(mu, w_idx[b], -tb * Ej.transpose(0, 2, 1))
        add(mu, mu, tb * Gj)

    size = nv + ns + trace.size
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    ).tocsr()
    mat.sum_duplicates()
    return OperatorB(mat, nv, ns, trace.size)
