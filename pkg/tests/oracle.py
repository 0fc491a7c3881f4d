"""Loop-based quadrature evaluators used as test oracles.

Nothing here touches the vectorized assembly: faces are found from vertex
pairs, normals from the centroid direction, and trace functions are
interpolated from the node coordinates stored in the trace map.
"""
import numpy as np

from edgcontrol.shape import (
    segment_quadrature,
    triangle_basis,
    triangle_quadrature,
)


def lagrange_1d(nodes, t):
    """Lagrange basis on arbitrary distinct nodes, shape (len(t), len(nodes))."""
    t = np.atleast_1d(t)
    out = np.ones((len(t), len(nodes)))
    for i, ti in enumerate(nodes):
        for j, tj in enumerate(nodes):
            if i != j:
                out[:, i] *= (t - tj) / (ti - tj)
    return out


class FormEvaluator:
    def __init__(self, mesh, k, trace, stab="global", exactness=None):
        self.mesh, self.k, self.trace = mesh, k, trace
        self.basis = triangle_basis(k)
        self.m = self.basis.size
        e = exactness if exactness is not None else 2 * k + 4
        self.tq = triangle_quadrature(e)
        self.sq = segment_quadrature(e)
        self.face_of = {frozenset(map(int, f)): i for i, f in enumerate(mesh.faces)}
        count = np.zeros(mesh.n_faces, int)
        for tri in mesh.triangles:
            for j in range(3):
                count[self.face_of[frozenset((int(tri[j]), int(tri[(j + 1) % 3])))]] += 1
        self.boundary = count == 1
        self.tau = np.empty(mesh.n_elements)
        for e, tri in enumerate(mesh.triangles):
            p = mesh.vertices[tri]
            diam = max(np.linalg.norm(p[i] - p[(i + 1) % 3]) for i in range(3))
            self.tau[e] = 1.0 / (mesh.h if stab == "global" else diam)

    # -- helpers -----------------------------------------------------------
    def size(self):
        return 3 * self.m * self.mesh.n_elements + self.trace.size

    def unpack(self, x):
        nel, m = self.mesh.n_elements, self.m
        nv, ns = 2 * m * nel, m * nel
        return x[:nv].reshape(nel, 2, m), x[nv:nv + ns].reshape(nel, m), x[nv + ns:]

    def _element(self, e):
        p = self.mesh.vertices[self.mesh.triangles[e]]
        J = np.column_stack([p[1] - p[0], p[2] - p[0]])
        return p, J, np.linalg.inv(J), abs(np.linalg.det(J))

    def _edges(self, e):
        p, J, Jinv, _ = self._element(e)
        centroid = p.mean(axis=0)
        tri = self.mesh.triangles[e]
        for j in range(3):
            a, b = p[j], p[(j + 1) % 3]
            L = np.linalg.norm(b - a)
            n = np.array([b[1] - a[1], a[0] - b[0]]) / L
            if n @ ((a + b) / 2 - centroid) < 0:
                n = -n
            pts = a + self.sq.points[:, None] * (b - a)
            phi = self.basis.values((pts - p[0]) @ Jinv.T)
            f = self.face_of[frozenset((int(tri[j]), int(tri[(j + 1) % 3])))]
            yield f, pts, phi, n, self.sq.weights * L

    def _trace_values(self, f, pts, mu):
        dofs = self.trace.face_dofs[f]
        coords = self.trace.coordinates[dofs]
        a = coords[0]
        L = np.linalg.norm(coords[-1] - a)
        nodes = np.linalg.norm(coords - a, axis=1) / L
        t = np.linalg.norm(pts - a, axis=1) / L
        return lagrange_1d(nodes, t) @ mu[dofs]

    # -- the form ----------------------------------------------------------
    def form(self, trial, test):
        v, w, mu = self.unpack(trial)
        r, w1, mu1 = self.unpack(test)
        total = 0.0
        for e in range(self.mesh.n_elements):
            p, J, Jinv, det = self._element(e)
            phi = self.basis.values(self.tq.points)
            grad = self.basis.gradients(self.tq.points) @ Jinv  # physical gradients
            wq = self.tq.weights * det
            vq, rq = phi @ v[e].T, phi @ r[e].T
            divr = np.einsum("qid,di->q", grad, r[e])
            gw1 = np.einsum("qid,i->qd", grad, w1[e])
            total += wq @ (np.sum(vq * rq, 1) - (phi @ w[e]) * divr - np.sum(vq * gw1, 1))
            tau = self.tau[e]
            for f, pts, ph, n, ww in self._edges(e):
                vn, rn = ph @ v[e].T @ n, ph @ r[e].T @ n
                wf, w1f = ph @ w[e], ph @ w1[e]
                total += ww @ (vn * w1f + tau * wf * w1f)
                if self.boundary[f]:
                    continue
                muf, mu1f = self._trace_values(f, pts, mu), self._trace_values(f, pts, mu1)
                total += ww @ (muf * rn - tau * muf * w1f - vn * mu1f - tau * (wf - muf) * mu1f)
        return total

    def energy_terms(self, x):
        """(||v||^2, tau ||w - mu||^2 on interior faces, tau ||w||^2 on the boundary)."""
        v, w, mu = self.unpack(x)
        vol = inner = outer = 0.0
        for e in range(self.mesh.n_elements):
            _, _, _, det = self._element(e)
            phi = self.basis.values(self.tq.points)
            vol += (self.tq.weights * det) @ np.sum((phi @ v[e].T) ** 2, 1)
            for f, pts, ph, _, ww in self._edges(e):
                wf = ph @ w[e]
                if self.boundary[f]:
                    outer += self.tau[e] * ww @ wf**2
                else:
                    inner += self.tau[e] * ww @ (wf - self._trace_values(f, pts, mu)) ** 2
        return vol, inner, outer


def poisson_edg_reference(mesh, k, f, g, stab="global"):
    """Control-free EDG solve of -lap y = f, y = g built from the operator matrix.

    Uses only the single-field form and its boundary lift; no local
    condensation is involved.
    """
    import scipy.sparse.linalg as spla

    from edgcontrol.dofs import build_trace_map, interpolate_boundary
    from edgcontrol.edg import assemble_operator_B
    from edgcontrol.solver import boundary_lift

    trace = build_trace_map(mesh, k)
    op = assemble_operator_B(mesh, k, stab, trace)
    rv, rw = boundary_lift(mesh, k, interpolate_boundary(g, mesh, k), stab, trace)
    m = triangle_basis(k).size
    det = np.abs(np.linalg.det(mesh.jacobians))
    quad = triangle_quadrature(2 * k + 6)
    phi = triangle_basis(k).values(quad.points)
    load = np.zeros((mesh.n_elements, m))
    for e in range(mesh.n_elements):
        p0 = mesh.vertices[mesh.triangles[e, 0]]
        pts = p0 + quad.points @ mesh.jacobians[e].T
        load[e] = (quad.weights * det[e] * f(pts)) @ phi
    rhs = np.concatenate([rv, load.ravel() + rw, np.zeros(trace.size)])
    x = spla.spsolve(op.matrix.tocsc(), rhs)
    _, w, _ = op.split(x)
    return w.reshape(mesh.n_elements, m)
