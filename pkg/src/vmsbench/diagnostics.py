"""Flow diagnostics: vorticity, mean-vorticity profile, vorticity thickness,
kinetic energy, enstrophy, palinstrophy.

The mean-vorticity profile integrates the broken FE vorticity along every
horizontal grid line through vertices and midside rows; on lines shared by two
cell rows the trace from below is used (from above on y=0).
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from . import fespace


class DiagnosticsError(Exception):
    pass


@dataclass
class QoiRecord:
    t: float
    delta_rel: float
    e_kin: float
    enstrophy: float
    palinstrophy: float


def vorticity_samples(space, u):
    """curl of the FE velocity at the quadrature points, shape (nc, nq)."""
    g = fespace.field_gradients(space, u)
    return g[:, :, 1, 0] - g[:, :, 0, 1]


def vorticity_gradient_samples(space, u):
    """grad(curl u) from broken second derivatives, shape (nc, nq, 2)."""
    h = fespace.field_hessians(space, u)
    return h[:, :, 1, 0, :] - h[:, :, 0, 1, :]


def scalar_qois(space, u):
    """(kinetic energy, enstrophy, palinstrophy) by cell quadrature."""
    w = space.quad.weights
    det = space.mesh.det
    W = det[:, None] * w[None, :]
    vals = fespace.field_values(space, u)
    e_kin = 0.5 * float(np.einsum('cq,cq->', W, (vals ** 2).sum(axis=2)))
    om = vorticity_samples(space, u)
    enstrophy = 0.5 * float(np.einsum('cq,cq->', W, om ** 2))
    gom = vorticity_gradient_samples(space, u)
    palinstrophy = 0.5 * float(np.einsum('cq,cq->', W, (gom ** 2).sum(axis=2)))
    return e_kin, enstrophy, palinstrophy


def kinetic_energy(space, u):
    return scalar_qois(space, u)[0]


def vorticity_p1(space, u, p1_space):
    """Global L2 projection of the vorticity onto continuous P1 (export only)."""
    mesh = space.mesh
    w = space.quad.weights
    W = mesh.det[:, None] * w[None, :]
    vp1 = fespace.ref_basis("P1", space.quad.points)[0]
    cd = p1_space.cell_dofs
    el = np.einsum('cq,iq,jq->cij', W, vp1, vp1)
    rows = np.broadcast_to(cd[:, :, None], el.shape).ravel()
    cols = np.broadcast_to(cd[:, None, :], el.shape).ravel()
    n = p1_space.ndof_scalar
    mass = sparse.csr_matrix((el.ravel(), (rows, cols)), shape=(n, n))
    om = vorticity_samples(space, u)
    b_el = np.einsum('cq,iq,cq->ci', W, vp1, om)
    b = np.bincount(cd.ravel(), weights=b_el.ravel(), minlength=n)
    return spla.spsolve(mass.tocsc(), b)


class LineSampler:
    """Precomputed trace quadrature on the horizontal grid lines of a
    structured mesh (vertex rows plus midside rows, 2^(level+1)+1 lines)."""

    def __init__(self, space, ngauss=4):
        mesh = space.mesh
        n = mesh.n
        h = 1.0 / n
        tg, wg = fespace.segment_gauss(ngauss)
        cells = []
        refs = []
        wts = []
        offsets = [0]
        ys = []

        def lower(i, j):
            return 2 * (j * n + i)

        def upper(i, j):
            return 2 * (j * n + i) + 1

        cols = np.arange(n)
        for row in range(2 * n + 1):
            y = 0.5 * row * h
            ys.append(y)
            if row == 0:
                # bottom boundary: trace from above, bottom edges of lower cells
                for t, w in zip(tg, wg):
                    cells.append(lower(cols, 0))
                    refs.append(np.column_stack([np.full(n, t), np.zeros(n)]))
                    wts.append(np.full(n, w * h))
            elif row % 2 == 0:
                # vertex row: trace from below, top edges of the upper cells
                j = row // 2 - 1
                for t, w in zip(tg, wg):
                    cells.append(upper(cols, j))
                    refs.append(np.column_stack([np.full(n, t), np.full(n, 1.0 - t)]))
                    wts.append(np.full(n, w * h))
            else:
                # midside row: left half in the upper cell, right half in the lower
                j = row // 2
                for t, w in zip(tg, wg):
                    s = 0.5 * t                        # in [0, 1/2]
                    cells.append(upper(cols, j))
                    refs.append(np.column_stack([np.full(n, s), np.full(n, 0.5 - s)]))
                    wts.append(np.full(n, w * 0.5 * h))
                for t, w in zip(tg, wg):
                    s = 0.5 + 0.5 * t
                    cells.append(lower(cols, j))
                    refs.append(np.column_stack([np.full(n, s - 0.5), np.full(n, 0.5)]))
                    wts.append(np.full(n, w * 0.5 * h))
            offsets.append(sum(len(c) for c in cells))
        self.space = space
        self.rows_y = np.array(ys)
        self.cells = np.concatenate(cells)
        self.weights = np.concatenate(wts)
        self.offsets = np.array(offsets)
        refpts = np.vstack(refs)
        _, grad = space.basis_at(self.cells, refpts, nderiv=1)
        self.grad = grad                                # (npts, nloc, 2)

    def mean_vorticity(self, u):
        nds = self.space.ndof_scalar
        cd = self.space.cell_dofs[self.cells]
        u1 = u[:nds][cd]
        u2 = u[nds:2 * nds][cd]
        om = np.einsum('ki,ki->k', self.grad[:, :, 0], u2) \
            - np.einsum('ki,ki->k', self.grad[:, :, 1], u1)
        acc = self.weights * om
        out = np.add.reduceat(acc, self.offsets[:-1])
        return self.rows_y, out


def mean_vorticity_profile(space, u, sampler=None):
    """x-averaged vorticity on all horizontal grid lines; returns (y, values)."""
    sampler = sampler or LineSampler(space)
    return sampler.mean_vorticity(u)


def vorticity_thickness(profile, u_inf, delta0):
    """delta/delta0 with delta = 2*u_inf / max |profile|."""
    peak = np.abs(profile).max()
    if peak == 0.0:
        raise DiagnosticsError("all-zero mean-vorticity profile")
    return 2.0 * u_inf / peak / delta0


def qoi_record(space, u, t, u_inf, delta0, sampler=None):
    """One monitored-quantities row for the current state.  A state with an
    identically zero profile (no vorticity) reports an infinite thickness."""
    e_kin, enstrophy, palinstrophy = scalar_qois(space, u)
    _, prof = mean_vorticity_profile(space, u, sampler)
    try:
        delta_rel = vorticity_thickness(prof, u_inf, delta0)
    except DiagnosticsError:
        delta_rel = float("inf")
    return QoiRecord(t, delta_rel, e_kin, enstrophy, palinstrophy)
