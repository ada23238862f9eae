"""Sparse system assembly for one BDF2 step of each stabilized method.

All methods share the Galerkin blocks

    (3/(2 dt)) (u, v) + nu (grad u, grad v) + ((uhat.grad) u, v)
    - (p, div v) + (div u, q)   [+ zero-mean multiplier row/column]

with rhs ((4 u^n - u^{n-1})/(2 dt) + f, v), and add their own stabilization:

* supg  -- -(R_m(u,p), (uhat.grad) v + C grad q) + grad-div
* pspg  -- -(R_m(u,p), grad q) + grad-div (C forced to 1)
* rbvms -- supg terms plus -(R_m(u,p), (grad v)^T uhat)
           and -(R_m(u,p), (grad v)^T R_m(uhat, phat))
* lps1 / lpsint -- (tau_m k_h((uhat.grad) u), k_h((uhat.grad) v))
           + (tau_m k_h(grad p), k_h(C grad q)) + grad-div

where R_m(u, p) = tau_m (f - D_t u + nu Lap u - (uhat.grad) u - grad p) and
the unknown-dependent residual parts go to the matrix, the known parts to
the rhs.  Vector DOFs are blocked by component; the global unknown vector is
[u1, u2, p, lagrange multiplier].
"""

import numpy as np
from scipy import sparse

from . import fespace, lps

__all__ = ["MethodKind", "SparseSystem", "Assembler", "method_families"]

METHOD_TAGS = ("rbvms", "supg", "lps1", "lpsint", "pspg")
FE_MODES = ("eo", "iss")


class AssemblyError(Exception):
    pass


class MethodKind:
    """Stabilized-method descriptor: tag, FE mode, and term switches."""

    def __init__(self, kind, fe_mode="eo", include_cross_subgrid=True,
                 phat_doubled=False):
        if kind not in METHOD_TAGS:
            raise AssemblyError(f"unknown method {kind!r}")
        if fe_mode not in FE_MODES:
            raise AssemblyError(f"unknown FE mode {fe_mode!r}")
        self.kind = kind
        self.fe_mode = fe_mode
        self.include_cross_subgrid = include_cross_subgrid
        self.phat_doubled = phat_doubled

    @property
    def pressure_switch(self):
        """C = 1 for equal-order pairs (and always for pspg), else 0."""
        if self.kind == "pspg":
            return 1.0
        return 1.0 if self.fe_mode == "eo" else 0.0

    def families(self):
        return method_families(self.kind, self.fe_mode)

    def __repr__(self):
        return f"MethodKind({self.kind!r}, {self.fe_mode!r})"


def method_families(kind, fe_mode):
    """Velocity/pressure FE families of a method tag and FE mode."""
    if kind == "lps1":
        return ("P2Bubble", "P2Bubble") if fe_mode == "eo" else ("P2Bubble", "P1dc")
    return ("P2", "P2") if fe_mode == "eo" else ("P2", "P1")


class SparseSystem:
    """Square system of size 2*ndof_u + ndof_p + 1 built from COO triplets."""

    def __init__(self, n_u, n_p):
        self.n_u = n_u
        self.n_p = n_p
        self.n = n_u + n_p + 1
        self.rhs = np.zeros(self.n)
        self._rows = []
        self._cols = []
        self._vals = []
        self._csr = None
        self.constrained = False

    def add(self, rows, cols, vals):
        self._rows.append(np.asarray(rows, dtype=np.int64).ravel())
        self._cols.append(np.asarray(cols, dtype=np.int64).ravel())
        self._vals.append(np.asarray(vals, dtype=float).ravel())
        self._csr = None

    def add_block(self, el, rows, cols):
        """Scatter element blocks el (nc, a, b) with row/col dof maps."""
        r = np.broadcast_to(rows[:, :, None], el.shape)
        c = np.broadcast_to(cols[:, None, :], el.shape)
        self.add(r, c, el)

    @property
    def matrix(self):
        if self._csr is None:
            rows = np.concatenate(self._rows) if self._rows else np.empty(0, np.int64)
            cols = np.concatenate(self._cols) if self._cols else np.empty(0, np.int64)
            vals = np.concatenate(self._vals) if self._vals else np.empty(0)
            self._csr = sparse.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))
            self._rows = [rows]
            self._cols = [cols]
            self._vals = [vals]
        return self._csr

    def set_matrix(self, csr):
        self._rows, self._cols, self._vals = [], [], []
        self._csr = csr
        coo = csr.tocoo()
        self._rows, self._cols, self._vals = [coo.row], [coo.col], [coo.data]


class Assembler:
    """Per-(mesh, method-family) assembly context with cached tabulations."""

    def __init__(self, space_u, space_p):
        if space_u.mesh is not space_p.mesh:
            raise AssemblyError("velocity and pressure spaces on different meshes")
        if space_u.components != 2 or space_p.components != 1:
            raise AssemblyError("expected a vector velocity and scalar pressure space")
        self.su = space_u
        self.sp = space_p
        self.mesh = space_u.mesh
        quad = space_u.quad
        self.wq = quad.weights
        self.W = self.mesh.det[:, None] * self.wq[None, :]          # (nc, nq)
        self.Vu, self.Gu, self.Hu, self.Lu = space_u.tabulation()
        self.Vp, self.Gp, _, _ = space_p.tabulation()
        self.nq = len(self.wq)
        self.nds = space_u.ndof_scalar
        self.n_u = 2 * self.nds
        self.n_p = space_p.ndof_scalar
        self.udofs = [m * self.nds + space_u.cell_dofs for m in range(2)]
        self.pdofs = self.n_u + space_p.cell_dofs
        v0 = self.mesh.cell_verts[:, 0]
        a1 = self.mesh.cell_verts[:, 1] - v0
        a2 = self.mesh.cell_verts[:, 2] - v0
        q = quad.points
        self.xq = v0[:, None, :] + q[None, :, 0, None] * a1[:, None, :] \
            + q[None, :, 1, None] * a2[:, None, :]                  # (nc, nq, 2)
        self._pq = None
        self._vert_tab = None
        self._owners = None
        self._static = None

    # -- small helpers -------------------------------------------------------

    def new_system(self):
        sys = SparseSystem(self.n_u, self.n_p)
        # the minimum-degree-on-A+A^T ordering behaves badly with broken
        # pressure spaces; flag those for the solver
        sys.symmetric_ordering_ok = self.sp.family != "P1dc"
        return sys

    def _advection(self, uh):
        return np.einsum('cqe,ciqe->ciq', uh, self.Gu)

    def _trial_residual_op(self, adv, alpha, nu):
        # scalar operator applied to trial velocity basis: alpha*phi - nu*Lap(phi)
        # + (uhat.grad) phi, the (negated) unknown part of the momentum residual
        return alpha * self.Vu[None, :, :] - nu * self.Lu + adv

    def _rhs_field(self, beta, f_qp):
        vals = fespace.field_values(self.su, beta)
        if f_qp is not None:
            vals = vals + f_qp
        return vals

    def forcing_at_quadrature(self, fn, t):
        """Sample a forcing callback fn(x, y, t) -> (f1, f2) at quad points."""
        x, y = self.xq[..., 0], self.xq[..., 1]
        f1, f2 = fn(x, y, t)
        out = np.empty(self.xq.shape)
        out[..., 0] = f1
        out[..., 1] = f2
        return out

    # -- Galerkin core -------------------------------------------------------

    def _static_triplets(self):
        """u-independent Galerkin pieces, assembled once per space pair:
        mass/stiffness triplets (shared pattern), pressure-coupling and
        zero-mean triplets, and the velocity mass matrix for rhs products."""
        if self._static is not None:
            return self._static
        W = self.W
        n = self.n_u + self.n_p + 1
        el_m = np.einsum('cq,iq,jq->cij', W, self.Vu, self.Vu)
        el_k = np.einsum('cq,ciqe,cjqe->cij', W, self.Gu, self.Gu)
        rows, cols = [], []
        for m in range(2):
            rows.append(np.broadcast_to(self.udofs[m][:, :, None], el_m.shape))
            cols.append(np.broadcast_to(self.udofs[m][:, None, :], el_m.shape))
        g_rows = np.concatenate([r.ravel() for r in rows])
        g_cols = np.concatenate([c.ravel() for c in cols])
        m_vals = np.concatenate([el_m.ravel()] * 2)
        k_vals = np.concatenate([el_k.ravel()] * 2)
        prows, pcols_, pvals = [], [], []
        for j in range(2):
            el_up = -np.einsum('cq,ciq,mq->cim', W, self.Gu[..., j], self.Vp)
            r = np.broadcast_to(self.udofs[j][:, :, None], el_up.shape)
            c = np.broadcast_to(self.pdofs[:, None, :], el_up.shape)
            prows += [r.ravel(), c.ravel()]
            pcols_ += [c.ravel(), r.ravel()]
            pvals += [el_up.ravel(), -el_up.ravel()]
        wm = np.einsum('cq,mq->cm', W, self.Vp)
        wvec = np.bincount(self.sp.cell_dofs.ravel(), weights=wm.ravel(),
                           minlength=self.n_p)
        pc = self.n_u + np.arange(self.n_p)
        last = np.full(self.n_p, n - 1)
        prows += [last, pc]
        pcols_ += [pc, last]
        pvals += [wvec, wvec]
        p_rows = np.concatenate(prows)
        p_cols = np.concatenate(pcols_)
        p_vals = np.concatenate(pvals)
        mass = sparse.csr_matrix((m_vals, (g_rows, g_cols)), shape=(n, n))
        self._static = (g_rows, g_cols, m_vals, k_vals,
                        p_rows, p_cols, p_vals, mass)
        return self._static

    def assemble_galerkin(self, uhat, beta, alpha, nu, f_qp=None):
        """Shared Galerkin system of one time level: alpha-weighted mass,
        stiffness, convection, pressure coupling, zero-mean multiplier, and
        the known time-level rhs.  The discrete time derivative is
        alpha*u^{n+1} - beta (BDF2: alpha = 3/(2 dt); the backward-Euler
        start uses alpha = 1/dt)."""
        if len(beta) != self.n_u or len(uhat) != self.n_u:
            raise AssemblyError("velocity vector does not match the space")
        sys = self.new_system()
        g_rows, g_cols, m_vals, k_vals, p_rows, p_cols, p_vals, mass = \
            self._static_triplets()
        sys.add(g_rows, g_cols, alpha * m_vals + nu * k_vals)
        sys.add(p_rows, p_cols, p_vals)
        uh = fespace.field_values(self.su, uhat)
        adv = self._advection(uh)
        el = np.einsum('cq,iq,cjq->cij', self.W, self.Vu, adv)
        for m in range(2):
            sys.add_block(el, self.udofs[m], self.udofs[m])
        sys.rhs[:self.n_u] += (mass @ np.concatenate(
            [beta, np.zeros(self.n_p + 1)]))[:self.n_u]
        if f_qp is not None:
            for j in range(2):
                b = np.einsum('cq,iq,cq->ci', self.W, self.Vu, f_qp[..., j])
                sys.rhs += np.bincount(self.udofs[j].ravel(), weights=b.ravel(),
                                       minlength=sys.n)
        return sys

    # -- residual-based stabilization -----------------------------------------

    def add_supg_pspg_graddiv(self, sys, method, uhat, beta, alpha, tau, nu,
                              f_qp=None):
        """Streamline/pressure residual stabilization plus grad-div.

        For the pspg method the (uhat.grad)v test part is omitted and the
        pressure test term is always active.
        """
        uh = fespace.field_values(self.su, uhat)
        adv = self._advection(uh)
        lop = self._trial_residual_op(adv, alpha, nu)
        Wm = self.W * tau.tau_m[:, None]
        rhsf = self._rhs_field(beta, f_qp)
        C = method.pressure_switch
        if method.kind != "pspg":
            el = np.einsum('cq,ciq,ckq->cik', Wm, adv, lop)
            for j in range(2):
                sys.add_block(el, self.udofs[j], self.udofs[j])
                el_up = np.einsum('cq,ciq,cmq->cim', Wm, adv, self.Gp[..., j])
                sys.add_block(el_up, self.udofs[j], self.pdofs)
                b = np.einsum('cq,ciq,cq->ci', Wm, adv, rhsf[..., j])
                sys.rhs += np.bincount(self.udofs[j].ravel(), weights=b.ravel(),
                                       minlength=sys.n)
        if C != 0.0:
            for l in range(2):
                el_pu = C * np.einsum('cq,ciq,ckq->cik', Wm, self.Gp[..., l], lop)
                sys.add_block(el_pu, self.pdofs, self.udofs[l])
            el_pp = C * np.einsum('cq,ciqe,cmqe->cim', Wm, self.Gp, self.Gp)
            sys.add_block(el_pp, self.pdofs, self.pdofs)
            b = C * np.einsum('cq,ciqe,cqe->ci', Wm, self.Gp, rhsf)
            sys.rhs += np.bincount(self.pdofs.ravel(), weights=b.ravel(),
                                   minlength=sys.n)
        self._add_graddiv(sys, tau)
        return sys

    def _add_graddiv(self, sys, tau):
        Wc = self.W * tau.tau_c[:, None]
        for j in range(2):
            for l in range(2):
                el = np.einsum('cq,ciq,ckq->cik', Wc, self.Gu[..., j],
                               self.Gu[..., l])
                sys.add_block(el, self.udofs[j], self.udofs[l])

    def strong_residual_extrapolated(self, uhat, phat, u_n, u_nm1, tau, dt, nu,
                                     f_qp=None):
        """tau_m-weighted momentum residual of the extrapolated fields,
        evaluated at quadrature points; the known factor of the subgrid term."""
        uh = fespace.field_values(self.su, uhat)
        gu = fespace.field_gradients(self.su, uhat)
        lap = np.trace(fespace.field_hessians(self.su, uhat), axis1=-2, axis2=-1)
        conv = np.einsum('cqe,cqme->cqm', uh, gu)
        gp = fespace.field_gradients(self.sp, phat)[:, :, 0, :]
        dhat = fespace.field_values(
            self.su, (3.0 * uhat - 4.0 * u_n + u_nm1) / (2.0 * dt))
        r = -dhat + nu * lap - conv - gp
        if f_qp is not None:
            r = r + f_qp
        return tau.tau_m[:, None, None] * r

    def add_rbvms_terms(self, sys, method, uhat, phat, u_n, u_nm1, beta,
                        alpha, tau, dt, nu, f_qp=None):
        """Full residual-based stabilization: streamline/pressure term,
        second cross-stress term, subgrid term, grad-div."""
        if phat is None:
            raise AssemblyError("rbvms needs pressure history (phat); "
                                "initialize with the steady Stokes solve")
        self.add_supg_pspg_graddiv(sys, method, uhat, beta, alpha, tau, nu,
                                   f_qp)
        if not method.include_cross_subgrid:
            return sys
        uh = fespace.field_values(self.su, uhat)
        adv = self._advection(uh)
        lop = self._trial_residual_op(adv, alpha, nu)
        Wm = self.W * tau.tau_m[:, None]
        rhsf = self._rhs_field(beta, f_qp)
        rhat = self.strong_residual_extrapolated(uhat, phat, u_n, u_nm1, tau,
                                                 dt, nu, f_qp)
        for what in (uh, rhat):
            for j in range(2):
                wj = what[..., j]
                for l in range(2):
                    el = np.einsum('cq,cq,ciq,ckq->cik', Wm, wj,
                                   self.Gu[..., l], lop)
                    sys.add_block(el, self.udofs[j], self.udofs[l])
                el_up = np.einsum('cq,cq,ciqe,cmqe->cim', Wm, wj, self.Gu,
                                  self.Gp)
                sys.add_block(el_up, self.udofs[j], self.pdofs)
                b = np.einsum('cq,cq,ciqe,cqe->ci', Wm, wj, self.Gu, rhsf)
                sys.rhs += np.bincount(self.udofs[j].ravel(), weights=b.ravel(),
                                       minlength=sys.n)
        return sys

    # -- local projection stabilization ---------------------------------------

    @property
    def projection_qq(self):
        if self._pq is None:
            self._pq = lps.projection_matrix(self.su.quad)
        return self._pq

    def _vertex_tabulation(self):
        if self._vert_tab is None:
            vref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
            vu, gu_ref, _ = fespace.ref_basis(self.su.family, vref)
            gu = np.einsum('iad,cde->ciae', gu_ref, self.mesh.invA)
            vp, gp_ref, _ = fespace.ref_basis(self.sp.family, vref)
            gp = np.einsum('iad,cde->ciae', gp_ref, self.mesh.invA)
            p1v = fespace.ref_basis("P1", self.su.quad.points)[0]
            self._vert_tab = (vu, gu, gp, p1v)
        return self._vert_tab

    def _vertex_owner_map(self):
        if self._owners is None:
            self._owners = lps.vertex_owners(self.su)
        return self._owners

    def _interp_fluct_operator(self, space, samples, vert_samples):
        """Sparse map from scalar DOFs of ``space`` to fluctuated samples at
        quad points: samples (nc, nloc, nq) of a per-dof quantity minus the P1
        field of its owner-cell vertex samples (nc, nloc, 3)."""
        nc, nloc, nq = samples.shape
        owner, slot = self._vertex_owner_map()
        p1v = self._vertex_tabulation()[3]                      # (3, nq)
        gvert = space.cell_dofs[:, :3]
        dofs = space.cell_dofs
        row_id = (np.arange(nc)[:, None] * nq + np.arange(nq)[None, :])
        rows_d = np.broadcast_to(row_id[:, None, :], samples.shape)
        cols_d = np.broadcast_to(dofs[:, :, None], samples.shape)
        # per-glued-vertex samples of each owner-cell dof: (nvg, nloc)
        vg = vert_samples[owner, :, slot]
        vals_v = -np.einsum('aq,cai->caiq', p1v, vg[gvert])
        rows_v = np.broadcast_to(row_id[:, None, None, :], vals_v.shape)
        cols_v = np.broadcast_to(dofs[owner[gvert]][:, :, :, None], vals_v.shape)
        rows = np.concatenate([rows_d.ravel(), rows_v.ravel()])
        cols = np.concatenate([cols_d.ravel(), cols_v.ravel()])
        vals = np.concatenate([samples.ravel(), vals_v.ravel()])
        return sparse.csr_matrix((vals, (rows, cols)),
                                 shape=(nc * nq, space.ndof_scalar))

    def add_lps_terms(self, sys, method, uhat, tau):
        """Projection-stabilized convective and pressure-gradient terms plus
        grad-div, with the variant chosen by the method tag."""
        if method.kind == "lps1" and self.su.family != "P2Bubble":
            raise AssemblyError("one-level projection stabilization needs the "
                                "bubble-enriched velocity space")
        uh = fespace.field_values(self.su, uhat)
        adv = self._advection(uh)
        Wm = self.W * tau.tau_m[:, None]
        C = method.pressure_switch
        if method.kind == "lps1":
            pq = self.projection_qq
            advf = adv - np.einsum('qr,cir->ciq', pq, adv)
            el = np.einsum('cq,ciq,ckq->cik', Wm, advf, advf)
            for m in range(2):
                sys.add_block(el, self.udofs[m], self.udofs[m])
            if C != 0.0:
                el_pp = 0.0
                for l in range(2):
                    g = self.Gp[..., l]
                    gf = g - np.einsum('qr,cir->ciq', pq, g)
                    el_pp = el_pp + np.einsum('cq,ciq,ckq->cik', Wm, gf, gf)
                sys.add_block(C * el_pp, self.pdofs, self.pdofs)
        else:
            vu_vert, gu_vert, gp_vert, _ = self._vertex_tabulation()
            cu = np.stack([uhat[m * self.nds:(m + 1) * self.nds][self.su.cell_dofs]
                           for m in range(2)], axis=-1)
            uh_vert = np.einsum('cim,ia->cam', cu, vu_vert)
            adv_vert = np.einsum('cae,ciae->cia', uh_vert, gu_vert)
            s_u = self._interp_fluct_operator(self.su, adv, adv_vert)
            d = sparse.diags(Wm.ravel())
            m_uu = (s_u.T @ d @ s_u).tocoo()
            for m in range(2):
                off = m * self.nds
                sys.add(m_uu.row + off, m_uu.col + off, m_uu.data)
            if C != 0.0:
                for l in range(2):
                    s_p = self._interp_fluct_operator(
                        self.sp,
                        np.ascontiguousarray(self.Gp[..., l]),
                        np.ascontiguousarray(gp_vert[..., l]))
                    m_pp = (C * (s_p.T @ d @ s_p)).tocoo()
                    sys.add(m_pp.row + self.n_u, m_pp.col + self.n_u, m_pp.data)
        self._add_graddiv(sys, tau)
        return sys

    # -- constraints and drivers ----------------------------------------------

    def apply_constraints(self, sys):
        """Pin the slip DOFs (identity rows/columns, zero rhs); the periodic
        identification already lives in the numbering and the zero-mean row is
        part of the Galerkin system."""
        keep = np.ones(sys.n)
        fixed = np.array([d for d, _ in self.su.constrained_dofs], dtype=np.int64)
        keep[fixed] = 0.0
        a = sys.matrix.copy()
        a.data *= np.repeat(keep, np.diff(a.indptr))   # zero rows
        a.data *= keep[a.indices]                      # zero columns
        a = a + sparse.csr_matrix(
            (np.ones(len(fixed)), (fixed, fixed)), shape=(sys.n, sys.n))
        sys.set_matrix(a.tocsr())
        sys.rhs = sys.rhs * keep
        sys.constrained = True
        return sys

    def assemble_system(self, method, uhat, beta, tau, dt, nu, f_qp=None,
                        phat=None, u_n=None, u_nm1=None, alpha=None):
        """Assemble the full constrained system of one step of a method."""
        if alpha is None:
            alpha = 1.5 / dt
        sys = self.assemble_galerkin(uhat, beta, alpha, nu, f_qp)
        if method.kind in ("supg", "pspg"):
            self.add_supg_pspg_graddiv(sys, method, uhat, beta, alpha, tau,
                                       nu, f_qp)
        elif method.kind == "rbvms":
            self.add_rbvms_terms(sys, method, uhat, phat, u_n, u_nm1, beta,
                                 alpha, tau, dt, nu, f_qp)
        else:
            self.add_lps_terms(sys, method, uhat, tau)
        return self.apply_constraints(sys)

    def assemble_stokes_init(self, method, u0, nu, tau):
        """Steady Stokes system for the starting pressure, with grad-div and,
        for equal-order pairs, a consistent pressure-gradient stabilization;
        the convective term of u0 drives the rhs."""
        sys = self.new_system()
        W = self.W
        el = nu * np.einsum('cq,ciqe,cjqe->cij', W, self.Gu, self.Gu)
        for m in range(2):
            sys.add_block(el, self.udofs[m], self.udofs[m])
        for j in range(2):
            el_up = -np.einsum('cq,ciq,mq->cim', W, self.Gu[..., j], self.Vp)
            sys.add_block(el_up, self.udofs[j], self.pdofs)
            sys.add_block(-el_up.transpose(0, 2, 1), self.pdofs, self.udofs[j])
        wm = np.einsum('cq,mq->cm', W, self.Vp)
        wvec = np.bincount(self.sp.cell_dofs.ravel(), weights=wm.ravel(),
                           minlength=self.n_p)
        pcols = self.n_u + np.arange(self.n_p)
        last = np.full(self.n_p, sys.n - 1)
        sys.add(last, pcols, wvec)
        sys.add(pcols, last, wvec)
        self._add_graddiv(sys, tau)
        u0v = fespace.field_values(self.su, u0)
        gu0 = fespace.field_gradients(self.su, u0)
        ftil = -np.einsum('cqe,cqme->cqm', u0v, gu0)
        for j in range(2):
            b = np.einsum('cq,iq,cq->ci', W, self.Vu, ftil[..., j])
            sys.rhs += np.bincount(self.udofs[j].ravel(), weights=b.ravel(),
                                   minlength=sys.n)
        if method.pressure_switch != 0.0:
            Wm = W * tau.tau_m[:, None]
            el_pp = np.einsum('cq,ciqe,cmqe->cim', Wm, self.Gp, self.Gp)
            sys.add_block(el_pp, self.pdofs, self.pdofs)
            for l in range(2):
                el_pu = -nu * np.einsum('cq,ciq,ckq->cik', Wm, self.Gp[..., l],
                                        self.Lu)
                sys.add_block(el_pu, self.pdofs, self.udofs[l])
            b = np.einsum('cq,ciqe,cqe->ci', Wm, self.Gp, ftil)
            sys.rhs += np.bincount(self.pdofs.ravel(), weights=b.ravel(),
                                   minlength=sys.n)
        return self.apply_constraints(sys)
