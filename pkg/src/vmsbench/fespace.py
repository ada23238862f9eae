"""Finite element spaces on triangles: P1, P2, bubble-enriched P2, broken P1.

Provides reference-element basis evaluation up to second derivatives,
a degree-6 triangle quadrature, global DOF numbering with periodic
identification in x, nodal interpolation, and the vertex-value interpolation
onto P1 used by the interpolation-based projection stabilization.

Scalar DOFs are numbered glued-vertices first, then glued edges, then cell
bubbles; vector fields are stored blocked by component,
``[all u1 dofs, all u2 dofs]``.
"""

import numpy as np

__all__ = [
    "Quadrature", "triangle_quadrature", "segment_gauss", "FeSpace",
    "build_space", "eval_basis", "interpolate_function",
    "scott_zhang_interpolate", "field_values", "field_gradients",
    "field_hessians",
]


class FeSpaceError(Exception):
    pass


# ---------------------------------------------------------------------------
# quadrature

class Quadrature:
    """Reference-triangle rule: points in (x, y) coords, weights sum to 1/2."""

    def __init__(self, points, weights, degree):
        self.points = points
        self.weights = weights
        self.degree = degree


def triangle_quadrature(degree=6):
    """Degree-6 exact 12-point rule on the reference triangle (Dunavant)."""
    if degree > 6:
        raise FeSpaceError("only rules up to degree 6 are shipped")
    a1, w1 = 0.873821971016996, 0.050844906370207
    a2, w2 = 0.501426509658179, 0.116786275726379
    a3, b3, w3 = 0.636502499121399, 0.310352451033785, 0.082851075618374
    bary = []
    wts = []
    for a, w in ((a1, w1), (a2, w2)):
        b = 0.5 * (1.0 - a)
        bary += [(a, b, b), (b, a, b), (b, b, a)]
        wts += [w] * 3
    c3 = 1.0 - a3 - b3
    for p in ((a3, b3, c3), (a3, c3, b3), (b3, a3, c3),
              (b3, c3, a3), (c3, a3, b3), (c3, b3, a3)):
        bary.append(p)
        wts.append(w3)
    bary = np.array(bary)
    pts = bary[:, 1:3]                      # x = l1, y = l2
    return Quadrature(pts, 0.5 * np.array(wts), 6)


def segment_gauss(npts=4):
    """Gauss-Legendre points/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# reference bases

_GL = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])  # grad of l0, l1, l2


def _bary(pts):
    x, y = pts[:, 0], pts[:, 1]
    return np.stack([1.0 - x - y, x, y])


def _p1_ref(pts):
    lam = _bary(pts)
    k = pts.shape[0]
    val = lam
    grad = np.broadcast_to(_GL[:, None, :], (3, k, 2)).copy()
    hess = np.zeros((3, k, 2, 2))
    return val, grad, hess


def _outer_sym(a, b):
    return np.outer(a, b) + np.outer(b, a)


def _p2_ref(pts):
    lam = _bary(pts)
    k = pts.shape[0]
    val = np.empty((6, k))
    grad = np.empty((6, k, 2))
    hess = np.empty((6, k, 2, 2))
    for i in range(3):
        val[i] = lam[i] * (2.0 * lam[i] - 1.0)
        grad[i] = (4.0 * lam[i] - 1.0)[:, None] * _GL[i]
        hess[i] = 4.0 * np.outer(_GL[i], _GL[i])
    for m, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
        val[3 + m] = 4.0 * lam[i] * lam[j]
        grad[3 + m] = 4.0 * (lam[i][:, None] * _GL[j] + lam[j][:, None] * _GL[i])
        hess[3 + m] = 4.0 * _outer_sym(_GL[i], _GL[j])
    return val, grad, hess


def _p2bubble_ref(pts):
    val2, grad2, hess2 = _p2_ref(pts)
    lam = _bary(pts)
    k = pts.shape[0]
    b = 27.0 * lam[0] * lam[1] * lam[2]
    gb = 27.0 * (lam[1] * lam[2])[:, None] * _GL[0] \
        + 27.0 * (lam[0] * lam[2])[:, None] * _GL[1] \
        + 27.0 * (lam[0] * lam[1])[:, None] * _GL[2]
    hb = 27.0 * (lam[2][:, None, None] * _outer_sym(_GL[0], _GL[1])
                 + lam[1][:, None, None] * _outer_sym(_GL[0], _GL[2])
                 + lam[0][:, None, None] * _outer_sym(_GL[1], _GL[2]))
    val = np.concatenate([val2, b[None]])
    grad = np.concatenate([grad2, gb[None]])
    hess = np.concatenate([hess2, hb.reshape(1, k, 2, 2)])
    return val, grad, hess


_FAMILIES = {
    "P1": dict(nloc=3, degree=1, continuous=True, ref=_p1_ref),
    "P2": dict(nloc=6, degree=2, continuous=True, ref=_p2_ref),
    "P2Bubble": dict(nloc=7, degree=3, continuous=True, ref=_p2bubble_ref),
    "P1dc": dict(nloc=3, degree=1, continuous=False, ref=_p1_ref),
}


def ref_basis(family, pts):
    """Reference values/gradients/Hessians, shapes (nloc,k), (nloc,k,2), (nloc,k,2,2)."""
    try:
        fam = _FAMILIES[family]
    except KeyError:
        raise FeSpaceError(f"unknown family {family!r}") from None
    return fam["ref"](np.atleast_2d(pts))


# ---------------------------------------------------------------------------
# DOF numbering

def _glue(nitems, pairs):
    """Representative map after identifying pairs (src -> dst); returns
    compressed ids (nitems,) and the raw indices of the representatives."""
    rep = np.arange(nitems)
    if len(pairs):
        rep[pairs[:, 0]] = pairs[:, 1]
    uniq, inv = np.unique(rep, return_inverse=True)
    return inv, uniq


class FeSpace:
    """Scalar or vector FE space on a mesh.

    ``cell_dofs`` holds the scalar (component) numbering; vector DOFs of
    component m live at ``m*ndof_scalar + scalar_dof``.  ``constrained_dofs``
    lists the (global dof, kind) pairs pinned by the slip condition.
    """

    def __init__(self, mesh, family, components, periodic_in_x=True):
        if family not in _FAMILIES:
            raise FeSpaceError(f"unknown family {family!r}")
        self.mesh = mesh
        self.family = family
        self.components = components
        self.periodic_in_x = periodic_in_x
        self.nloc = _FAMILIES[family]["nloc"]
        self.degree = _FAMILIES[family]["degree"]
        self.continuous = _FAMILIES[family]["continuous"]
        self._number_dofs()
        self._mark_slip()
        self._tab = None

    def _number_dofs(self):
        mesh = self.mesh
        vp = mesh.periodic_vertices if self.periodic_in_x else np.empty((0, 2), int)
        ep = mesh.periodic_edges if self.periodic_in_x else np.empty((0, 2), int)
        if self.family == "P1dc":
            nc = mesh.ncells
            self.cell_dofs = np.arange(3 * nc).reshape(nc, 3)
            self.ndof_scalar = 3 * nc
            self.node_coords = mesh.cell_verts.reshape(-1, 2)
        else:
            gv, vrep = _glue(mesh.nverts, vp)
            nvg = len(vrep)
            parts = [gv[mesh.cells]]
            coords = [mesh.vertices[vrep]]
            ndof = nvg
            if self.family in ("P2", "P2Bubble"):
                ge, erep = _glue(len(mesh.edges), ep)
                parts.append(nvg + ge[mesh.cell_edges])
                mids = 0.5 * (mesh.vertices[mesh.edges[erep, 0]]
                              + mesh.vertices[mesh.edges[erep, 1]])
                coords.append(mids)
                ndof += len(erep)
            if self.family == "P2Bubble":
                parts.append(ndof + np.arange(mesh.ncells)[:, None])
                coords.append(mesh.cell_verts.mean(axis=1))
                ndof += mesh.ncells
                self.n_bubble_offset = ndof - mesh.ncells
            self.cell_dofs = np.hstack(parts)
            self.ndof_scalar = ndof
            self.node_coords = np.vstack(coords)
        self.ndof = self.components * self.ndof_scalar

    def _mark_slip(self):
        self.constrained_dofs = []
        if self.components != 2:
            return
        y = self.node_coords[:, 1]
        if self.family == "P2Bubble":
            y = y[:self.n_bubble_offset]        # bubbles vanish on cell boundaries
        wall = np.flatnonzero((y == 0.0) | (y == 1.0))
        self.slip_scalar_dofs = wall
        self.constrained_dofs = [(self.ndof_scalar + d, "slip") for d in wall]

    # -- tabulation at the standard quadrature ------------------------------

    @property
    def quad(self):
        return triangle_quadrature()

    def tabulation(self):
        """Cached basis data at the standard rule: values (nloc, nq), physical
        gradients (nc, nloc, nq, 2), Hessians (nc, nloc, nq, 2, 2), Laplacians."""
        if self._tab is None:
            q = self.quad
            val, g_ref, h_ref = ref_basis(self.family, q.points)
            invA = self.mesh.invA
            grad = np.einsum('iqd,cde->ciqe', g_ref, invA)
            hess = np.einsum('iqdg,cde,cgf->ciqef', h_ref, invA, invA)
            lap = hess[..., 0, 0] + hess[..., 1, 1]
            self._tab = (val, grad, hess, lap)
        return self._tab

    def basis_at(self, cells, ref_pts, nderiv=1):
        """Physical basis data at per-cell reference points.

        ``cells`` (k,) and ``ref_pts`` (k, 2) are paired.  Returns values
        (nloc, k) and, if requested, gradients (k, nloc, 2) and Hessians
        (k, nloc, 2, 2).
        """
        val, g_ref, h_ref = ref_basis(self.family, ref_pts)
        out = [val]
        invA = self.mesh.invA[cells]
        if nderiv >= 1:
            grad = np.einsum('ikd,kde->kie', g_ref, invA)
            out.append(grad)
        if nderiv >= 2:
            hess = np.einsum('ikdg,kde,kgf->kief', h_ref, invA, invA)
            out.append(hess)
        return tuple(out)


def build_space(mesh, family, components=1, periodic_in_x=True):
    """Construct an FE space; DOF counts follow the glued periodic numbering."""
    return FeSpace(mesh, family, components, periodic_in_x)


def eval_basis(space, cell, ref_points):
    """Basis values, physical gradients and physical second derivatives of one
    cell at reference points (k, 2).  Shapes (nloc, k), (nloc, k, 2),
    (nloc, k, 2, 2)."""
    pts = np.atleast_2d(ref_points)
    val, g_ref, h_ref = ref_basis(space.family, pts)
    invA = space.mesh.invA[cell]
    grad = np.einsum('iqd,de->iqe', g_ref, invA)
    hess = np.einsum('iqdg,de,gf->iqef', h_ref, invA, invA)
    return val, grad, hess


# ---------------------------------------------------------------------------
# interpolation

def interpolate_function(space, fn):
    """Nodal interpolation of a callable fn(x, y).

    For vector spaces ``fn`` must return a pair (u1, u2) of arrays.  Bubble
    coefficients are hierarchical and set to zero; periodic DOFs take the
    value at the x=0 representative.
    """
    x, y = space.node_coords[:, 0], space.node_coords[:, 1]
    if space.components == 1:
        coeffs = np.asarray(fn(x, y), dtype=float).copy()
    else:
        u1, u2 = fn(x, y)
        coeffs = np.concatenate([np.broadcast_to(u1, x.shape).astype(float),
                                 np.broadcast_to(u2, x.shape).astype(float)])
    if space.family == "P2Bubble":
        nb0 = space.n_bubble_offset
        for m in range(space.components):
            coeffs[m * space.ndof_scalar + nb0:(m + 1) * space.ndof_scalar] = 0.0
    return coeffs


def scott_zhang_interpolate(space_from, space_to, coeffs):
    """Vertex-value interpolation of a continuous FE field onto P1.

    On continuous inputs the local-averaging interpolant reduces to plain
    nodal interpolation, so this is a gather of the vertex DOF block.
    """
    if space_from.mesh is not space_to.mesh:
        raise FeSpaceError("spaces live on different meshes")
    if space_from.components != space_to.components:
        raise FeSpaceError("component count mismatch")
    if space_to.family != "P1" or not space_from.continuous:
        raise FeSpaceError("interpolation goes from a continuous family onto P1")
    nvg = space_to.ndof_scalar
    nds = space_from.ndof_scalar
    out = np.empty(space_to.ndof)
    for m in range(space_from.components):
        out[m * nvg:(m + 1) * nvg] = coeffs[m * nds:m * nds + nvg]
    return out


# ---------------------------------------------------------------------------
# field evaluation at the standard quadrature points

def _per_cell(space, coeffs):
    nds = space.ndof_scalar
    cd = space.cell_dofs
    return np.stack([coeffs[m * nds:(m + 1) * nds][cd]
                     for m in range(space.components)], axis=-1)  # (nc,nloc,m)


def field_values(space, coeffs):
    """Values at quadrature points, shape (ncells, nq, components)."""
    val = space.tabulation()[0]
    return np.einsum('cim,iq->cqm', _per_cell(space, coeffs), val)


def field_gradients(space, coeffs):
    """Gradients at quadrature points, shape (ncells, nq, components, 2)."""
    grad = space.tabulation()[1]
    return np.einsum('cim,ciqe->cqme', _per_cell(space, coeffs), grad)


def field_hessians(space, coeffs):
    """Second derivatives at quadrature points, (ncells, nq, components, 2, 2)."""
    hess = space.tabulation()[2]
    return np.einsum('cim,ciqef->cqmef', _per_cell(space, coeffs), hess)
