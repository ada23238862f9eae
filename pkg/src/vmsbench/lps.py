"""Fluctuation operators k_h = I - pi_h for the projection-stabilized methods.

Two variants of pi_h:

* ``local_l2_onto_P1dc`` -- cell-by-cell L2 projection onto broken linears;
  acts directly on quadrature-sampled quantities, no global solve.
* ``scott_zhang_onto_P1`` -- vertex-value interpolation onto continuous P1;
  for quantities with discontinuous gradients (streamline derivatives of FE
  fields) the vertex sample is taken in a deterministic "owner" cell, the
  lowest-index cell containing the vertex.
"""

import numpy as np

from . import fespace
from .fespace import ref_basis, triangle_quadrature

__all__ = ["FluctuationOperator", "local_l2_project", "fluctuation_apply",
           "projection_matrix", "vertex_owners"]


class LpsError(Exception):
    pass


def projection_matrix(quad=None):
    """Matrix P with (pi_h g)(x_q) = sum_r P[q,r] g(x_r) for the local L2
    projection onto P1 of one cell; identical for every affine cell."""
    quad = quad or triangle_quadrature()
    phi = ref_basis("P1", quad.points)[0]               # (3, nq)
    w = quad.weights
    m = np.einsum('q,iq,jq->ij', w, phi, phi)
    rhs = phi * w                                       # (3, nq)
    return phi.T @ np.linalg.solve(m, rhs)              # (nq, nq)


def local_l2_project(mesh, samples, cell, quad=None):
    """P1 coefficients (per component) of the local L2 fit on one cell.

    ``samples`` has shape (nq,) or (nq, d); the returned coefficients are
    values at the cell vertices, shape (3,) or (3, d).  Solves the 3x3 local
    mass system explicitly.
    """
    quad = quad or triangle_quadrature()
    phi = ref_basis("P1", quad.points)[0]
    det = mesh.det[cell]
    m = det * np.einsum('q,iq,jq->ij', quad.weights, phi, phi)
    if abs(np.linalg.det(m)) < 1e-300:
        raise LpsError(f"singular local mass matrix on cell {cell}")
    b = det * np.einsum('q,iq,q...->i...', quad.weights, phi, np.asarray(samples))
    return np.linalg.solve(m, b)


def vertex_owners(space):
    """Owner cell and local vertex slot for every glued vertex of a P1/P2-type
    space (lowest adjacent cell index, deterministic)."""
    mesh = space.mesh
    gv = space.cell_dofs[:, :3]                 # glued vertex ids per cell
    nvg = int(gv.max()) + 1
    cell_ids = np.arange(mesh.ncells)
    owner = np.full(nvg, np.iinfo(np.int64).max, dtype=np.int64)
    for b in range(3):
        np.minimum.at(owner, gv[:, b], cell_ids)
    slot = np.zeros(nvg, dtype=np.int64)
    for b in (2, 1, 0):                         # smallest slot wins
        sel = owner[gv[:, b]] == cell_ids
        slot[gv[sel, b]] = b
    return owner, slot


class FluctuationOperator:
    """k_h = I - pi_h acting componentwise on fields or sampled quantities."""

    def __init__(self, variant, source_space, target_space):
        if variant not in ("local_l2_onto_P1dc", "scott_zhang_onto_P1"):
            raise LpsError(f"unknown variant {variant!r}")
        if source_space.mesh is not target_space.mesh:
            raise LpsError("source and target spaces live on different meshes")
        self.variant = variant
        self.source = source_space
        self.target = target_space
        self._pq = projection_matrix(source_space.quad)

    def project_samples(self, samples):
        """pi_h of quadrature samples (nc, nq, ...); local-L2 variant only."""
        if self.variant != "local_l2_onto_P1dc":
            raise LpsError("sampled-quantity projection is the L2 variant's job")
        return np.einsum('qr,cr...->cq...', self._pq, samples)

    def apply_to_samples(self, samples):
        """k_h of quadrature samples (L2 variant)."""
        return samples - self.project_samples(samples)

    def apply_to_field(self, coeffs):
        """k_h of an FE field of the source space, sampled at quadrature
        points; returns (nc, nq, components)."""
        vals = fespace.field_values(self.source, coeffs)
        if self.variant == "local_l2_onto_P1dc":
            return vals - np.einsum('qr,crm->cqm', self._pq, vals)
        p1c = fespace.scott_zhang_interpolate(self.source, self.target, coeffs)
        p1v = fespace.field_values(self.target, p1c)
        return vals - p1v


def fluctuation_apply(op, field):
    """Apply k_h.  ``field`` is an FE coefficient vector of the source space,
    or (L2 variant only) an (nc, nq, ...) array of quadrature samples."""
    arr = np.asarray(field)
    if arr.ndim >= 2:
        return op.apply_to_samples(arr)
    if arr.shape[0] != op.source.ndof:
        raise LpsError("coefficient vector does not match the source space")
    return op.apply_to_field(arr)
