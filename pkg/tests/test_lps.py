import numpy as np
import pytest

from vmsbench import fespace, lps, mesh as mm


@pytest.fixture(scope="module")
def spaces():
    m = mm.build_uniform(2)
    p2 = fespace.build_space(m, "P2", 1)
    p2b = fespace.build_space(m, "P2Bubble", 1)
    p1 = fespace.build_space(m, "P1", 1)
    p1dc = fespace.build_space(m, "P1dc", 1)
    return m, p2, p2b, p1, p1dc


def _sample(space, fn):
    return fespace.field_values(space, fespace.interpolate_function(space, fn))


def test_local_projection_reproduces_linears(spaces):
    m = spaces[0]
    quad = fespace.triangle_quadrature()
    # a field linear on the cell: build samples from the P1 basis directly
    phi = fespace.ref_basis("P1", quad.points)[0]
    samples = 0.5 * phi[0] - 2.0 * phi[1] + 3.0 * phi[2]
    c = lps.local_l2_project(m, samples, cell=3)
    assert np.allclose(c, [0.5, -2.0, 3.0], atol=1e-12)
    const = np.full(len(quad.weights), 7.5)
    assert np.allclose(lps.local_l2_project(m, const, 0), 7.5, atol=1e-12)


def test_local_projection_matches_dense_solve(spaces):
    # x^2 on the reference cell of a physical cell: compare against an
    # explicitly built 3x3 system
    m = spaces[0]
    quad = fespace.triangle_quadrature()
    samples = quad.points[:, 0] ** 2
    got = lps.local_l2_project(m, samples, 0)
    phi = fespace.ref_basis("P1", quad.points)[0]
    mat = np.zeros((3, 3))
    rhs = np.zeros(3)
    for q, w in enumerate(quad.weights):
        for i in range(3):
            rhs[i] += w * phi[i, q] * samples[q]
            for j in range(3):
                mat[i, j] += w * phi[i, q] * phi[j, q]
    assert np.allclose(got, np.linalg.solve(mat, rhs), atol=1e-13)


def test_fluctuation_l2_variant(spaces):
    m, p2, p2b, p1, p1dc = spaces
    # exactness on linears needs a globally linear interpolant (periodicity
    # off: x is not periodic)
    p2b_np = fespace.build_space(m, "P2Bubble", 1, periodic_in_x=False)
    p1dc_np = fespace.build_space(m, "P1dc", 1, periodic_in_x=False)
    op_np = lps.FluctuationOperator("local_l2_onto_P1dc", p2b_np, p1dc_np)
    lin = fespace.interpolate_function(p2b_np, lambda x, y: 1.0 + 2.0 * x - y)
    out = lps.fluctuation_apply(op_np, lin)
    assert np.abs(out).max() < 1e-12
    # idempotency on an arbitrary field, sample level
    op = lps.FluctuationOperator("local_l2_onto_P1dc", p2b, p1dc)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(p2b.ndof)
    k1 = op.apply_to_field(v)
    k2 = op.apply_to_samples(k1)
    assert np.abs(k2 - k1).max() < 1e-12


def test_fluctuation_l2_orthogonality(spaces):
    # on every cell, the fluctuation is L2-orthogonal to P1(K)
    m, p2, p2b, p1, p1dc = spaces
    op = lps.FluctuationOperator("local_l2_onto_P1dc", p2b, p1dc)
    rng = np.random.default_rng(11)
    v = rng.standard_normal(p2b.ndof)
    kv = op.apply_to_field(v)[:, :, 0]
    quad = fespace.triangle_quadrature()
    phi = fespace.ref_basis("P1", quad.points)[0]
    moments = np.einsum('q,iq,cq->ci', quad.weights, phi, kv) * m.det[:, None]
    assert np.abs(moments).max() < 1e-12


def test_fluctuation_l2_pointwise_example(spaces):
    m = spaces[0]
    quad = fespace.triangle_quadrature()
    samples = quad.points[:, 0] ** 2
    p1c = lps.local_l2_project(m, samples, 0)
    phi = fespace.ref_basis("P1", quad.points)[0]
    op = lps.FluctuationOperator("local_l2_onto_P1dc", spaces[2], spaces[4])
    fluct = op.apply_to_samples(np.broadcast_to(samples, (m.ncells, len(samples))))
    want = samples - p1c @ phi
    assert np.allclose(fluct[0], want, atol=1e-13)


def test_fluctuation_sz_variant(spaces):
    m, p2, p2b, p1, p1dc = spaces
    op = lps.FluctuationOperator("scott_zhang_onto_P1", p2, p1)
    # continuous P1 input -> zero
    lin = fespace.interpolate_function(p2, lambda x, y: 2.0 * y - 0.25)
    assert np.abs(op.apply_to_field(lin)).max() < 1e-13
    # linearity
    rng = np.random.default_rng(5)
    a = rng.standard_normal(p2.ndof)
    b = rng.standard_normal(p2.ndof)
    lhs = op.apply_to_field(2.5 * a + b)
    rhs = 2.5 * op.apply_to_field(a) + op.apply_to_field(b)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_variant_mismatch_errors(spaces):
    m, p2, p2b, p1, p1dc = spaces
    op = lps.FluctuationOperator("scott_zhang_onto_P1", p2, p1)
    with pytest.raises(lps.LpsError):
        op.apply_to_samples(np.zeros((m.ncells, 12)))
    with pytest.raises(lps.LpsError):
        lps.FluctuationOperator("bogus", p2, p1)
    with pytest.raises(lps.LpsError):
        lps.fluctuation_apply(op, np.zeros(p2.ndof + 1))


def test_vertex_owners_deterministic(spaces):
    m, p2 = spaces[0], spaces[1]
    owner, slot = lps.vertex_owners(p2)
    owner2, slot2 = lps.vertex_owners(p2)
    assert np.array_equal(owner, owner2) and np.array_equal(slot, slot2)
    gv = p2.cell_dofs[:, :3]
    for g in range(len(owner)):
        cells = np.nonzero((gv == g).any(axis=1))[0]
        assert owner[g] == cells.min()
        assert gv[owner[g], slot[g]] == g
