import numpy as np
import pytest

from vmsbench import mesh as mm


def test_cell_counts():
    assert mm.build_uniform(0).ncells == 2
    assert mm.build_uniform(1).ncells == 8
    assert mm.build_uniform(5).ncells == 2048


def test_level_guard():
    with pytest.raises(mm.MeshError):
        mm.build_uniform(11)
    with pytest.raises(mm.MeshError):
        mm.build_uniform(-1)


@pytest.mark.parametrize("level", [0, 1, 2, 3, 5])
def test_tiling_and_uniformity(level):
    m = mm.build_uniform(level)
    assert abs(m.areas.sum() - 1.0) < 1e-14
    assert np.all(m.areas > 0)
    h = np.sqrt(2.0) * 2.0 ** -level
    assert np.allclose(m.diameters, h, rtol=1e-14, atol=0)


def test_h_halves_per_refinement():
    hs = [mm.build_uniform(lv).diameters[0] for lv in range(4)]
    for a, b in zip(hs, hs[1:]):
        assert abs(b - a / 2) < 1e-15


def test_table_mesh_sizes():
    assert abs(mm.build_uniform(5).diameters[0] - 4.419e-2) < 5e-6
    assert abs(mm.build_uniform(6).diameters[0] - 2.210e-2) < 5e-6
    assert abs(mm.build_uniform(7).diameters[0] - 1.105e-2) < 5e-6


def test_cell_geometry():
    m0 = mm.build_uniform(0)
    area, diam, verts = mm.cell_geometry(m0, 0)
    assert area == 0.5
    assert abs(diam - np.sqrt(2.0)) < 1e-15
    assert verts.shape == (3, 2)
    m5 = mm.build_uniform(5)
    area5 = mm.cell_geometry(m5, 100)[0]
    assert abs(area5 - 2.0 ** -11) < 1e-18
    with pytest.raises(mm.MeshError):
        mm.cell_geometry(m5, m5.ncells)


def test_periodic_map_is_bijection():
    m = mm.build_uniform(3)
    pv = m.periodic_vertices
    x = m.vertices[:, 0]
    y = m.vertices[:, 1]
    assert np.all(x[pv[:, 0]] == 1.0)
    assert np.all(x[pv[:, 1]] == 0.0)
    assert np.all(y[pv[:, 0]] == y[pv[:, 1]])
    assert len(np.unique(pv[:, 0])) == len(pv)
    assert len(np.unique(pv[:, 1])) == len(pv)
    # every x=1 vertex appears exactly once as a source
    assert len(pv) == m.n + 1
    pe = m.periodic_edges
    assert len(pe) == m.n
    for src, dst in pe:
        vs = m.vertices[m.edges[src]]
        vd = m.vertices[m.edges[dst]]
        assert np.all(vs[:, 0] == 1.0) and np.all(vd[:, 0] == 0.0)
        assert set(vs[:, 1]) == set(vd[:, 1])


def test_edge_adjacency_counts():
    m = mm.build_uniform(2)
    inner = m.boundary_tags == mm.TAG_INTERIOR
    n_adj = (m.edge_cells >= 0).sum(axis=1)
    assert np.all(n_adj[inner] == 2)
    assert np.all(n_adj[~inner] == 1)
    assert (m.boundary_tags == mm.TAG_BOTTOM).sum() == m.n
    assert (m.boundary_tags == mm.TAG_TOP).sum() == m.n
    assert (m.boundary_tags == mm.TAG_PERIODIC).sum() == 2 * m.n


@pytest.mark.parametrize("level,expect", [(0, [0.0, 1.0]), (1, [0.0, 0.5, 1.0])])
def test_horizontal_grid_lines_small(level, expect):
    m = mm.build_uniform(level)
    assert np.allclose(mm.horizontal_grid_lines(m), expect, atol=0)


def test_horizontal_grid_lines_count():
    m = mm.build_uniform(5)
    ys = mm.horizontal_grid_lines(m)
    assert len(ys) == 2 ** 5 + 1
    assert ys[0] == 0.0 and ys[-1] == 1.0
    assert np.all(np.diff(ys) > 0)
