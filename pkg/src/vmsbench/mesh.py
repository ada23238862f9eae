"""Uniform triangular meshes of the unit square with periodic x-identification.

The Level-0 mesh splits (0,1)^2 into two triangles along the diagonal from
(0,0) to (1,1); each refinement level subdivides every triangle into four
congruent children (equivalent to splitting every square of an n x n grid,
n = 2^level, along its SW-NE diagonal).  Vertices on x=1 are paired with
their partners on x=0; edges at y=0 and y=1 are tagged for the slip condition.
"""

import numpy as np

MAX_LEVEL = 10

TAG_INTERIOR = 0
TAG_BOTTOM = 1
TAG_TOP = 2
TAG_PERIODIC = 3

# local edges of a triangle (v0,v1,v2), same order as the P2 midside nodes
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


class MeshError(Exception):
    pass


class Mesh:
    """Triangulation data: vertices, cells, edges, periodic pairing, tags.

    Attributes
    ----------
    level : int
    n : int
        Squares per side, n = 2**level.
    vertices : (nverts, 2) float array
    cells : (ncells, 3) int array
        Vertex triples, counterclockwise.
    edges : (nedges, 2) int array
        Vertex pairs (lo, hi), deterministic first-seen order.
    cell_edges : (ncells, 3) int array
        Global edge index of each local edge.
    edge_cells : (nedges, 2) int array
        Adjacent cells, -1 where absent.
    boundary_tags : (nedges,) int array
        One of TAG_INTERIOR / TAG_BOTTOM / TAG_TOP / TAG_PERIODIC.
    periodic_vertices : (k, 2) int array
        Rows (v_at_x1, v_at_x0) with equal y.
    periodic_edges : (m, 2) int array
        Rows (e_at_x1, e_at_x0).
    """

    def __init__(self, level, vertices, cells):
        self.level = level
        self.n = 2 ** level
        self.vertices = vertices
        self.cells = cells
        self._build_edges()
        self._build_periodic_maps()
        self._build_geometry()

    # -- construction helpers -------------------------------------------------

    def _build_edges(self):
        edge_index = {}
        edges = []
        cell_edges = np.empty((len(self.cells), 3), dtype=np.int64)
        for c, tri in enumerate(self.cells):
            for k, (a, b) in enumerate(LOCAL_EDGES):
                key = (min(tri[a], tri[b]), max(tri[a], tri[b]))
                idx = edge_index.get(key)
                if idx is None:
                    idx = len(edges)
                    edge_index[key] = idx
                    edges.append(key)
                cell_edges[c, k] = idx
        self.edges = np.array(edges, dtype=np.int64)
        self.cell_edges = cell_edges

        edge_cells = np.full((len(self.edges), 2), -1, dtype=np.int64)
        for c in range(len(self.cells)):
            for idx in cell_edges[c]:
                if edge_cells[idx, 0] == -1:
                    edge_cells[idx, 0] = c
                else:
                    edge_cells[idx, 1] = c
        self.edge_cells = edge_cells

        x = self.vertices[:, 0]
        y = self.vertices[:, 1]
        tags = np.full(len(self.edges), TAG_INTERIOR, dtype=np.int64)
        e0, e1 = self.edges[:, 0], self.edges[:, 1]
        on_bottom = (y[e0] == 0.0) & (y[e1] == 0.0)
        on_top = (y[e0] == 1.0) & (y[e1] == 1.0)
        on_left = (x[e0] == 0.0) & (x[e1] == 0.0)
        on_right = (x[e0] == 1.0) & (x[e1] == 1.0)
        tags[on_bottom] = TAG_BOTTOM
        tags[on_top] = TAG_TOP
        tags[on_left | on_right] = TAG_PERIODIC
        self.boundary_tags = tags

    def _build_periodic_maps(self):
        n = self.n
        # structured vertex id: (i, j) -> j*(n+1) + i
        j = np.arange(n + 1)
        right = j * (n + 1) + n
        left = j * (n + 1)
        self.periodic_vertices = np.column_stack([right, left])

        v_of_edge = {tuple(e): i for i, e in enumerate(self.edges)}
        pairs = []
        for jj in range(n):
            er = (self._vid(n, jj), self._vid(n, jj + 1))
            el = (self._vid(0, jj), self._vid(0, jj + 1))
            pairs.append((v_of_edge[er], v_of_edge[el]))
        self.periodic_edges = np.array(pairs, dtype=np.int64)

    def _vid(self, i, j):
        return j * (self.n + 1) + i

    def _build_geometry(self):
        v = self.vertices[self.cells]           # (ncells, 3, 2)
        d1 = v[:, 1] - v[:, 0]
        d2 = v[:, 2] - v[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        if np.any(det <= 0):
            raise MeshError("degenerate or misoriented cell")
        self.cell_verts = v
        self.det = det                          # = 2*area, > 0
        self.areas = 0.5 * det
        # inverse transpose of the affine matrix A = [d1 | d2]
        inv = np.empty((len(det), 2, 2))
        inv[:, 0, 0] = d2[:, 1] / det
        inv[:, 0, 1] = -d2[:, 0] / det
        inv[:, 1, 0] = -d1[:, 1] / det
        inv[:, 1, 1] = d1[:, 0] / det
        self.invA = inv                         # A^{-1}, rows solve A^{-1} (x - v0)
        lengths = np.stack([
            np.linalg.norm(v[:, 1] - v[:, 0], axis=1),
            np.linalg.norm(v[:, 2] - v[:, 1], axis=1),
            np.linalg.norm(v[:, 0] - v[:, 2], axis=1),
        ])
        self.diameters = lengths.max(axis=0)

    # -- public operations ----------------------------------------------------

    @property
    def ncells(self):
        return len(self.cells)

    @property
    def nverts(self):
        return len(self.vertices)

    def to_reference(self, cells, points):
        """Map physical points (k,2) lying in the given cells to reference coords."""
        v0 = self.vertices[self.cells[cells, 0]]
        d = points - v0
        return np.einsum('cde,ce->cd', self.invA[cells], d)


def build_uniform(level):
    """Build the uniformly refined triangulation at the given level.

    Returns a mesh with 2*4**level cells; every cell has diameter
    sqrt(2)*2**(-level).
    """
    if not (isinstance(level, (int, np.integer)) and 0 <= level <= MAX_LEVEL):
        raise MeshError(f"level must be an integer in [0, {MAX_LEVEL}], got {level!r}")
    n = 2 ** level
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing='ij')
    verts = np.column_stack([(ii / n).ravel(order='F'), (jj / n).ravel(order='F')])
    # vertex id (i, j) -> j*(n+1) + i, consistent with Mesh._vid
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10 = v00 + 1
            v01 = v00 + (n + 1)
            v11 = v01 + 1
            cells.append((v00, v10, v11))   # lower: below the SW-NE diagonal
            cells.append((v00, v11, v01))   # upper
    return Mesh(level, verts, np.array(cells, dtype=np.int64))


def cell_geometry(mesh, cell):
    """Area, diameter and vertex coordinates of one cell."""
    if not 0 <= cell < mesh.ncells:
        raise MeshError(f"cell index {cell} out of range")
    area = mesh.areas[cell]
    if area <= 0:
        raise MeshError(f"cell {cell} is degenerate")
    return area, mesh.diameters[cell], mesh.cell_verts[cell]


def horizontal_grid_lines(mesh):
    """Distinct vertex y-coordinates, ascending (2**level + 1 values)."""
    return np.unique(mesh.vertices[:, 1])
