"""
Meshes, finite element spaces and degrees of freedom
====================================================

Builds the hierarchy of uniform triangulations of the unit square with
periodic identification in x, and prints the degree-of-freedom accounting
of the four element families used by the solvers.
"""

from vmsbench import build_space, build_uniform, cell_geometry, horizontal_grid_lines

# Level 0 splits the square into two triangles along the (0,0)-(1,1)
# diagonal; each level quadruples the cell count.
for level in range(4):
    m = build_uniform(level)
    area, diam, _ = cell_geometry(m, 0)
    print(f"level {level}: {m.ncells:5d} cells, h = {diam:.4e}, "
          f"cell area = {area:.4e}, total area = {m.areas.sum():.15f}")

# The benchmark levels and their DOF counts, after periodic gluing.
print("\nlevel   P2(vec)   P1    P2Bubble(vec)  P1dc")
for level in (5, 6, 7):
    m = build_uniform(level)
    p2 = build_space(m, "P2", components=2).ndof
    p1 = build_space(m, "P1", components=1).ndof
    p2b = build_space(m, "P2Bubble", components=2).ndof
    p1dc = build_space(m, "P1dc", components=1).ndof
    print(f"{level:5d} {p2:9d} {p1:6d} {p2b:13d} {p1dc:6d}")

# Fields in a periodic space share one DOF between x=0 and x=1 partners,
# so traces on the seam agree exactly.
m = build_uniform(3)
s = build_space(m, "P2", components=1)
print(f"\nlevel 3 P2 scalar: {s.ndof} dofs "
      f"({m.nverts} raw vertices, {len(m.edges)} raw edges before gluing)")
print("horizontal grid lines:", horizontal_grid_lines(m))
