"""
Cube covers of R^n
==================

Cells of the integer grid are thickened by a margin that shrinks near their
boundary. Cells of the same dimension end up pairwise disjoint, so a point
meets at most one set per stratum and the order is at most n.
"""

from coverembed.covers import CubeCoverSpec, cube_cells_at, cube_cover, cube_set_diameters, order

# %%
# Which cells contain a given point? The answer is at most one cell per
# stratum, keyed by the number of open axes.

for y in [(0.0, 0.0), (0.1, 0.3), (0.2, 0.5), (0.5, 0.5)]:
    print(y, cube_cells_at(y))

# %%
# On a grid of pitch 0.1 in the box [0, 2]^2, with lambda = 3.

spec = CubeCoverSpec(2, 3, [(0, 2), (0, 2)], 0.1)
c = cube_cover(spec)
print(len(c.sets), "sets, order", order(c))
print("largest diameter:", max(cube_set_diameters(spec, c)), "bound:", spec.lam / 2)

# %%
# In three dimensions this grid only offers two distinct distances to the
# integers below 1/4, so no point reaches four strata. A finer grid does.

for pitch in (0.1, 0.05):
    spec3 = CubeCoverSpec(3, 3, [(0, 1)] * 3, pitch)
    print("pitch", pitch, "order", order(cube_cover(spec3)))
