"""
General position and exact simplex tests
========================================

Points are nudged by less than r until every small subset is affinely
independent. Rank tests and simplex intersections are decided in exact
rational arithmetic, so float round-off never flips a verdict.
"""

import numpy as np

from coverembed import is_general_position, perturb_to_general_position, simplices_disjoint

# %%
# Five points on a line in R^3 are badly placed.

pts = [[float(i), 0.0, 0.0] for i in range(5)]
print("before:", is_general_position(pts))
moved = perturb_to_general_position(pts, 0.1, seed=7)
print("after:", is_general_position(moved))
print("largest move:", np.abs(moved.array - np.array(pts)).max())

# %%
# Three ways two simplices can meet.

print(simplices_disjoint([[0, 0], [1, 0]], [[0, 1], [1, 1]]).value)
print(simplices_disjoint([[0, 0], [1, 0], [0, 1]], [[1, 0], [0, 1], [1, 1]]).value)
print(simplices_disjoint([[0, 0], [1, 1]], [[0, 1], [1, 0]]).value)

# %%
# A gap of 1e-12 is still a gap.

print(simplices_disjoint([[0.0, 0.0], [1.0, 0.0]], [[0.5, 1e-12], [0.5, 1.0]]).value)
