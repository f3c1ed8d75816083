"""
Dimension from star covers
==========================

Open stars of a barycentric subdivision cover the complex with order at
most n. Measured on samples, the order gives an upper bound on the covering
dimension.
"""

from coverembed import dimension_upper_bound, realize_metric
from coverembed.complexes import hexagon, k5, rp2_6, segment, torus7

for name, cx in [("segment", segment()), ("circle", hexagon()), ("K5", k5()), ("torus", torus7()), ("RP2", rp2_6())]:
    samples, _ = realize_metric(cx, mesh=0.1)
    print(f"{name}: n={cx.n}, bound={dimension_upper_bound(cx, samples, 2)}")

# %%
# The bound depends on where the samples sit. If every sample is a vertex
# of the subdivision, no point sees two stars and the bound drops to 0.

samples, _ = realize_metric(segment(), mesh=0.25)
print("segment at mesh 0.25, two rounds:", dimension_upper_bound(segment(), samples, 2))
