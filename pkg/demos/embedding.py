"""
Embedding complexes in R^(2n+1)
===============================

Two routes. The PL route places vertices in general position and certifies
the result by checking every pair of facets exactly. The iterative route
perturbs a sampled map one stage at a time with shrinking steps.
"""

from coverembed import embed_iterative, pl_embed, realize_metric
from coverembed.complexes import hexagon, k5, rp2_6, torus7

# %%
# PL embeddings of a few complexes.

for name, cx in [("K5", k5()), ("torus", torus7()), ("RP2", rp2_6())]:
    m, cert = pl_embed(cx, seed=0)
    print(f"{name}: R^{m.N}, {len(cert.pairwise_simplex_results)} facet pairs, passed={cert.passed}")

# %%
# The complete graph on five vertices is not planar, and the certificate
# notices when asked for the plane.

m, cert = pl_embed(k5(), seed=0, N=2)
print("K5 in R^2:", cert.passed, "with", len(cert.improper_pairs), "crossing pairs")

# %%
# The iterative route on a hexagon. The certificate reports how far the
# final map moved from the starting map and how many sample pairs shared an
# image after each step.

cx = hexagon()
samples, space = realize_metric(cx, mesh=0.25)
sm, cert = embed_iterative(cx, samples, space, K=4, seed=0)
print("passed:", cert.passed, "margin:", cert.injectivity_margin)
print("moved:", cert.extra["rho_f0_fK"], "of budget", cert.extra["rho_budget"])
print("coincident pairs per step:", cert.extra["equal_image_pairs"])
