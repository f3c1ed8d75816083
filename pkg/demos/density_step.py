"""
One perturbation step
=====================

Start with a map that crushes a segment to a point. A single step moves it
by less than r and leaves no fibre wider than eps on the chosen region.
"""

import numpy as np

from coverembed import fiber_diameter, perturb_step, realize_metric, rho_metric
from coverembed.complexes import hexagon, segment
from coverembed.embed import initial_map
from coverembed.space import build_exhaustion

samples, space = realize_metric(segment(), mesh=0.1)
f = np.zeros((len(samples), 3))
print("fibre diameter before:", fiber_diameter(f, None, 0.0, space))

g, report = perturb_step(f, samples.ids, eps=0.3, r=0.5, seed=1, space=space, samples=samples)
print("fibre diameter after:", fiber_diameter(g, None, 0.0, space))
print("distance moved:", float(rho_metric(f, g, exact=True)))
print("cover order used:", report.cover_order, "with", report.cover_size, "sets")

# %%
# On a hexagon the step acts on one stage of an exhaustion and blends the
# correction out beyond it.

samples, space = realize_metric(hexagon(), mesh=0.25)
ex = build_exhaustion(space, 3)
f = initial_map(samples, space, ex, 3)
g, report = perturb_step(f, ex.stage(2), eps=0.5, r=0.25, seed=0, space=space, samples=samples)
print({k: report.to_json()[k] for k in ("rho_bound", "delta_before", "delta_after", "gp_scope")})
