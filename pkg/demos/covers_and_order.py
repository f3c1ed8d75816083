"""
Covers, order and refinement
============================

A cover of a finite sample set is a list of subsets whose union is the
whole set. Its order is one less than the largest number of sets any point
lies in.
"""

import numpy as np

from coverembed.covers import Cover, lebesgue_number, order, order_in, refines
from coverembed.space import sup_metric

# %%
# Twelve evenly spaced samples of the unit interval, covered by two
# overlapping pieces.

xs = np.linspace(0, 1, 12)
space = sup_metric(xs[:, None])
ids = range(12)
two = Cover.of([[i for i in ids if xs[i] < 2 / 3], [i for i in ids if xs[i] > 1 / 3]], ids)
print("order:", order(two))
print("order on the first two samples:", order_in(two, {0, 1}))

# %%
# Cutting the interval into quarters gives a finer cover. Every quarter fits
# inside one of the two pieces, and the witness says which one.

quarters = Cover.of([[i for i in ids if k / 4 <= xs[i] <= (k + 1) / 4] for k in range(4)], ids)
r = refines(quarters, two)
print("quarters refine the halves:", r.ok, r.witness)
print("and back:", refines(two, quarters).ok)

# %%
# Any subset of diameter below the Lebesgue number sits inside a single set.

print("Lebesgue number:", lebesgue_number(two, space))
