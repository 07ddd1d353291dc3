"""
Pacing functions and curriculum subsets
=======================================

How much of the training set a curriculum exposes at each epoch, and
which nodes make up that share.
"""

import numpy as np

from bcl.curriculum import curriculum_end, pacing_value, select_subset

# Each pacing function starts at lambda0 and reaches 1 at epoch T.
lambda0, t_max = 0.3, 20
for kind in ("linear", "root", "geometric"):
    values = [pacing_value(kind, lambda0, t_max, t) for t in range(0, t_max + 1, 4)]
    print(f"{kind:>9}: " + " ".join(f"{v:.3f}" for v in values))

# The root schedule front-loads data, the geometric one holds back.
# From curriculum_end on, every training node is in play.
print("full training set from epoch", curriculum_end("linear", lambda0, t_max))

# Subsets are prefixes of an ordering restricted to the training nodes.
ordering = np.array([7, 2, 9, 0, 4, 1, 8, 3, 6, 5])
train = np.array([0, 1, 2, 3, 4, 5])
for lam in (0.2, 0.5, 1.0):
    print(f"lambda={lam}: {select_subset(ordering, train, lam)}")
