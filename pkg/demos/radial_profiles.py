"""
Radial profiles of the four experiment links
============================================

With standard normal regressors the population field of a GLM is radial,
F(z) = h(||z||) z / ||z||. This script tabulates h and the strong
monotonicity modulus of F on balls of growing radius.
"""

import numpy as np

from glmvi import Link, h_profile, modulus_profile
from glmvi.links import EXPERIMENT_LINKS

ts = np.array([0.25, 0.5, 1.0, 2.0, 3.0])
print("t      " + "  ".join(f"{link.value:>9}" for link in EXPERIMENT_LINKS))
for t in ts:
    print(f"{t:<6} " + "  ".join(f"{h_profile(link, t):9.5f}" for link in EXPERIMENT_LINKS))

# linear and hinge have closed forms: h(t) = t and h(t) = t/2
print("\nhinge at t=2:", h_profile(Link.HINGE, 2.0))

# the modulus shrinks with the radius for saturating links
for R in (0.5, 1.0, 2.0):
    mods = ", ".join(f"{link.value}={modulus_profile(link, R):.4f}" for link in EXPERIMENT_LINKS)
    print(f"R={R}: {mods}")
