"""
Where the sharp constant comes from
===================================

For a single uniform variable ``U`` on ``[-1, 1]`` the tail is linear,
``P(|U| > t) = 1 - t``.  Its ratio to the Gaussian tail of matching
variance, ``P(|G| > t sqrt 3)``, is largest at ``t0``.  That maximum is
``C*``, the best constant in

    P(|sum a_j U_j| > t) <= C* P(|G| > t sqrt 3)   for every unit vector a.
"""

# %%
import numpy as np

from unitail import sharp_constants
from unitail.constants import ratio

k = sharp_constants()
print(f"C* = {k.c_star:.16f}")
print(f"t0 = {k.t0:.16f}")
print(f"t1 = {k.t1:.16f}")

# %%
# The ratio on a coarse grid: it rises from 1, peaks at t0, and falls to 0 at t = 1.
for t in np.linspace(0.0, 1.0, 11):
    print(f"t = {t:.1f}   ratio = {float(ratio(t)):.6f}")

# %%
# The peak is strict: nearby points fall short of C*.
for dt in (-1e-2, -1e-4, 0.0, 1e-4, 1e-2):
    print(f"t0 {dt:+.0e}:  C* - ratio = {k.c_star - float(ratio(k.t0 + dt)):.3e}")
