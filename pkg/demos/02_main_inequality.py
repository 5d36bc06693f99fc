"""
Checking the sharp tail bound on random vectors
===============================================

The exact tail of ``S = sum a_j U_j`` comes from inclusion-exclusion over
the vertices of the cube, so small sweeps can compare the left side
against ``C* P(|G| > t sqrt 3)`` without sampling noise.  Equality holds
only at ``n = 1``, ``t = t0``.
"""

# %%
import numpy as np

from unitail import exact_tail_two_sided, milman_vector, random_unit_vector, sharp_constants, sweep_main
from unitail.rng import stream
from unitail.verifier import bound

k = sharp_constants()

# %%
# One vector, a few thresholds: tail, bound, and their gap.
a = random_unit_vector(5, stream(0, "demo"))
print("a =", np.round(a.coeffs, 4))
for t in (0.25, 0.5, k.t0, 1.0, 1.5, 2.5):
    p = exact_tail_two_sided(a, t).prob
    print(f"t = {t:.4f}   tail = {p:.6e}   bound = {float(bound(t)):.6e}   gap = {float(bound(t)) - p:.3e}")

# %%
# Equal weights approach the Gaussian tail, which sits below C* times itself.
for n in (1, 2, 4, 8):
    p = exact_tail_two_sided(milman_vector(n), k.t0).prob
    print(f"equal weights n = {n}:  tail(t0) = {p:.6f}   bound(t0) = {float(bound(k.t0)):.6f}")

# %%
# A small sweep: 50 random vectors per length, 50 thresholds each.
rep = sweep_main(n_max=6, vectors_per_n=50)
print(rep.summary())
