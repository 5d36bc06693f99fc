"""
Two Monte Carlo views of the same tail
======================================

A vector uniform on the sphere gives a second way to write the tail of
``sum a_j U_j``; both estimators are checked against the exact value.
Self-normalised sums with random radii are then compared with ``C*``
times the Gaussian tail.
"""

# %%
import numpy as np

from unitail import SelfNormSpec, random_unit_vector, sphere_negative_moment_check, verify_self_normalized
from unitail.rng import stream

# %%
a = random_unit_vector(4, stream(3, "demo"))
rep = sphere_negative_moment_check(a, 0.8, trials=200_000, seed=3)
print(rep.summary())

# %%
for law, params in (("uniform01", ()), ("exponential", ()), ("two-point", (1.0, 3.0, 0.5))):
    spec = SelfNormSpec(law, 6, params)
    rep = verify_self_normalized(spec, np.linspace(0.2, 2.0, 10), trials=100_000, seed=1)
    chk = rep["t=1"]
    print(f"{law:12s} {rep.status}   t = 1: {chk.detail}, margin {chk.margin:.4f}")
