"""Sharp Gaussian tail domination for weighted sums of independent uniforms.

For every unit vector ``a`` and ``t > 0``

    P(|a_1 U_1 + ... + a_n U_n| > t) <= C* P(|G| / sqrt 3 > t),

with ``U_j`` uniform on ``[-1, 1]``, ``G`` standard normal and
``C* = 1.3451...``.  The package computes the constants, evaluates the
weighted Irwin-Hall tail exactly, and certifies the inequality and the
lemmas behind it on fine grids.
"""

__version__ = "0.1.0"

from .constants import SharpConstants, compute_c_star, compute_t1, p_of_t, p_prime, sharp_constants
from .report import CertReport, Check
from .special import log_upper_tail, scaled_two_sided_tail, std_normal_density, upper_tail
from .uniform_sum import (
    CapacityError,
    MCEstimate,
    TailValue,
    UnitVector,
    equal_weights_tail,
    exact_tail_many,
    exact_tail_two_sided,
    mc_tail_two_sided,
    milman_vector,
    random_unit_vector,
)
from .lemma_g import NodeTable, certify_lemma_g, certify_netting, g_fn, psi, psi_prime, tilde_p
from .ave_tail import AveTailPoint, averaged_tail, certify_lemma_avetail, dh_da, f_fn, f_prime, h_fn
from .verifier import (
    SelfNormSpec,
    conjecture_probe,
    inductive_step_check,
    sphere_negative_moment_check,
    sweep_bk,
    sweep_main,
    tangent_minorant_check,
    verify_bk_small_width,
    verify_main_inequality,
    verify_self_normalized,
)

__all__ = [name for name in dir() if not name.startswith("_")]
