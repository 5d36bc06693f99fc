"""Property-based checks of the stated invariants."""

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from unitail.ave_tail import AveTailPoint, averaged_tail, dh_da, exp_ineq_check, f_fn, f_prime, h_fn
from unitail.constants import p_of_t, sharp_constants
from unitail.lemma_g import g_fn, psi, psi_prime, tilde_p
from unitail.special import SQRT3, scaled_two_sided_tail, upper_tail
from unitail.uniform_sum import UnitVector, exact_tail_two_sided
from unitail.verifier import verify_bk_small_width, verify_main_inequality

finite_x = st.floats(-37.0, 37.0, allow_nan=False)
unit_open = st.floats(1e-6, 1 - 1e-6)
raw_coeffs = st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=8).filter(
    lambda c: sum(v * v for v in c) > 1e-6 and all(v == 0 or abs(v) > 1e-4 for v in c)
)


def unit(c):
    return UnitVector.from_coeffs(c, normalize=True)


@given(finite_x)
def test_q_range_and_symmetry(x):
    q = upper_tail(x)
    assert 0 <= q <= 1
    assert abs(q + upper_tail(-x) - 1) <= 1e-13


@given(finite_x, st.floats(1e-3, 5))
def test_q_monotone(x, dx):
    assert upper_tail(x + dx) <= upper_tail(x)


@given(raw_coeffs, st.floats(0.01, 3.0), st.randoms(use_true_random=False))
@settings(max_examples=60)
def test_tail_invariant_under_signs_and_order(c, t, rnd):
    perm = list(c)
    rnd.shuffle(perm)
    perm = [v if rnd.random() < 0.5 else -v for v in perm]
    assert exact_tail_two_sided(unit(c), t) == exact_tail_two_sided(unit(perm), t)


@given(raw_coeffs, st.floats(0.01, 3.0), st.floats(0.0, 1.0))
@settings(max_examples=80)
def test_tail_range_monotone_support(c, t, dt):
    a = unit(c)
    p = exact_tail_two_sided(a, t).prob
    assert 0 <= p <= 1
    assert exact_tail_two_sided(a, t + dt).prob <= p + 1e-15
    assert exact_tail_two_sided(a, a.l1 * (1 + 1e-12)).prob == 0


@given(raw_coeffs, st.floats(1e-3, 3.0))
@settings(max_examples=150)
def test_main_inequality(c, t):
    assert verify_main_inequality(unit(c), t).passed


@given(raw_coeffs, st.floats(1e-3, 0.75))
@settings(max_examples=150)
def test_slab_bound(c, t):
    assert verify_bk_small_width(unit(c), t).passed


@given(unit_open, unit_open)
def test_psi_above_its_tangents(x, y):
    # convexity: psi lies above every tangent line
    assert psi(y) >= psi(x) + psi_prime(x) * (y - x) - 1e-13


@given(unit_open)
def test_psi_lower_bound(x):
    assert psi(x) > x * x / 3


@given(st.floats(1e-3, 0.75), st.floats(1e-4, 1 - 1e-4))
def test_g_bk(t, x):
    assert g_fn(t, t, x) >= -1e-9


@given(st.floats(0.75, 1.0))
def test_p_below_majorant(t):
    assert p_of_t(t) < tilde_p(t)


@given(st.floats(0.75, 0.9999), st.floats(1e-4, 1 - 1e-4))
def test_lemma_g_conclusion(t, x):
    assert g_fn(t, p_of_t(t), x) >= -1e-9


@given(st.floats(1e-3, 0.999), st.floats(1.0001, 12.0))
@settings(max_examples=60, deadline=None)
def test_averaged_tail_bound(a, t):
    assert averaged_tail(a, t) <= upper_tail(t * SQRT3) + 1e-12


# past t ~ 20 the density factor phi(t_-) underflows and both sides are 0
@given(st.floats(1e-3, 0.99), st.floats(1.0001, 20.0))
def test_dh_da_positive(a, t):
    assume(a * t < 1 - 1e-9)
    p = AveTailPoint(a, t)
    assert dh_da(p) > 0
    assert h_fn(p) >= -1e-15


# the margin is about 7.2 a^5 near a = b, so below a ~ 1e-2 it is smaller
# than the rounding of the two O(1) sides
@given(st.floats(1e-2, 0.9999), st.floats(1e-2, 0.9999))
def test_exp_inequality(a, b):
    assume(a < b)
    assert exp_ineq_check(a, b) > 0


@given(st.floats(1e-6, 1e-3), st.floats(1.0, 2.0))
def test_exp_inequality_below_resolution(a, r):
    b = min(a * r, 0.5)
    assume(a < b)
    assert exp_ineq_check(a, b) >= -4 * np.finfo(float).eps


@given(st.floats(1e-3, 0.4999))
def test_f_and_derivative_positive(a):
    assert f_fn(a) > 0 and f_prime(a) > 0


@given(st.floats(0.0, 8.0))
def test_scaled_tail_matches_definition(t):
    assert scaled_two_sided_tail(t) == 2 * upper_tail(t * SQRT3) or t == 0


def test_constant_record_is_cached():
    assert sharp_constants() is sharp_constants()
    assert math.isfinite(sharp_constants().c_star)
