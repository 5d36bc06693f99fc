import math

import numpy as np
import pytest

from unitail.constants import sharp_constants
from unitail.rng import stream
from unitail.special import scaled_two_sided_tail
from unitail.uniform_sum import (
    CapacityError,
    MCEstimate,
    TailValue,
    UnitVector,
    _exact_lower_tail,
    equal_weights_tail,
    exact_tail_many,
    exact_tail_two_sided,
    mc_tail_two_sided,
    milman_vector,
    random_unit_vector,
)
from oracles import tail2, tail3, tail_fourier

R2 = 1 / math.sqrt(2)


# -- construction ------------------------------------------------------------


def test_canonical_form_drops_signs_zeros_and_order():
    a = UnitVector.from_coeffs([0.0, -0.8, 0.6])
    assert a.coeffs == (0.8, 0.6)
    assert a == UnitVector.from_coeffs([0.6, 0.8])


def test_normalize():
    a = UnitVector.from_coeffs([3, 4], normalize=True)
    assert a.coeffs == pytest.approx((0.8, 0.6), abs=1e-16)


@pytest.mark.parametrize("bad", [[0.5, 0.5], [], [0.0], [math.nan, 1.0], [math.inf]])
def test_rejects_non_unit(bad):
    with pytest.raises(ValueError):
        UnitVector.from_coeffs(bad)


def test_raw_constructor_requires_canonical():
    with pytest.raises(ValueError):
        UnitVector((0.6, 0.8))


def test_milman_vector():
    assert milman_vector(1).coeffs == (1.0,)
    assert milman_vector(4).coeffs == (0.5,) * 4
    with pytest.raises(ValueError):
        milman_vector(0)


def test_random_unit_vector_is_unit():
    a = random_unit_vector(7, stream(0, "t"))
    assert a.n == 7
    assert math.fsum(np.square(a.array)) == pytest.approx(1, abs=1e-14)


def test_tailvalue_validation():
    with pytest.raises(ValueError):
        TailValue(1.5, "exact", 0.0)
    with pytest.raises(ValueError):
        TailValue(0.5, "mc", -1.0)


# -- exact engine: closed-form oracles ----------------------------------------


@pytest.mark.parametrize("t", [0.05, 0.3, 0.5, 0.99])
def test_single_uniform(t):
    assert exact_tail_two_sided(UnitVector((1.0,)), t).prob == pytest.approx(1 - t, abs=1e-15)


def test_equal_pair_at_one():
    expected = (2 - math.sqrt(2)) ** 2 / 4
    assert exact_tail_two_sided(milman_vector(2), 1.0).prob == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.085786, abs=1e-6)


@pytest.mark.parametrize("a1", [R2, 0.8, 0.9, 0.99])
@pytest.mark.parametrize("t", [0.01, 0.2, 0.5, 0.7, 0.95, 1.1, 1.3])
def test_n2_closed_form(a1, t):
    a2 = math.sqrt(1 - a1 * a1)
    a = UnitVector.from_coeffs([a1, a2])
    assert exact_tail_two_sided(a, t).prob == pytest.approx(tail2(a1, a2, t), abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("t", [0.1, 0.45, 0.9, 1.4])
def test_n3_against_convolution(seed, t):
    a = random_unit_vector(3, stream(seed, "n3"))
    assert exact_tail_two_sided(a, t).prob == pytest.approx(tail3(a.coeffs, t), abs=1e-12)


@pytest.mark.parametrize("n", range(4, 9))
@pytest.mark.parametrize("t", [0.2, 0.7, 1.3])
def test_n4_to_8_against_fourier(n, t):
    a = random_unit_vector(n, stream(n, "fourier"))
    assert exact_tail_two_sided(a, t).prob == pytest.approx(tail_fourier(a.coeffs, t), abs=1e-8)


@pytest.mark.parametrize("n", range(4, 9))
def test_n4_to_8_against_mc(n):
    a = random_unit_vector(n, stream(n, "mc-oracle"))
    t = 0.6
    est = mc_tail_two_sided(a, t, 200_000, seed=n)
    assert abs(exact_tail_two_sided(a, t).prob - est.mean) <= 4 * est.stderr


def test_three_equal_at_t1():
    t1 = sharp_constants().t1
    assert equal_weights_tail(3, t1).prob == pytest.approx(scaled_two_sided_tail(t1), abs=1e-5)


# -- exact engine: structure ---------------------------------------------------


@pytest.mark.parametrize("n,t,expected", [(1, 0.25, 0.75), (3, 3.0, 0.0), (3, math.sqrt(3), 0.0)])
def test_equal_weights_examples(n, t, expected):
    assert equal_weights_tail(n, t).prob == pytest.approx(expected, abs=1e-15)


def test_equal_weights_matches_vector():
    assert equal_weights_tail(5, 0.8) == exact_tail_two_sided(milman_vector(5), 0.8)


def test_support_and_small_t():
    for seed in range(5):
        a = random_unit_vector(6, stream(seed, "support"))
        assert exact_tail_two_sided(a, a.l1).prob == 0.0
        assert exact_tail_two_sided(a, a.l1 * 1.01).prob == 0.0
        assert exact_tail_two_sided(a, 1e-9).prob == pytest.approx(1.0, abs=1e-8)


def test_monotone_in_t():
    ts = np.linspace(0.01, 2.9, 100)
    for i in range(50):
        n = 2 + i % 7
        a = random_unit_vector(n, stream(i, "mono"))
        probs, _ = exact_tail_many(a, ts)
        assert np.all(np.diff(probs) <= 1e-15)


def test_sign_and_permutation_invariance():
    base = [0.1, -0.3, 0.5, 0.2, -0.4]
    a = UnitVector.from_coeffs(base, normalize=True)
    rng = np.random.default_rng(3)
    for _ in range(5):
        perm = rng.permutation(base) * rng.choice([-1, 1], size=len(base))
        b = UnitVector.from_coeffs(perm, normalize=True)
        assert exact_tail_two_sided(b, 0.77) == exact_tail_two_sided(a, 0.77)


def test_repeated_coefficients_handled():
    a = UnitVector.from_coeffs([1, 1, 1, 2], normalize=True)
    assert exact_tail_two_sided(a, 0.9).prob == pytest.approx(tail_fourier(a.coeffs, 0.9), abs=1e-8)


def test_many_matches_single():
    a = random_unit_vector(5, stream(0, "many"))
    ts = [0.1, 0.5, 1.2]
    probs, errs = exact_tail_many(a, ts)
    for t, p, e in zip(ts, probs, errs):
        tv = exact_tail_two_sided(a, t)
        assert tv.prob == p and tv.err_bound == e and tv.method == "exact"


def test_dyadic_path_agrees_with_float_path():
    a = random_unit_vector(6, stream(0, "dyadic"))
    for t in (0.2, 0.8, 1.5):
        exact = 2 * _exact_lower_tail(a.coeffs, t)
        assert exact == pytest.approx(exact_tail_two_sided(a, t).prob, abs=1e-13)


def test_error_bound_reported_and_small_for_large_n():
    a = random_unit_vector(20, stream(0, "n20"))
    tv = exact_tail_two_sided(a, 0.5)
    assert 0 <= tv.err_bound <= 1e-13
    est = mc_tail_two_sided(a, 0.5, 200_000, seed=1)
    assert abs(tv.prob - est.mean) <= 4 * est.stderr


def test_capacity_error():
    with pytest.raises(CapacityError, match="mc_tail_two_sided"):
        exact_tail_two_sided(milman_vector(21), 0.5)
    assert exact_tail_two_sided(milman_vector(21), 0.5, cap=21).prob > 0


@pytest.mark.parametrize("t", [0.0, -1.0, math.nan, math.inf])
def test_bad_threshold(t):
    with pytest.raises(ValueError):
        exact_tail_two_sided(milman_vector(2), t)


# -- Monte Carlo ---------------------------------------------------------------


def test_mc_single_uniform():
    est = mc_tail_two_sided(UnitVector((1.0,)), 0.5, 100_000, seed=123)
    assert abs(est.mean - 0.5) <= 4 * est.stderr


def test_mc_equal_weights_eight():
    est = mc_tail_two_sided(milman_vector(8), 0.7, 200_000, seed=5)
    assert abs(est.mean - equal_weights_tail(8, 0.7).prob) <= 4 * est.stderr


def test_mc_deterministic_and_chunk_independent():
    a = milman_vector(3)
    e1 = mc_tail_two_sided(a, 0.9, 50_000, seed=9)
    e2 = mc_tail_two_sided(a, 0.9, 50_000, seed=9)
    e3 = mc_tail_two_sided(a, 0.9, 50_000, seed=9, chunk=999)
    assert e1 == e2 == e3


def test_mc_stderr_formula():
    est = mc_tail_two_sided(milman_vector(2), 0.5, 10_000, seed=0)
    assert isinstance(est, MCEstimate)
    assert est.stderr == pytest.approx(math.sqrt(est.mean * (1 - est.mean) / est.trials))
    lo, hi = est.interval()
    assert lo < est.mean < hi


def test_mc_minimum_trials():
    with pytest.raises(ValueError):
        mc_tail_two_sided(milman_vector(2), 0.5, 9_999, seed=0)
