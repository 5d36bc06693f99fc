import math

import numpy as np
import pytest

from unitail.constants import sharp_constants
from unitail.report import CertReport
from unitail.rng import stream
from unitail.special import scaled_two_sided_tail
from unitail.uniform_sum import UnitVector, exact_tail_two_sided, milman_vector, random_unit_vector
from unitail.verifier import (
    SelfNormSpec,
    bound,
    conjecture_probe,
    inductive_step_check,
    sphere_negative_moment_check,
    sweep_bk,
    sweep_main,
    sweep_vectors,
    tangent_minorant_check,
    verify_bk_small_width,
    verify_main_inequality,
    verify_self_normalized,
)
from oracles import tail2

R2 = 1 / math.sqrt(2)


# -- report plumbing ----------------------------------------------------------------


def test_report_aggregate_status():
    rep = CertReport("x")
    rep.add("a", True, 1.0)
    assert rep.status == "pass"
    rep.add("b", False, -1.0, warn_only=True)
    assert rep.status == "warn" and rep.passed
    rep.add("c", False, -2.0)
    assert rep.status == "fail" and not rep.passed
    assert [c.check_id for c in rep.failures()] == ["c"]
    assert rep.min_margin() == -2.0
    assert rep["b"].status == "warn"


def test_report_extend_prefix():
    inner = CertReport("in")
    inner.add("k", True, 0.5)
    outer = CertReport("out")
    outer.extend(inner)
    outer.extend(inner, prefix="p/")
    assert [c.check_id for c in outer] == ["in/k", "p/k"]


def test_report_nonfinite_serialisation():
    rep = CertReport("x")
    rep.add("a", True, math.inf)
    assert rep.as_dict()["checks"][0]["margin"] == "inf"


# -- main inequality ------------------------------------------------------------------


def test_equality_case():
    m = verify_main_inequality(UnitVector((1.0,)), sharp_constants().t0)
    assert abs(m.value) <= 1e-9 and m.passed


def test_beyond_support_margin_is_rhs():
    m = verify_main_inequality(UnitVector((1.0,)), 1.5)
    assert m.value == bound(1.5)
    assert m.tail.prob == 0.0


def test_random_six_vector():
    a = random_unit_vector(6, stream(0, "six"))
    m = verify_main_inequality(a, 0.8)
    assert m.value >= 0 and float(m) == m.value


def test_mc_mode_large_n():
    for t in (0.5, 1.0, 1.5):
        m = verify_main_inequality(milman_vector(50), t, mode="mc", trials=10**6)
        assert m.passed
        assert m.tolerance == pytest.approx(4 * m.tail.err_bound)


def test_mode_validation():
    with pytest.raises(ValueError):
        verify_main_inequality(milman_vector(2), 0.5, mode="nope")
    with pytest.raises(ValueError):
        verify_main_inequality(milman_vector(2), 0.0)


@pytest.mark.parametrize("s", [0.01, 0.05, 0.2])
def test_equal_pair_margin_matches_triangle(s):
    t = math.sqrt(2) * s
    m = verify_main_inequality(milman_vector(2), t)
    assert m.value == pytest.approx(bound(t) - tail2(R2, R2, t), abs=1e-12)


def test_sweep_vectors_deterministic_and_complete():
    v1 = sweep_vectors(4, 3, seed=1)
    v2 = sweep_vectors(4, 3, seed=1)
    assert [a for _, a in v1] == [a for _, a in v2]
    labels = [l for l, _ in v1]
    assert sum(l.startswith("milman/") for l in labels) == 3
    assert sum(l.startswith("random/n=3/") for l in labels) == 3


def test_small_sweep_passes():
    rep = sweep_main(n_max=5, vectors_per_n=20)
    assert rep.passed, rep.summary()
    assert rep["equality/n=1,t=t0"].status == "pass"
    assert rep["equality/unique"].status == "pass"


def test_sweep_mc_rows():
    rep = sweep_main(n_max=3, vectors_per_n=2, exact_n_max=2, mc_trials=50_000)
    assert rep.passed
    assert "mc" in rep["n=3"].detail


# -- slab bound -------------------------------------------------------------------


@pytest.mark.parametrize("t", [0.1, 0.4, 0.75])
def test_bk_single_uniform_equality(t):
    assert abs(verify_bk_small_width(UnitVector((1.0,)), t).value) <= 1e-15


def test_bk_examples():
    assert verify_bk_small_width(milman_vector(2), 0.7).value > 0
    a = random_unit_vector(5, stream(0, "bk5"))
    assert verify_bk_small_width(a, 0.75).passed


def test_bk_domain():
    with pytest.raises(ValueError):
        verify_bk_small_width(milman_vector(2), 0.8)


def test_bk_sweep():
    assert sweep_bk(n_max=4, vectors_per_n=10).passed


# -- induction --------------------------------------------------------------------


def test_induction_pair():
    rep = inductive_step_check(UnitVector.from_coeffs([0.6, 0.8]), 1.0)
    assert rep.passed
    assert rep.data["left"] <= rep.data["middle"] <= rep.data["right"]


def test_induction_degenerate_coefficient():
    d = 1e-6
    a = UnitVector.from_coeffs([math.sqrt(1 - d * d), d])
    rep = inductive_step_check(a, 1.5)
    assert rep.data["middle"] == pytest.approx(rep.data["right"], rel=1e-9)


def test_induction_three_equal_with_mc():
    rep = inductive_step_check(milman_vector(3), 1.1, trials=200_000)
    assert rep.passed
    assert rep["left/exact_vs_mc"].status == "pass"


@pytest.mark.parametrize("a,t", [(UnitVector((1.0,)), 1.5), (milman_vector(2), 0.9)])
def test_induction_preconditions(a, t):
    with pytest.raises(ValueError):
        inductive_step_check(a, t)


# -- self-normalised sums --------------------------------------------------------------


def test_self_norm_spec_validation():
    with pytest.raises(ValueError):
        SelfNormSpec("two-point", 5, (1.0, 2.0, 1.5))
    with pytest.raises(ValueError):
        SelfNormSpec("two-point", 5, (0.0, 0.0, 0.5))
    with pytest.raises(ValueError):
        SelfNormSpec("cauchy", 5)
    with pytest.raises(ValueError):
        SelfNormSpec("constant", 0)


def test_self_norm_trials_minimum():
    with pytest.raises(ValueError):
        verify_self_normalized(SelfNormSpec("constant", 3), [1.0], trials=10**4)


def test_self_norm_constant_matches_exact():
    rep = verify_self_normalized(SelfNormSpec("constant", 4), np.linspace(0.2, 1.8, 9))
    assert rep.passed
    assert rep["constant/matches_exact"].status == "pass"


def test_self_norm_exponential_at_one():
    rep = verify_self_normalized(SelfNormSpec("exponential", 10), [1.0])
    assert rep.passed
    mean, se = rep.data["means"][0], rep.data["stderrs"][0]
    assert mean <= sharp_constants().c_star * scaled_two_sided_tail(1.0) + 4 * se


def test_self_norm_resamples_zero_rows():
    rep = verify_self_normalized(SelfNormSpec("two-point", 3, (0.0, 1.0, 0.5)), [0.5, 1.0])
    assert rep.passed
    assert rep.data["resampled"] > 0


def test_self_norm_clt_trend():
    ts = np.linspace(0.2, 2.0, 10)
    gaps = {n: np.abs(verify_self_normalized(SelfNormSpec("constant", n), ts, 200_000).data["gaussian_gap"])
            for n in (10, 200)}
    assert gaps[200].max() < gaps[10].max()


def test_self_norm_deterministic():
    spec = SelfNormSpec("uniform01", 6)
    r1 = verify_self_normalized(spec, [0.5, 1.0], seed=3)
    r2 = verify_self_normalized(spec, [0.5, 1.0], seed=3)
    assert r1.as_dict() == r2.as_dict() and r1.data == r2.data


# -- sphere formula ---------------------------------------------------------------------


def test_sphere_single_uniform():
    rep = sphere_negative_moment_check(UnitVector((1.0,)), 0.5, trials=400_000)
    assert rep.data["exact"] == pytest.approx(0.5, abs=1e-15)
    assert rep.passed, rep.summary()


def test_sphere_equal_pair():
    assert sphere_negative_moment_check(milman_vector(2), 0.6, trials=400_000).passed


def test_sphere_trials_minimum():
    with pytest.raises(ValueError):
        sphere_negative_moment_check(milman_vector(2), 0.6, trials=1000)


# -- tangent minorant ----------------------------------------------------------------------


def test_tangent_minorant_boundary():
    rep = tangent_minorant_check(2 / 3, vectors=1, trials=100_000)
    assert rep.passed
    assert rep["g(0)<=1/t"].margin == pytest.approx(0.0, abs=1e-15)


def test_tangent_minorant_half():
    assert tangent_minorant_check(0.5, vectors=2).passed


def test_tangent_minorant_domain():
    with pytest.raises(ValueError):
        tangent_minorant_check(0.7)


# -- conjecture probe ------------------------------------------------------------------------


def test_probe_above_threshold():
    rep = conjecture_probe([1.1], k_max=12, random_vectors=10)
    assert rep.status == "pass"


def test_probe_below_threshold_warns_never_fails():
    t1 = sharp_constants().t1
    rep = conjecture_probe([t1 - 0.01], k_max=3, random_vectors=0, strict=False)
    assert rep.status == "warn" and rep.passed
    assert exact_tail_two_sided(milman_vector(3), t1 - 0.01).prob > scaled_two_sided_tail(t1 - 0.01)


def test_probe_far_tail():
    rep = conjecture_probe([3.0], k_max=12, random_vectors=0)
    assert rep.min_margin() > 0.99


def test_probe_precondition():
    with pytest.raises(ValueError):
        conjecture_probe([1.0])
