import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropia import bounds, zoo
from entropia.bounds import (BoundSchedule, CauchyEnvelope, MuNuModel, a_of_t, bound_curve_rows,
                             c3_ratio_bound, cauchy_derivative_bound, check_rescaled_bound,
                             compute_C0, delta_of_n, hloc_bound, kappa, large_n_check,
                             large_n_threshold, q_function, q_max, s_bar,
                             schedule_conditions_check, shift_inequality_holds,
                             small_lipschitz_bound, small_lipschitz_threshold,
                             suspension_reduction_bound)
from entropia.core import RescaledMap
from entropia.errors import ParameterError, PreconditionError, ScaleTooSmall


def q_oracle(n, k):
    return math.exp((1 - k) * math.log(2 * n) + (k + 0.5) * math.log(k))


def test_q_examples():
    assert q_function(3, 3) == pytest.approx(1.2990, abs=1e-4)
    assert q_function(3, 2) == pytest.approx(0.9428, abs=1e-4)
    assert q_function(10, 10) == pytest.approx(0.0617, abs=1e-4)
    assert q_max(3) == (3, pytest.approx(1.2990, abs=1e-4))
    assert q_max(10) == (1, pytest.approx(1.0))
    assert q_max(4) == (1, pytest.approx(1.0))


@given(st.integers(1, 60), st.integers(1, 60))
def test_q_matches_closed_form(n, k):
    k = min(k, n)
    assert q_function(n, k) == pytest.approx(q_oracle(n, k), rel=1e-10)


@given(st.integers(3, 400))
def test_q_max_is_endpoint(n):
    brute = max(q_oracle(n, k) for k in range(1, n + 1))
    assert q_max(n)[1] == pytest.approx(max(q_oracle(n, 1), q_oracle(n, n)), rel=1e-10)
    assert q_max(n)[1] == pytest.approx(brute, rel=1e-10)


def test_C0_examples():
    assert compute_C0(1, 1.0, 1.0) == pytest.approx(5.196, abs=1e-3)
    assert compute_C0(1, 2.0, 0.5) == pytest.approx(20.78, abs=1e-2)


def test_cauchy_example():
    env = CauchyEnvelope(1, 1.0, 1.0, 2.0, 0)
    assert cauchy_derivative_bound(env, (1,)) == pytest.approx(math.log(4))


@given(st.integers(1, 8), st.integers(0, 6))
def test_cauchy_bound_grows_with_n(k, n):
    a = cauchy_derivative_bound(CauchyEnvelope(1, 3.0, 0.5, 2.0, n), (k,))
    b = cauchy_derivative_bound(CauchyEnvelope(1, 3.0, 0.5, 2.0, n + 1), (k,))
    assert b >= a


@pytest.mark.parametrize("name,n,kmax", [("logistic", 2, 2), ("trig", 3, 3), ("doubling", 3, 3)])
def test_rescaled_maps_within_bound(name, n, kmax):
    sys = zoo.resolve(name)
    rm = RescaledMap(sys, n, np.array([0.2137]))
    rep = check_rescaled_bound(rm, kmax, samples=1000)
    assert rep.violations == 0


def test_kappa_examples():
    model = MuNuModel.constant(10, 2)
    sched = BoundSchedule(2.0, 2, model=model, C0=math.exp(10) / 32)
    assert kappa(sched, 5, 5) == pytest.approx(14.908, abs=1e-3)
    # large s leaves ln mu + nu ln ln C_n
    far = BoundSchedule(2.0, 2, model=model, C0=math.exp(10) / 2**200)
    lc = float(far.log_C(200))
    assert kappa(far, 200, 200) == pytest.approx(math.log(10) + 2 * math.log(lc) + 4 / 200 * lc)
    with pytest.raises(ScaleTooSmall):
        kappa(BoundSchedule(2.0, 1, model=model, C0=1.0), 1, 1)


def test_kappa_first_term_linear_in_m():
    model = MuNuModel.constant(10, 2)
    one = BoundSchedule(2.0, 2, model=model, C0=math.e)
    two = BoundSchedule(2.0, 4, model=model, C0=math.e)
    lc = float(one.log_C(10))
    assert kappa(two, 10, 5) - kappa(one, 10, 5) == pytest.approx(4 / 5 * lc)


def test_hloc_example():
    sched = BoundSchedule(2.0, 2, model=MuNuModel.constant(10, 2), C0=math.e, rho=0.9)
    hb = hloc_bound(sched, 10, 5)
    assert hb.value == pytest.approx(1.279, abs=1e-3)
    assert hb.expanded == pytest.approx(hb.value)
    assert hb.relaxed >= hb.value
    with pytest.raises(PreconditionError):
        hloc_bound(sched, 2, 1)


def test_hloc_tail_decreasing():
    sched = BoundSchedule.for_system(zoo.make_circle_map("doubling"))
    rows = bound_curve_rows(sched, 10**4)
    vals = np.array([float(r["hloc_bound"]) for r in rows if r["hloc_bound"]])
    assert vals[-1] < 0.2 * vals.max()
    tail = vals[len(vals) // 2:]
    assert np.all(np.diff(tail) <= 1e-12)


def test_delta_and_s_bar():
    sched = BoundSchedule(2.0, 1, s_rule=bounds.S_RULES["ceil-sqrt"])
    assert delta_of_n(sched, 3) == pytest.approx(1 / 72)
    assert a_of_t(sched, 1 / 256) == pytest.approx(0.5 + 1 / math.sqrt(math.log(256)))
    assert a_of_t(sched, 0.9) == 1.0
    for n in range(1, 40):
        assert s_bar(sched, delta_of_n(sched, n)) == sched.s(n)


@pytest.mark.parametrize("rule", list(bounds.S_RULES))
def test_s_rule_invariants(rule):
    sched = BoundSchedule(2.0, 1, s_rule=bounds.S_RULES[rule])
    s = sched.s(np.arange(1, 5001))
    n = np.arange(1, 5001)
    assert np.all(np.diff(s) >= 0) and np.all(np.diff(s) <= 1)
    assert np.all((1 <= s) & (s <= n))


@given(st.floats(1.01, 8.0), st.integers(1, 5000))
def test_delta_strictly_decreasing(L0, n):
    sched = BoundSchedule(L0, 1)
    assert bounds.log_delta(sched, n + 1) < bounds.log_delta(sched, n)


@given(st.floats(-400, math.log(0.5)), st.floats(0.01, 50))
def test_a_nonincreasing_toward_zero(lt, gap):
    # a is piecewise constant below delta(1); it jumps up from 1 just below delta(1)
    sched = BoundSchedule(2.0, 1)
    assert bounds.a_of_log_t(sched, lt - gap) <= bounds.a_of_log_t(sched, lt)


def test_large_n_threshold():
    assert large_n_threshold(BoundSchedule(2.0, 1, rho=0.5)) == 8
    sched = BoundSchedule(2.0, 1, rho=0.5)
    assert not large_n_check(sched, 7) and large_n_check(sched, 8)
    assert large_n_threshold(BoundSchedule(2.0, 1, rho=1.0)) == 5


def test_schedule_counterexamples():
    assert schedule_conditions_check(BoundSchedule(2.0, 1), 10**6).ok
    bad = BoundSchedule(2.0, 1, model=bounds.MODELS["power"], s_rule=bounds.S_RULES["linear"])
    assert "slow-mu" in [r.name for r in schedule_conditions_check(bad, 10**5).failed()]
    const = BoundSchedule(2.0, 1, s_rule=bounds.S_RULES["constant"])
    assert "unbounded" in [r.name for r in schedule_conditions_check(const, 10**5).failed()]


def test_small_lipschitz():
    rot = zoo.make_circle_map("rotation", 0.3)
    sched = BoundSchedule.for_system(zoo.make_circle_map("doubling"))
    assert small_lipschitz_threshold(rot, sched) == 1
    vals = [small_lipschitz_bound(rot, sched, n).value for n in range(50, 2000, 50)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    four = BoundSchedule(4.0, 1, rho=0.5)
    assert small_lipschitz_threshold(zoo.make_circle_map("doubling"), four) == 1


def test_shift_ratio():
    sched = BoundSchedule(2.0, 1)
    assert c3_ratio_bound(sched, 0) == 1.0
    for i in (1, 2, 4):
        assert math.isfinite(c3_ratio_bound(sched, i)) and c3_ratio_bound(sched, i) >= 1
        assert shift_inequality_holds(sched, i)
    with pytest.raises(ParameterError):
        c3_ratio_bound(sched, -1)


def test_suspension_bound_finite():
    susp = zoo.SuspensionSystem(zoo.make_circle_map("doubling"), 4)
    sched = BoundSchedule(2.0, 1, C0=compute_C0(1, 3.0, 0.5))
    res = suspension_reduction_bound(susp, sched, 1e-6, n_sweep=200)
    assert math.isfinite(res.value) and res.value > 0 and res.i == 4


def test_envelopes_hold_small():
    reps = bounds.certify_envelopes([zoo.make_circle_map("trig", 0.05), zoo.make_logistic()],
                                    alpha_max=3, n_max=3, points=100)
    assert all(r.violations == 0 and r.checks > 0 for r in reps)
