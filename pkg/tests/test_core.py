import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropia import jets
from entropia.core import (RescaledMap, bowen_distance, check_system, iterate_orbit, jet_norms,
                           polydisc_sup)
from entropia.errors import NoComplexExtension, NoJetAvailable, NumericEscape, ParameterError
from entropia.spaces import StateSpace, as_point
from entropia.core import AnalyticSystem
from entropia import zoo

unit = st.floats(0, 1, exclude_max=True, allow_nan=False)


@given(st.lists(unit, min_size=2, max_size=2), st.lists(unit, min_size=2, max_size=2),
       st.lists(unit, min_size=2, max_size=2))
def test_torus_metric_axioms(x, y, z):
    sp = StateSpace.torus(2)
    dxy, dyz, dxz = sp.distance(x, y), sp.distance(y, z), sp.distance(x, z)
    assert dxy == pytest.approx(sp.distance(y, x))
    assert dxz <= dxy + dyz + 1e-12
    assert 0 <= dxy <= math.sqrt(0.5) + 1e-12
    assert sp.distance(x, x) == 0


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_normalize_lands_in_domain(a, b):
    sp = StateSpace.product(StateSpace.torus(1), StateSpace.cube(1))
    p = sp.normalize([a, b])
    assert 0 <= p[0] < 1 and 0 <= p[1] <= 1


def test_circle_wrap_distance():
    sp = StateSpace.torus(1)
    assert sp.distance([0.05], [0.95]) == pytest.approx(0.1)
    assert StateSpace.cube(1).distance([0.05], [0.95]) == pytest.approx(0.9)


def test_as_point_checks_shape():
    with pytest.raises(ParameterError):
        as_point(StateSpace.torus(2), [0.1])


def test_orbit_examples(identity, doubling, logistic):
    np.testing.assert_allclose(iterate_orbit(identity, [0.3], 5), np.full((6, 1), 0.3))
    np.testing.assert_allclose(iterate_orbit(doubling, [0.3], 2).ravel(), [0.3, 0.6, 0.2], atol=1e-15)
    np.testing.assert_allclose(iterate_orbit(logistic, [0.5], 2).ravel(), [0.5, 1.0, 0.0])


def test_numeric_escape_names_step():
    blow = AnalyticSystem("blow", StateSpace.cube(1), 2.0, 0.5, 1.0,
                          map_fn=lambda x: np.where(x > 0.7, np.nan, x + 0.3))
    with pytest.raises(NumericEscape) as info:
        iterate_orbit(blow, [0.2], 5)
    assert info.value.step == 3


def test_bowen_distance_examples(identity, doubling, rotation):
    assert bowen_distance(doubling, [0.0], [0.1], 3) == pytest.approx(0.4)
    assert bowen_distance(identity, [0.1], [0.7], 7) == pytest.approx(0.4)
    assert bowen_distance(rotation, [0.1], [0.35], 9) == pytest.approx(0.25)


@given(unit, unit, st.integers(1, 8))
def test_bowen_distance_monotone_in_n(doubling, x, y, n):
    assert bowen_distance(doubling, [x], [y], n) <= bowen_distance(doubling, [x], [y], n + 1) + 1e-15


@given(unit, unit, st.integers(1, 6))
def test_isometry_bowen_equals_distance(rotation, x, y, n):
    d = StateSpace.torus(1).distance([x], [y])
    assert bowen_distance(rotation, [x], [y], n) == pytest.approx(d, abs=1e-12)


def test_jet_norm_examples(doubling, cat, logistic):
    np.testing.assert_allclose(jet_norms(doubling, [0.37], 4, 2), [16, 0], atol=1e-12)
    # spectral norm of A^2 = [[5,3],[3,2]]
    expected = float(np.linalg.norm(np.array([[5.0, 3.0], [3.0, 2.0]]), 2))
    assert jet_norms(cat, [0.2, 0.4], 2, 1)[0] == pytest.approx(expected, rel=1e-3)
    assert expected == pytest.approx(6.854, abs=1e-3)
    np.testing.assert_allclose(jet_norms(logistic, [0.5], 1, 2), [0, 8], atol=1e-12)


@given(st.floats(0, 1))
def test_trig_jets_match_chain_rule(x):
    c = 0.05
    sys = zoo.make_circle_map("trig", c)
    w = 2 * math.pi

    def f(u):
        return 2 * u + c * math.sin(w * u)

    def d1(u):
        return 2 + c * w * math.cos(w * u)

    def d2(u):
        return -c * w * w * math.sin(w * u)

    y = f(x)
    first = d1(y) * d1(x)
    second = d2(y) * d1(x) ** 2 + d1(y) * d2(x)
    np.testing.assert_allclose(jet_norms(sys, [x], 2, 2), [abs(first), abs(second)], rtol=1e-9,
                               atol=1e-9)


def test_jet_arithmetic_against_series():
    t = jets.Jet([0.3, 1.0, 0, 0, 0])
    e = jets.exp(t)
    assert e.derivative(4) == pytest.approx(math.exp(0.3))
    s, c = t.sincos()
    assert s.derivative(3) == pytest.approx(-math.cos(0.3))
    assert (t * t * t).derivative(3) == pytest.approx(6.0)
    assert ((t + 1) / 2).derivative(1) == pytest.approx(0.5)


def test_no_jet_for_map_fn_systems():
    sys = AnalyticSystem("plain", StateSpace.torus(1), 2.0, 0.5, 1.0, map_fn=lambda x: 2 * x,
                         analytic=False)
    with pytest.raises(NoJetAvailable):
        jet_norms(sys, [0.1], 1, 1)
    with pytest.raises(NoComplexExtension):
        polydisc_sup(sys, [0.1], 0.1)


def test_polydisc_examples(doubling, logistic):
    assert polydisc_sup(doubling, [0.0], 0.25) == pytest.approx(0.5, rel=1e-6)
    rot = zoo.make_circle_map("rotation", 0.3)
    assert polydisc_sup(rot, [0.0], 0.25) == pytest.approx(0.55, rel=1e-6)
    # max of 4|z||1-z| on |z - 0.5| = 0.2, independent brute force
    th = np.linspace(0, 2 * np.pi, 200001)
    z = 0.5 + 0.2 * np.exp(1j * th)
    brute = float(np.max(np.abs(4 * z * (1 - z))))
    assert polydisc_sup(logistic, [0.5], 0.2) == pytest.approx(brute, rel=1e-4)
    assert brute == pytest.approx(1.16, abs=1e-6)


def test_polydisc_radius_limit(doubling):
    with pytest.raises(ParameterError):
        polydisc_sup(doubling, [0.0], 0.9)


def test_invalid_system_parameters():
    with pytest.raises(ParameterError):
        AnalyticSystem("x", StateSpace.torus(1), 1.0, 0.5, 1.0, lift=lambda x: x)
    with pytest.raises(ParameterError):
        AnalyticSystem("x", StateSpace.torus(1), 2.0, 1.5, 1.0, lift=lambda x: x)


@pytest.mark.parametrize("name", ["identity", "doubling", "rotation", "trig", "cat", "logistic",
                                  "toral:1,1,0,1"])
def test_zoo_systems_pass_check(name):
    rep = check_system(zoo.resolve(name), samples=500)
    assert rep.ok, rep


def test_rescaled_map_fixes_origin(doubling):
    rm = RescaledMap(doubling, 2, np.array([0.1]))
    assert rm.s1 == pytest.approx(16)
    for i in range(1, 5):
        np.testing.assert_allclose(rm(i, np.zeros(1)), [0.0], atol=1e-9)
    assert rm.derivative_norms(1, np.zeros(1), 2)[0] == pytest.approx(4.0)
