import math

import numpy as np
import pytest

from entropia import zoo
from entropia.errors import ParameterError


def test_circle_map_constants():
    d = zoo.make_circle_map("doubling")
    assert d.L0 == 2 and d.exact_entropy == pytest.approx(0.6931, abs=1e-4)
    r = zoo.make_circle_map("rotation", 0.30902)
    assert r.L0 == pytest.approx(1 + 1e-9, abs=1e-15) and r.exact_entropy == 0
    t = zoo.make_circle_map("trig", 0.05)
    assert t.L0 == pytest.approx(2.3142, abs=1e-4)
    assert t.exact_entropy == pytest.approx(math.log(2))


def test_trig_L0_matches_sampled_derivative():
    t = zoo.make_circle_map("trig", 0.05)
    x = np.linspace(0, 1, 100001)
    assert np.max(np.abs(2 + 0.05 * 2 * np.pi * np.cos(2 * np.pi * x))) == pytest.approx(t.L0)


def test_trig_rejects_large_c():
    with pytest.raises(ParameterError):
        zoo.make_circle_map("trig", 0.2)


@pytest.mark.parametrize("A,h", [(((2, 1), (1, 1)), math.log((3 + math.sqrt(5)) / 2)),
                                 (((1, 0), (0, 1)), 0.0), (((1, 1), (0, 1)), 0.0)])
def test_toral_entropy(A, h):
    assert zoo.make_toral_automorphism(A).exact_entropy == pytest.approx(h, abs=1e-12)


def test_toral_rejects_non_unimodular():
    with pytest.raises(ParameterError):
        zoo.make_toral_automorphism(((2, 0), (0, 1)))


def test_logistic_constants(logistic):
    assert logistic.L0 == 4 and logistic.exact_entropy == pytest.approx(math.log(2))
    assert not logistic.space.wraps[0]


def test_resolve_names():
    assert zoo.resolve("rotation:0.25").params["alpha"] == 0.25
    assert zoo.resolve("toral:1,1,0,1").exact_entropy == 0
    assert zoo.resolve("identity:2").m == 2
    with pytest.raises(ParameterError):
        zoo.resolve("nope")
    with pytest.raises(ParameterError):
        zoo.resolve("toral:1,2")


def test_suspension_of_isometry_needs_one_step():
    s = zoo.suspend(zoo.make_circle_map("rotation", 0.3), 1.5)
    assert s.i == 1


def test_suspension_of_doubling():
    s = zoo.suspend(zoo.make_circle_map("doubling"), 1.25, samples=4000)
    assert 4 <= s.i <= 64
    assert s.step_system().L0 == pytest.approx(2 ** (1 / s.i))


@pytest.mark.parametrize("i", [1, 3, 4, 7])
def test_time_one_map_from_section(i):
    base = zoo.make_circle_map("doubling")
    s = zoo.SuspensionSystem(base, i)
    x = np.linspace(0, 0.999, 37)
    z = np.stack([np.zeros_like(x), x], axis=-1)
    for _ in range(i):
        z = s.step(z)
    np.testing.assert_allclose(z[:, 0], 0.0, atol=1e-12)
    np.testing.assert_allclose(z[:, 1], base.eval(x[:, None])[:, 0], atol=1e-12)


def test_suspension_metric_glues_seam():
    s = zoo.SuspensionSystem(zoo.make_circle_map("doubling"), 4)
    # (1 - a, x) sits next to (0 + b, f(x)) across the gluing
    near = s.distance([0.99, 0.1], [0.005, 0.2])
    assert near == pytest.approx(0.015, abs=1e-9)
    assert s.distance([0.3, 0.1], [0.3, 0.1]) == 0
