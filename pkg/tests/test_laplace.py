import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from immidx.errors import OddDimension
from immidx.intersections import IntersectionRecord
from immidx.laplace import (laplace_integrand, laplace_J, leading_scale, tail_width,
                            window_radii, windowed_selfint)

coord = st.floats(-1.2, 1.2, allow_nan=False)


def test_scales():
    assert leading_scale(2, 2 * math.pi) == 2.0
    assert math.exp(-0.5 * 50 * tail_width(50) ** 2) == pytest.approx(1e-14)


def test_trivial_vanishes(examples):
    f = examples["trivial2"]
    Z = np.random.default_rng(0).uniform(-2, 2, size=(200, 4))
    assert np.all(laplace_integrand(f, 50.0, Z) == 0.0)
    assert laplace_J(f, 50.0) == 0.0


def test_odd_and_bad_lambda(examples, lifted):
    with pytest.raises(OddDimension):
        laplace_J(examples["one_loop_curve"], 50.0)
    with pytest.raises(ValueError):
        laplace_J(lifted, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.tuples(coord, coord, coord, coord))
def test_integrand_symmetric(z):
    from immidx.specs import EXAMPLES, build
    f = build(EXAMPLES["lifted"])
    Z = np.array([z])
    W = np.array([z[2:] + z[:2]])
    a, b = laplace_integrand(f, 30.0, Z)[0], laplace_integrand(f, 30.0, W)[0]
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_integrand_zero_outside_support(lifted):
    rng = np.random.default_rng(5)
    Z = rng.uniform(1.0, 3.0, size=(100, 4)) * rng.choice([-1, 1], size=(100, 4))
    assert np.all(laplace_integrand(lifted, 50.0, Z) == 0.0)


def test_window_radii_capped():
    rec = IntersectionRecord(np.zeros(4), np.array([-0.1, 0.0]), np.array([0.1, 0.0]), 1, 1.0, 0.0)
    r = window_radii(rec, 2)
    assert np.all(r <= 0.45 * 0.2 + 1e-15)
    far = IntersectionRecord(np.zeros(4), np.array([-0.5, 0.0]), np.array([0.5, 0.0]), 1, 1.0, 0.0)
    np.testing.assert_allclose(window_radii(far, 2), [0.3, 0.45])


def test_windowed_selfint_matches_sign(lifted, records):
    lam = 100.0
    value, _ = windowed_selfint(lifted, lam, records["lifted"])
    scale = leading_scale(2, lam)
    sign = records["lifted"][0].sign
    assert abs(value - sign * scale) / scale < 1e-3
