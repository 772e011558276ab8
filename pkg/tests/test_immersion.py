import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from immidx import immersion as im
from immidx.errors import DimensionMismatch, PreimageMismatch
from immidx.profiles import BumpFunction


def far_points(rng, n, r, count=100):
    """Points with sup-norm in [r, 2r]."""
    X = rng.uniform(-2 * r, 2 * r, size=(count, n))
    k = rng.integers(0, n, size=count)
    X[np.arange(count), k] = rng.choice([-1, 1], size=count) * rng.uniform(r, 2 * r, size=count)
    return np.clip(X, -2 * r, 2 * r)


def test_fixed_at_infinity(examples, rng):
    for name, f in examples.items():
        X = far_points(rng, f.n, f.support_halfwidth)
        assert np.all(np.abs(X).max(axis=1) >= f.support_halfwidth)
        expected = np.concatenate([X, np.zeros_like(X)], axis=1)
        assert np.array_equal(f.value(X), expected), name
        assert np.all(f.hessian(X) == 0.0), name


def test_hessian_symmetric(examples, rng):
    for name, f in examples.items():
        X = rng.uniform(-1, 1, size=(50, f.n))
        H = f.hessian(X)
        np.testing.assert_allclose(H, np.swapaxes(H, -1, -2), atol=1e-12, err_msg=name)


@pytest.mark.parametrize("name", ["one_loop_curve", "bump_loop_curve", "lifted", "lifted_bump_loop",
                                  "perturbed_lifted", "concat_lifted_lifted", "concat_curves",
                                  "reflected_lifted", "trivial3"])
def test_is_immersion_on_grid(examples, name):
    f = examples[name]
    m = {1: 2001, 2: 161, 3: 33}[f.n]
    axis = np.linspace(-1.0, 1.0, m)
    X = np.stack(np.meshgrid(*([axis] * f.n), indexing="ij"), -1).reshape(-1, f.n)
    D = f.jacobian(X)
    detU = np.linalg.det(np.swapaxes(D, -1, -2) @ D)
    assert detU.min() > 1e-2


def test_one_loop_curve_double_point(curve):
    a = curve.value(np.array([-0.5]))
    b = curve.value(np.array([0.5]))
    np.testing.assert_allclose(a, b, atol=1e-14)
    # straight branches through the crossing
    t = np.linspace(0.25, 0.75, 11)[:, None]
    assert np.all(curve.hessian(t) == 0.0)


def test_lift_double_point(lifted):
    np.testing.assert_allclose(lifted.value([-0.5, 0.0]), lifted.value([0.5, 0.0]), atol=1e-14)


def test_validate_derivatives_all(examples):
    for name, f in examples.items():
        rep = im.validate_derivatives(f, h=1e-5)
        assert rep.max_deviation < 1e-5, name


def test_validate_detects_wrong_jacobian(curve):
    bad = im.Immersion(1, curve.displacement,
                       lambda X: 1.01 * curve.displacement_jacobian(X),
                       lambda X: curve.hessian(X))
    assert im.validate_derivatives(bad).max_deviation > 1e-3


def test_from_value_fallback(curve):
    g = im.Immersion.from_value(1, curve.value)
    assert not g.analytic
    X = np.linspace(-0.95, 0.95, 41)[:, None]
    np.testing.assert_allclose(g.jacobian(X), curve.jacobian(X), atol=1e-7)
    np.testing.assert_allclose(g.hessian(X), curve.hessian(X), atol=1e-4)


def test_dimension_errors(lifted, curve):
    with pytest.raises(DimensionMismatch):
        lifted.value(np.zeros(3))
    with pytest.raises(DimensionMismatch):
        im.concat(lifted, curve)
    with pytest.raises(DimensionMismatch):
        im.perturb(lifted, center=[0.0])


def test_lift_preimage_checks(curve):
    shifted = im.one_loop_curve(base=2.0)
    im.lift(shifted)  # still symmetric: fine
    asym = im.Immersion(1, lambda X: np.stack([0.1 * X[:, 0] * BumpFunction().value(X[:, 0]),
                                               BumpFunction().value(X[:, 0])], -1))
    with pytest.raises(PreimageMismatch):
        im.lift(asym)
    with pytest.raises(PreimageMismatch):
        im.lift(curve, bump=BumpFunction(0.0, 1.0))


def test_builder_argument_checks(lifted):
    with pytest.raises(ValueError):
        im.one_loop_curve(ramp=0.6)
    with pytest.raises(ValueError):
        im.one_loop_curve(base=1.0)
    with pytest.raises(ValueError):
        im.reflect(lifted, component=0)
    with pytest.raises(ValueError):
        im.trivial_immersion(0)


def test_concat_halves(examples):
    f = examples["concat_curves"]
    g = examples["one_loop_curve"]
    t = np.linspace(-1, 0, 21)[:, None]
    # left half is g reparametrised by x -> 2x + 1, shifted by z1 -> (z1 - 1)/2
    expected = g.value(2 * t + 1)
    expected[:, 0] = (expected[:, 0] - 1) / 2
    np.testing.assert_allclose(f.value(t), expected, atol=1e-14)


def test_reflect_involution(lifted, rng):
    X = rng.uniform(-1, 1, size=(20, 2))
    np.testing.assert_allclose(im.reflect(im.reflect(lifted)).value(X), lifted.value(X))


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_perturbation_is_small(x, y):
    f = im.lift(im.one_loop_curve())
    g = im.perturb(f, amplitude=0.01, center=[0.3, 0.2], halfwidth=0.3, component=2)
    p = np.array([x, y])
    assert np.max(np.abs(g.value(p) - f.value(p))) <= 0.01 + 1e-15
