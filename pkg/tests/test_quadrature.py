import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from immidx.errors import BudgetWarning, OddDimension
from immidx.quadrature import (QuadratureConfig, index_by_integral, index_whitney_1d,
                               integrate_adaptive, rounded_report)
from immidx.stiefel_form import integrand_pullback


def test_constant_volume():
    res = integrate_adaptive(lambda X: np.ones(len(X)), [[0, 1], [0, 1]])
    assert res.value == pytest.approx(1.0, abs=1e-14) and res.converged


def test_polynomial():
    res = integrate_adaptive(lambda X: X[:, 0] ** 2 * X[:, 1] ** 2, [[0, 1], [0, 1]])
    assert res.value == pytest.approx(1 / 9, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 3), st.integers(1, 3))
def test_gaussian_boxes(a, w, d):
    g = lambda X: np.exp(-np.sum(X * X, axis=1))  # noqa: E731
    box = [[a, a + w]] * d
    exact = (0.5 * math.sqrt(math.pi) * (math.erf(a + w) - math.erf(a))) ** d
    res = integrate_adaptive(g, box, QuadratureConfig(abs_tol=1e-10, rel_tol=1e-10))
    assert res.value == pytest.approx(exact, abs=1e-9)


def test_adapts_to_kink():
    res = integrate_adaptive(lambda X: np.abs(X[:, 0] - 0.3), [[0, 1]],
                             QuadratureConfig(abs_tol=1e-9, rel_tol=1e-9))
    assert res.value == pytest.approx(0.3 ** 2 / 2 + 0.7 ** 2 / 2, abs=1e-8)
    assert res.subdivisions > 0


def test_budget_warning():
    cfg = QuadratureConfig(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=10)
    with pytest.warns(BudgetWarning):
        res = integrate_adaptive(lambda X: np.abs(X[:, 0] - 0.3) ** 0.5, [[0, 1]], cfg)
    assert not res.converged


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0)
    with pytest.raises(ValueError):
        QuadratureConfig(rule_order=2)
    with pytest.raises(ValueError):
        integrate_adaptive(lambda X: X[:, 0], [0, 1])


def test_rounding():
    r = rounded_report("integral", -0.99, 1e-5, 10, True)
    assert r.index == -1 and not r.ambiguous and r.residual == pytest.approx(0.01)
    r = rounded_report("integral", 0.5, 1e-5, 10, True)
    assert r.ambiguous and r.index is None


def test_whitney_curves(examples):
    for name, expected in [("one_loop_curve", -1), ("reflected_curve", 1), ("bump_loop_curve", -1),
                           ("concat_curves", -2)]:
        rep = index_whitney_1d(examples[name])
        assert rep.index == expected and rep.residual < 1e-6, name


def test_integral_trivial(examples):
    rep = index_by_integral(examples["trivial2"])
    assert rep.raw_value == 0.0 and rep.index == 0


def test_integral_odd_rejected(examples):
    with pytest.raises(OddDimension):
        index_by_integral(examples["trivial3"])


def test_against_midpoint_grid(lifted):
    # the integrand is smooth and compactly supported: the midpoint rule converges fast
    m = 512
    h = 2.0 / m
    axis = -1.0 + h * (np.arange(m) + 0.5)
    X = np.stack(np.meshgrid(axis, axis, indexing="ij"), -1).reshape(-1, 2)
    grid = float(np.sum(integrand_pullback(lifted, X)) * h * h)
    rep = index_by_integral(lifted)
    assert rep.raw_value == pytest.approx(grid, abs=1e-4)
    assert round(grid) == rep.index
