import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from immidx import linalg
from immidx.errors import OddDimension
from immidx.stiefel_form import (closedness_check, exterior_derivative_terms, form_constant,
                                 integrand_direct, integrand_pullback, omega_eval,
                                 whitney_integrand_1d)

mat = st.floats(-2, 2, allow_nan=False)


def det2(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def omega_naive(phi, T):
    """n = 2 term-by-term sum with hand-written 2 x 2 determinants."""
    U = phi.T @ phi
    u = det2(U) ** -0.5
    Ui = np.linalg.inv(U)
    total = 0.0
    for i1, i2 in itertools.product(range(2), repeat=2):
        for sigma in [(0, 1), (1, 0)]:
            i = (i1, i2)
            for J in itertools.combinations(range(4), 2):
                comp = [r for r in range(4) if r not in J]
                M = det2([phi[comp[0]], phi[comp[1]]])
                sign = (-1) ** (1 + (J[0] + 1) + (J[1] + 1))
                wedge = det2([[T[b][J[a], i[sigma[a]]] for b in range(2)] for a in range(2)])
                total += Ui[i1, i2] * sign * M * wedge
    return -1 / (8 * np.pi) * u * total


def full_rank(a):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.linalg.det(a.T @ a) > 1e-2


def test_constant():
    assert form_constant(2) == pytest.approx(-1 / (8 * np.pi))
    assert form_constant(4) == pytest.approx(-1 / (32 * np.pi ** 2 * 2))
    with pytest.raises(OddDimension):
        form_constant(3)


def test_matches_naive_at_standard_point(rng):
    phi = np.vstack([np.eye(2), np.zeros((2, 2))])
    for _ in range(20):
        T = [rng.normal(size=(4, 2)) for _ in range(2)]
        assert omega_eval(phi, T) == pytest.approx(omega_naive(phi, T), rel=1e-12, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 2), elements=mat).filter(full_rank),
       arrays(np.float64, (2, 4, 2), elements=mat))
def test_matches_naive_random(phi, T):
    assert omega_eval(phi, list(T)) == pytest.approx(omega_naive(phi, list(T)), rel=1e-9, abs=1e-12)


# singular wedge matrices (e.g. a zero tangent) make LAPACK warn while returning 0
@pytest.mark.filterwarnings("ignore:divide by zero:RuntimeWarning")
@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 2), elements=mat).filter(full_rank),
       arrays(np.float64, (2, 4, 2), elements=mat), st.floats(-5, 5))
def test_multilinear_and_alternating(phi, T, c):
    T1, T2 = T
    base = omega_eval(phi, [T1, T2])
    assert omega_eval(phi, [c * T1, T2]) == pytest.approx(c * base, rel=1e-12, abs=1e-12)
    assert omega_eval(phi, [T2, T1]) == pytest.approx(-base, rel=1e-13, abs=1e-15)
    assert omega_eval(phi, [T1, T1]) == pytest.approx(0.0, abs=1e-12)
    assert omega_eval(phi, [np.zeros_like(T1), T2]) == 0.0


def test_alternating_n4(rng):
    phi = rng.normal(size=(8, 4))
    T = [rng.normal(size=(8, 4)) for _ in range(4)]
    base = omega_eval(phi, T)
    assert omega_eval(phi, [T[1], T[0], T[2], T[3]]) == pytest.approx(-base, rel=1e-10)
    assert omega_eval(phi, [T[0], T[0], T[2], T[3]]) == pytest.approx(0.0, abs=1e-10 * abs(base))


def test_batched_equals_loop(rng):
    phi = rng.normal(size=(7, 4, 2))
    T = rng.normal(size=(7, 2, 4, 2))
    batched = omega_eval(phi, T)
    for k in range(7):
        assert batched[k] == pytest.approx(omega_eval(phi[k], list(T[k])), rel=1e-12)


def test_odd_rejected(rng):
    with pytest.raises(OddDimension):
        omega_eval(rng.normal(size=(6, 3)), [rng.normal(size=(6, 3))] * 3)


def test_path_equality(examples, rng):
    for name, f in examples.items():
        if f.n % 2:
            continue
        r = f.support_halfwidth
        X = rng.uniform(-r, r, size=(100, f.n))
        a, b = integrand_pullback(f, X), integrand_direct(f, X)
        assert np.all(np.abs(a - b) <= 1e-8 * np.maximum(1.0, np.abs(b))), name


def test_path_equality_n4():
    from immidx.immersion import lift
    f = lift(lift(lift(__import__("immidx").one_loop_curve())), check=False)
    X = np.random.default_rng(3).uniform(-1, 1, size=(20, 4))
    a, b = integrand_pullback(f, X), integrand_direct(f, X)
    assert np.all(np.abs(a - b) <= 1e-8 * np.maximum(1.0, np.abs(b)))


def test_integrand_vanishes_off_support(lifted, rng):
    X = rng.uniform(1.0, 2.0, size=(50, 2)) * rng.choice([-1, 1], size=(50, 2))
    assert np.all(integrand_pullback(lifted, X) == 0.0)
    assert np.all(integrand_direct(lifted, X) == 0.0)


def test_trivial_integrand_and_g(examples, rng):
    f = examples["trivial2"]
    X = rng.uniform(-1, 1, size=(30, 2))
    assert np.all(integrand_pullback(f, X) == 0.0)
    assert np.all(integrand_direct(f, X) == 0.0)
    assert linalg.gram(f.jacobian(X[0])).u == 1.0


def test_whitney_integrand(examples):
    t = np.linspace(-2, 2, 101)
    assert np.all(whitney_integrand_1d(examples["one_loop_curve"], t[np.abs(t) >= 1]) == 0.0)
    from immidx import trivial_immersion
    assert np.all(whitney_integrand_1d(trivial_immersion(1), t) == 0.0)
    with pytest.raises(ValueError):
        whitney_integrand_1d(examples["lifted"], t)


def test_closedness():
    res = closedness_check(n=2, samples=100, seed=7)
    assert res.passed and res.max_abs_d_omega < 1e-4


def test_closedness_n4():
    res = closedness_check(n=4, samples=3, seed=1)
    assert res.passed


def test_perturbed_form_detected():
    res = closedness_check(n=2, samples=20, seed=7, perturbed=True)
    assert not res.passed and res.max_abs_d_omega > 1e-2


def test_repeated_tangent(rng):
    phi = rng.uniform(-2, 2, size=(4, 2))
    T0 = rng.uniform(-2, 2, size=(4, 2))
    r = exterior_derivative_terms(phi, [T0, T0, rng.uniform(-2, 2, size=(4, 2))])
    assert abs(r.value) < 1e-7 * max(r.scale, 1.0)


def test_fd_arguments(rng):
    phi = rng.normal(size=(4, 2))
    T = [rng.normal(size=(4, 2)) for _ in range(3)]
    with pytest.raises(ValueError):
        exterior_derivative_terms(phi, T[:2])
    with pytest.raises(ValueError):
        exterior_derivative_terms(phi, T, h=0.0)
