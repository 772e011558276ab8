"""Smooth immersions R^n -> R^2n fixed at infinity, and their builders.

Every builder represents its map as the standard embedding plus a compactly
supported displacement, ``f(x) = (x, 0) + d(x)``.  Outside the support cube
the displacement is exactly zero, so the fixed-at-infinity property holds
bit-for-bit rather than up to rounding.

All evaluators accept a single point of shape ``(n,)`` or a batch ``(m, n)``
and return ``(2n,)`` / ``(2n, n)`` / ``(2n, n, n)`` arrays, with the batch
axis prepended for batch input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, PreimageMismatch
from .profiles import BumpFunction, Plateau, SignPlateau, SignRamp

# Classic bump loop: t * (1 - A * beta(t)) vanishes at t = +-1/2 because
# beta(1/2) = e^{-1/3}.
LOOP_AMPLITUDE = math.exp(1.0 / 3.0)
LOOP_HEIGHT = 0.5

# Flat-crossing loop: both branches are straight segments on ramp <= |t| <= inner
CROSSING_SLOPE_X = 1.5
CROSSING_SLOPE_Y = 1.5
CROSSING_BASE = 1.6
CROSSING_RAMP = 0.2
CROSSING_INNER = 0.8

STANDARD_CUTOFF = Plateau(0.5, 1.0)
# Odd, so phi(-t) != phi(t) on 0 < |t| < 1, and constant near t = +-1/2.
STANDARD_LIFT_BUMP = SignPlateau(1.5, CROSSING_RAMP, CROSSING_INNER, 1.0)
STANDARD_BUMP = BumpFunction(0.0, 1.0, 1.0)


DispFn = Callable[[np.ndarray], np.ndarray]


class Immersion:
    """A map R^n -> R^2n equal to ``(x, 0)`` whenever ``max|x_i| >= support_halfwidth``.

    ``disp``, ``disp_jac`` and ``disp_hess`` are batch callables on ``(m, n)``
    arrays returning the displacement and its first/second derivatives with
    shapes ``(m, 2n)``, ``(m, 2n, n)`` and ``(m, 2n, n, n)``.  If the
    derivative callables are omitted they fall back to Richardson-extrapolated
    central differences of ``disp``.
    """

    def __init__(self, n: int, disp: DispFn, disp_jac: DispFn | None = None,
                 disp_hess: DispFn | None = None, support_halfwidth: float = 1.0,
                 name: str = "immersion", fd_step: float = 1e-4):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = int(n)
        self.support_halfwidth = float(support_halfwidth)
        self.name = name
        self.fd_step = fd_step
        self._disp = disp
        self.analytic = disp_jac is not None and disp_hess is not None
        self._disp_jac = disp_jac if disp_jac is not None else self._fd_jac
        self._disp_hess = disp_hess if disp_hess is not None else self._fd_hess

    def __repr__(self):
        return f"Immersion(n={self.n}, name={self.name!r}, support={self.support_halfwidth})"

    @classmethod
    def from_value(cls, n: int, value: Callable, support_halfwidth: float = 1.0,
                   name: str = "user", fd_step: float = 1e-4) -> "Immersion":
        """Wrap a user-supplied batch value callable; derivatives are numeric."""
        def disp(X):
            return np.asarray(value(X), dtype=float) - _embed(X)
        return cls(n, disp, support_halfwidth=support_halfwidth, name=name, fd_step=fd_step)

    # -- evaluation ---------------------------------------------------------
    def _batch(self, x):
        X = np.asarray(x, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[-1] != self.n:
            raise DimensionMismatch(f"expected points in R^{self.n}, got shape {X.shape}")
        return X, single

    def value(self, x):
        X, single = self._batch(x)
        out = _embed(X) + self._disp(X)
        return out[0] if single else out

    def jacobian(self, x):
        X, single = self._batch(x)
        out = self._disp_jac(X) + _embed_jac(X.shape[0], self.n)
        return out[0] if single else out

    def hessian(self, x):
        X, single = self._batch(x)
        out = self._disp_hess(X)
        return out[0] if single else out

    def displacement(self, x):
        X, single = self._batch(x)
        out = self._disp(X)
        return out[0] if single else out

    def displacement_jacobian(self, x):
        X, single = self._batch(x)
        out = self._disp_jac(X)
        return out[0] if single else out

    # -- numeric fallback ---------------------------------------------------
    def _fd_jac(self, X):
        h = self.fd_step

        def central(step):
            cols = []
            for k in range(self.n):
                e = np.zeros(self.n)
                e[k] = step
                cols.append((self._disp(X + e) - self._disp(X - e)) / (2 * step))
            return np.stack(cols, axis=-1)

        return (4.0 * central(h / 2) - central(h)) / 3.0

    def _fd_hess(self, X):
        h = self.fd_step
        n = self.n

        def second(step):
            H = np.empty(X.shape[:1] + (2 * n, n, n))
            f0 = self._disp(X)
            for k in range(n):
                ek = np.zeros(n)
                ek[k] = step
                H[:, :, k, k] = (self._disp(X + ek) - 2 * f0 + self._disp(X - ek)) / step**2
                for l in range(k + 1, n):
                    el = np.zeros(n)
                    el[l] = step
                    v = (self._disp(X + ek + el) - self._disp(X + ek - el)
                         - self._disp(X - ek + el) + self._disp(X - ek - el)) / (4 * step**2)
                    H[:, :, k, l] = v
                    H[:, :, l, k] = v
            return H

        return (4.0 * second(h / 2) - second(h)) / 3.0


def _embed(X):
    X = np.atleast_2d(X)
    return np.concatenate([X, np.zeros_like(X)], axis=-1)


def _embed_jac(m: int, n: int):
    J = np.zeros((m, 2 * n, n))
    J[:, np.arange(n), np.arange(n)] = 1.0
    return J


# -- builders -----------------------------------------------------------------

def trivial_immersion(n: int) -> Immersion:
    """The standard embedding ``x -> (x, 0)``; identity of the concatenation group."""
    if n < 1:
        raise ValueError("n must be positive")

    def disp(X):
        return np.zeros(X.shape[:1] + (2 * n,))

    def jac(X):
        return np.zeros(X.shape[:1] + (2 * n, n))

    def hess(X):
        return np.zeros(X.shape[:1] + (2 * n, n, n))

    return Immersion(n, disp, jac, hess, support_halfwidth=1.0, name=f"trivial({n})")


def one_loop_curve(slope_x: float = CROSSING_SLOPE_X, slope_y: float = CROSSING_SLOPE_Y,
                   base: float = CROSSING_BASE, ramp: float = CROSSING_RAMP,
                   inner: float = CROSSING_INNER) -> Immersion:
    """Long plane curve with a single transversal double point at ``t = -1/2, 1/2``.

    With ``P`` a plateau (1 on ``|t| <= inner``, 0 beyond 1) and ``T`` a smooth
    sign (``+-1`` for ``|t| >= ramp``)::

        x(t) = (1 - P) t + P a (t - T/2)
        y(t) = P (base - b t T)

    ``x`` is odd and ``y`` even and strictly decreasing in ``|t|`` on (0, 1), so
    double points pair ``t`` with ``-t`` at zeros of ``x``; the only one is
    ``t = 1/2``.  On ``ramp <= |t| <= inner`` both branches are straight
    lines, which makes the crossing exactly affine in a neighbourhood.
    """
    a, b, c0 = float(slope_x), float(slope_y), float(base)
    if not (a > 0 and b > 0 and c0 > b):
        raise ValueError("need slope_x > 0, slope_y > 0 and base > slope_y")
    if not 0 < ramp < 0.5 < inner < 1:
        raise ValueError("need 0 < ramp < 1/2 < inner < 1")
    P = Plateau(float(inner), 1.0)
    T = SignRamp(float(ramp))

    def parts(X):
        t = X[:, 0]
        p, p1, p2 = P.all(t)
        s, s1, s2 = T.all(t)
        # x - t = p * e,  y = p * q
        e, e1, e2 = a * (t - s / 2) - t, a * (1 - s1 / 2) - 1, -a * s2 / 2
        q, q1, q2 = c0 - b * t * s, -b * (s + t * s1), -b * (2 * s1 + t * s2)
        return (p, p1, p2), (e, e1, e2), (q, q1, q2)

    def disp(X):
        (p, _, _), (e, _, _), (q, _, _) = parts(X)
        return np.stack([p * e, p * q], axis=-1)

    def jac(X):
        (p, p1, _), (e, e1, _), (q, q1, _) = parts(X)
        return np.stack([p1 * e + p * e1, p1 * q + p * q1], axis=-1)[:, :, None]

    def hess(X):
        (p, p1, p2), (e, e1, e2), (q, q1, q2) = parts(X)
        return np.stack([p2 * e + 2 * p1 * e1 + p * e2,
                         p2 * q + 2 * p1 * q1 + p * q2], axis=-1)[:, :, None, None]

    return Immersion(1, disp, jac, hess, support_halfwidth=1.0, name="one_loop_curve")


def bump_loop_curve(amplitude: float = LOOP_AMPLITUDE, height: float = LOOP_HEIGHT) -> Immersion:
    """Long plane curve ``t -> (t - A t b(t), H b(t))`` with one double point.

    ``b`` is the standard bump on [-1, 1].  Same symmetry argument as
    ``one_loop_curve``; with the default amplitude the double point sits at
    ``t = -1/2, 1/2``.  Curved everywhere, unlike ``one_loop_curve``.
    """
    A, H = float(amplitude), float(height)
    beta = STANDARD_BUMP

    def disp(X):
        t = X[:, 0]
        b = beta.value(t)
        return np.stack([-A * t * b, H * b], axis=-1)

    def jac(X):
        t = X[:, 0]
        b, b1, _ = beta.all(t)
        return np.stack([-A * (b + t * b1), H * b1], axis=-1)[:, :, None]

    def hess(X):
        t = X[:, 0]
        _, b1, b2 = beta.all(t)
        return np.stack([-A * (2 * b1 + t * b2), H * b2], axis=-1)[:, :, None, None]

    return Immersion(1, disp, jac, hess, support_halfwidth=1.0, name="bump_loop_curve")


def lift(f: Immersion, bump=STANDARD_LIFT_BUMP, cutoff=STANDARD_CUTOFF,
         check: bool = True) -> Immersion:
    """Inductive step ``f^(n) -> f^(n+1)`` carrying a double point at ``(-1/2, 0..), (1/2, 0..)``.

    With ``s = x_{n+1}``, the new map is

        (x' + c(s) d_top(x'),  s,  c(s) d_bot(x'),  s c(s) phi(x_1))

    where ``d`` is the displacement of ``f``, ``c`` a cutoff with
    ``c(0) = 1``, ``c = 0`` for ``|s| >= 1``, and ``phi = bump`` any profile
    from ``immidx.profiles``.  At ``s = 0`` this is the
    classical lift; the cutoff makes the result fixed at infinity in the new
    direction as well.  The last coordinate separates all double points of the
    intermediate maps except at ``s = 0``, given ``phi(-t) != phi(t)``.
    """
    n = f.n
    if check:
        p = np.zeros(n)
        q = np.zeros(n)
        p[0], q[0] = -0.5, 0.5
        gap = np.max(np.abs(f.value(p) - f.value(q)))
        if not gap < 1e-10:
            raise PreimageMismatch(f"f(-1/2,0..) != f(1/2,0..) (gap {gap:.3e})")
        if bump.value(-0.5) == bump.value(0.5):
            raise PreimageMismatch("bump must separate t = -1/2 and t = 1/2")
    N = n + 1
    top = slice(0, n)
    bot = slice(n + 1, 2 * n + 1)
    last = 2 * n + 1
    support = max(f.support_halfwidth, abs(cutoff.support[0]), abs(cutoff.support[1]),
                  abs(bump.support[0]), abs(bump.support[1]))

    def disp(X):
        xs, s = X[:, :n], X[:, n]
        d = f.displacement(xs)
        c = cutoff.value(s)
        out = np.zeros((X.shape[0], 2 * N))
        out[:, top] = c[:, None] * d[:, :n]
        out[:, bot] = c[:, None] * d[:, n:]
        out[:, last] = s * c * bump.value(X[:, 0])
        return out

    def jac(X):
        xs, s = X[:, :n], X[:, n]
        d = f.displacement(xs)
        D = f.displacement_jacobian(xs)
        c, c1, _ = cutoff.all(s)
        ph, ph1, _ = bump.all(X[:, 0])
        psi, psi1 = s * c, c + s * c1
        out = np.zeros((X.shape[0], 2 * N, N))
        for rows, half in ((top, slice(0, n)), (bot, slice(n, 2 * n))):
            out[:, rows, :n] = c[:, None, None] * D[:, half, :]
            out[:, rows, n] = c1[:, None] * d[:, half]
        out[:, last, 0] = psi * ph1
        out[:, last, n] = psi1 * ph
        return out

    def hess(X):
        xs, s = X[:, :n], X[:, n]
        d = f.displacement(xs)
        D = f.displacement_jacobian(xs)
        Hf = f.hessian(xs)
        c, c1, c2 = cutoff.all(s)
        ph, ph1, ph2 = bump.all(X[:, 0])
        psi, psi1, psi2 = s * c, c + s * c1, 2 * c1 + s * c2
        out = np.zeros((X.shape[0], 2 * N, N, N))
        for rows, half in ((top, slice(0, n)), (bot, slice(n, 2 * n))):
            out[:, rows, :n, :n] = c[:, None, None, None] * Hf[:, half]
            cross = c1[:, None, None] * D[:, half, :]
            out[:, rows, :n, n] = cross
            out[:, rows, n, :n] = cross
            out[:, rows, n, n] = c2[:, None] * d[:, half]
        out[:, last, 0, 0] = psi * ph2
        out[:, last, 0, n] = psi1 * ph1
        out[:, last, n, 0] = psi1 * ph1
        out[:, last, n, n] = psi2 * ph
        return out

    return Immersion(N, disp, jac, hess, support_halfwidth=support, name=f"lift({f.name})")


def concat(f1: Immersion, f2: Immersion) -> Immersion:
    """Group product: ``f1`` squeezed into ``x_1 <= 0``, ``f2`` into ``x_1 >= 0``.

    The domain substitution ``x_1 -> 2 x_1 + 1`` (resp. ``2 x_1 - 1``) is
    paired with the ambient affine map ``z_1 -> (z_1 - 1)/2`` (resp.
    ``(z_1 + 1)/2``) so that the product is again fixed at infinity and the
    two halves have disjoint images.  That ambient map preserves orientation,
    hence intersection signs.  On displacements it is a scaling of the first
    ambient row by 1/2.
    """
    if f1.n != f2.n:
        raise DimensionMismatch(f"cannot concatenate n={f1.n} with n={f2.n}")
    for f in (f1, f2):
        if f.support_halfwidth > 1.0:
            raise ValueError(f"{f.name}: concatenation needs support_halfwidth <= 1")
    n = f1.n
    row_scale = np.ones(2 * n)
    row_scale[0] = 0.5
    col_scale = np.ones(n)
    col_scale[0] = 2.0

    def pieces(X):
        left = X[:, 0] <= 0.0
        U = X.copy()
        U[:, 0] = np.where(left, 2 * X[:, 0] + 1, 2 * X[:, 0] - 1)
        return left, U

    def combine(fn1, fn2, X):
        left, U = pieces(X)
        out = None
        for mask, fn in ((left, fn1), (~left, fn2)):
            if not np.any(mask):
                continue
            v = fn(U[mask])
            if out is None:
                out = np.zeros((X.shape[0],) + v.shape[1:])
            out[mask] = v
        return out

    def disp(X):
        return combine(f1.displacement, f2.displacement, X) * row_scale

    def jac(X):
        D = combine(f1.displacement_jacobian, f2.displacement_jacobian, X)
        return D * row_scale[:, None] * col_scale

    def hess(X):
        H = combine(f1.hessian, f2.hessian, X)
        return H * row_scale[:, None, None] * col_scale[:, None] * col_scale

    return Immersion(n, disp, jac, hess, support_halfwidth=1.0, name=f"concat({f1.name},{f2.name})")


def perturb(f: Immersion, amplitude: float = 0.01, center=None, halfwidth: float = 0.3,
            component: int = 0) -> Immersion:
    """Add ``amplitude * prod_i bump((x_i - c_i)/w)`` to one ambient coordinate.

    Small amplitudes keep the map an immersion, so the result is regularly
    homotopic to ``f``.
    """
    n = f.n
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if center.shape != (n,):
        raise DimensionMismatch("center must have length n")
    if not 0 <= component < 2 * n:
        raise ValueError("component out of range")
    bumps = [BumpFunction(float(c), halfwidth, 1.0) for c in center]
    reach = float(np.max(np.abs(center)) + halfwidth)
    support = max(f.support_halfwidth, reach)

    def factors(X):
        return [b.all(X[:, i]) for i, b in enumerate(bumps)]

    def disp(X):
        out = f.displacement(X).copy()
        prod = np.ones(X.shape[0])
        for v, _, _ in factors(X):
            prod = prod * v
        out[:, component] += amplitude * prod
        return out

    def jac(X):
        out = f.displacement_jacobian(X).copy()
        F = factors(X)
        for k in range(n):
            g = np.ones(X.shape[0])
            for i, (v, v1, _) in enumerate(F):
                g = g * (v1 if i == k else v)
            out[:, component, k] += amplitude * g
        return out

    def hess(X):
        out = f.hessian(X).copy()
        F = factors(X)
        for k in range(n):
            for l in range(n):
                g = np.ones(X.shape[0])
                for i, (v, v1, v2) in enumerate(F):
                    if i == k == l:
                        g = g * v2
                    elif i == k or i == l:
                        g = g * v1
                    else:
                        g = g * v
                out[:, component, k, l] += amplitude * g
        return out

    return Immersion(n, disp, jac, hess, support_halfwidth=support, name=f"perturb({f.name})")


def reflect(f: Immersion, component: int | None = None) -> Immersion:
    """Negate one ambient coordinate of the normal block (default: the last).

    Restricted to the normal block ``n..2n-1`` so the result stays fixed at
    infinity.  For n = 1 this is the mirror ``f_2 -> -f_2``.
    """
    n = f.n
    component = 2 * n - 1 if component is None else int(component)
    if not n <= component < 2 * n:
        raise ValueError("reflect only acts on the normal coordinates n..2n-1")
    sgn = np.ones(2 * n)
    sgn[component] = -1.0

    def disp(X):
        return f.displacement(X) * sgn

    def jac(X):
        return f.displacement_jacobian(X) * sgn[:, None]

    def hess(X):
        return f.hessian(X) * sgn[:, None, None]

    return Immersion(n, disp, jac, hess, support_halfwidth=f.support_halfwidth,
                     name=f"reflect({f.name})")


# -- derivative validation ----------------------------------------------------

@dataclass
class DerivativeReport:
    max_jacobian_dev: float
    max_hessian_dev: float
    worst_jacobian_point: np.ndarray = field(repr=False)
    worst_hessian_point: np.ndarray = field(repr=False)
    samples: int = 0
    h: float = 0.0

    @property
    def max_deviation(self) -> float:
        return max(self.max_jacobian_dev, self.max_hessian_dev)


def validate_derivatives(f: Immersion, samples: int = 200, h: float = 1e-5,
                         seed: int = 0) -> DerivativeReport:
    """Compare analytic derivatives with central differences at random points.

    Each central difference gets one Richardson level, ``(4 D(h/2) - D(h))/3``,
    so the oracle's own truncation error is O(h^4).  The Jacobian is checked
    against differences of ``value``; the Hessian against differences of the
    (already checked) Jacobian, which keeps roundoff at ``eps/h``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    n = f.n
    if samples == 0:
        return DerivativeReport(0.0, 0.0, np.zeros(n), np.zeros(n), 0, h)
    rng = np.random.default_rng(seed)
    r = f.support_halfwidth
    X = rng.uniform(-r, r, size=(samples, n))
    J = f.jacobian(X)
    H = f.hessian(X)

    def central(fn, k, step):
        e = np.zeros(n)
        e[k] = step
        return (fn(X + e) - fn(X - e)) / (2 * step)

    J_fd = np.empty_like(J)
    H_fd = np.empty_like(H)
    for k in range(n):
        J_fd[:, :, k] = (4 * central(f.value, k, h / 2) - central(f.value, k, h)) / 3
        H_fd[:, :, :, k] = (4 * central(f.jacobian, k, h / 2) - central(f.jacobian, k, h)) / 3
    dj = np.max(np.abs(J - J_fd), axis=(1, 2))
    dh = np.max(np.abs(H - H_fd), axis=(1, 2, 3))
    ij, ih = int(np.argmax(dj)), int(np.argmax(dh))
    return DerivativeReport(float(dj[ij]), float(dh[ih]), X[ij], X[ih], samples, h)
