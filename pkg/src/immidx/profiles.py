"""C-infinity one-variable profiles with analytic first and second derivatives.

Every profile exposes ``all(t) -> (value, d/dt, d2/dt2)`` on arrays and a
``support`` interval outside which all three vanish identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# exp(-1/u) underflows to exactly 0 below this; its derivatives stay finite
_U_MIN = 1.0 / 700.0


def _h(u):
    """``exp(-1/u)`` for ``u > 0`` (else 0) with its first two derivatives."""
    u = np.asarray(u, dtype=float)
    pos = u > _U_MIN
    inv = 1.0 / np.where(pos, u, 1.0)
    h = np.where(pos, np.exp(-inv), 0.0)
    h1 = h * inv * inv
    return h, h1, h1 * inv * (inv - 2.0)


def smooth_step(u):
    """Transition 0 -> 1 on [0, 1], flat to all orders at both ends.

    ``s = h(u) / (h(u) + h(1 - u))``; returns ``(s, s', s'')``.  Only points
    strictly inside (0, 1) pay for the exponentials.
    """
    u = np.asarray(u, dtype=float)
    shape = u.shape
    u = u.reshape(-1)
    s = (u >= 1.0).astype(float)
    s1 = np.zeros(u.shape)
    s2 = np.zeros(u.shape)
    mid = (u > 0.0) & (u < 1.0)
    if not mid.any():
        return s.reshape(shape), s1.reshape(shape), s2.reshape(shape)
    um = u[mid]
    g, g1, g2 = _h(um)
    k, k1, k2 = _h(1.0 - um)
    k1 = -k1  # chain rule for the argument 1 - u
    den = g + k
    num = g1 * k - g * k1
    s[mid] = g / den
    s1[mid] = num / den**2
    s2[mid] = (g2 * k - g * k2) / den**2 - 2.0 * num * (g1 + k1) / den**3
    return s.reshape(shape), s1.reshape(shape), s2.reshape(shape)


@dataclass(frozen=True)
class BumpFunction:
    """``amplitude * exp(1 - 1/(1 - s^2))`` with ``s = (t - center)/halfwidth``.

    Peak value is ``amplitude`` at ``center``; identically zero for
    ``|t - center| >= halfwidth``.
    """

    center: float = 0.0
    halfwidth: float = 1.0
    amplitude: float = 1.0

    def all(self, t):
        s = (np.asarray(t, dtype=float) - self.center) / self.halfwidth
        inside = np.abs(s) < 1.0
        s_in = np.where(inside, s, 0.0)
        w = 1.0 - s_in * s_in
        p = np.where(inside, np.exp(1.0 - 1.0 / w), 0.0)
        q1 = -2.0 * s_in / (w * w)
        q2 = -2.0 / (w * w) - 8.0 * s_in * s_in / (w * w * w)
        a, h = self.amplitude, self.halfwidth
        return a * p, a * p * q1 / h, a * p * (q1 * q1 + q2) / h**2

    def value(self, t):
        return self.all(t)[0]

    def derivative(self, t):
        return self.all(t)[1]

    def second_derivative(self, t):
        return self.all(t)[2]

    @property
    def support(self) -> tuple:
        return (self.center - self.halfwidth, self.center + self.halfwidth)


@dataclass(frozen=True)
class Plateau:
    """Even cutoff: ``amplitude`` on ``|t| <= inner``, 0 on ``|t| >= outer``, monotone between."""

    inner: float = 0.5
    outer: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0 <= self.inner < self.outer:
            raise ValueError("need 0 <= inner < outer")

    def all(self, t):
        t = np.asarray(t, dtype=float)
        w = self.outer - self.inner
        s, s1, s2 = smooth_step((self.outer - np.abs(t)) / w)
        a = self.amplitude
        return a * s, -a * np.sign(t) * s1 / w, a * s2 / w**2

    def value(self, t):
        return self.all(t)[0]

    @property
    def support(self) -> tuple:
        return (-self.outer, self.outer)


@dataclass(frozen=True)
class SignRamp:
    """Odd step: -1 for ``t <= -ramp``, +1 for ``t >= ramp``.  Not compactly supported."""

    ramp: float = 0.1

    def all(self, t):
        w = 2.0 * self.ramp
        s, s1, s2 = smooth_step((np.asarray(t, dtype=float) + self.ramp) / w)
        return 2.0 * s - 1.0, 2.0 * s1 / w, 2.0 * s2 / w**2

    def value(self, t):
        return self.all(t)[0]


@dataclass(frozen=True)
class SignPlateau:
    """Odd profile ``amplitude * sign_ramp(t) * plateau(t)``.

    Constant ``+-amplitude`` on ``ramp <= |t| <= inner``, zero for
    ``|t| >= outer``, nonzero on ``0 < |t| < outer`` with nonzero slope at 0.
    """

    amplitude: float = 1.5
    ramp: float = 0.1
    inner: float = 0.9
    outer: float = 1.0

    def all(self, t):
        T, T1, T2 = SignRamp(self.ramp).all(t)
        P, P1, P2 = Plateau(self.inner, self.outer, self.amplitude).all(t)
        return T * P, T1 * P + T * P1, T2 * P + 2 * T1 * P1 + T * P2

    def value(self, t):
        return self.all(t)[0]

    @property
    def support(self) -> tuple:
        return (-self.outer, self.outer)
