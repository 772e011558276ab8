"""Laplace-integral consistency harness.

    J(f) = int exp(-lam |f(x) - f(y)|^2 / 2) det(Df(x)^T ; Df(y)^T) dx dy

vanishes for every lam.  As lam grows the integrand concentrates on the
diagonal and on the pairs of preimages of double points; the two leading
contributions are

    diag     = -2 (2 pi / lam)^n * (integral-formula index)
    selfint  =  2 (2 pi / lam)^n * (sign sum)

and cancel, so their sum ``defect`` does not depend on lam once normalized by
``2 (2 pi / lam)^n``.  The self-intersection contribution is also measured
directly, by integrating J's integrand against a plateau window around each
preimage pair.  Its distance from ``selfint`` (``local_defect``) is the
higher-order remainder, which shrinks as lam grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OddDimension
from .immersion import Immersion
from .intersections import SolverConfig, find_self_intersections, index_by_signs
from .profiles import smooth_step
from .quadrature import (IndexReport, QuadratureConfig, index_by_integral,
                         integrate_adaptive)

LAPLACE_CONFIG = QuadratureConfig(abs_tol=1e-3, rel_tol=1e-3, rule_order=7, initial_cells=4)
TAIL_CUTOFF = 1e-14
# first axis: the straight part of the crossing; remaining axes: the lift cutoff plateau
WINDOW_RADIUS_FIRST = 0.3
WINDOW_RADIUS_REST = 0.45
WINDOW_INNER_FRACTION = 0.75
WINDOW_REL_TOL = 1e-4


def tail_width(lam: float) -> float:
    """Distance beyond which ``exp(-lam d^2 / 2)`` drops below ``TAIL_CUTOFF``."""
    return math.sqrt(2.0 * math.log(1.0 / TAIL_CUTOFF) / lam)


def leading_scale(n: int, lam: float) -> float:
    """``2 (2 pi / lam)^n``: the size of one unit of index in the expansion."""
    return 2.0 * (2.0 * math.pi / lam) ** n


def laplace_integrand(f: Immersion, lam: float, Z: np.ndarray) -> np.ndarray:
    n = f.n
    x, y = Z[:, :n], Z[:, n:]
    d = f.value(x) - f.value(y)
    A = np.swapaxes(f.jacobian(x), -1, -2)
    B = np.swapaxes(f.jacobian(y), -1, -2)
    det = np.linalg.det(np.concatenate([A, B], axis=-2))
    return det * np.exp(-0.5 * lam * np.einsum("ij,ij->i", d, d))


def _check(f: Immersion, lam: float):
    if f.n % 2:
        raise OddDimension(f"the Laplace integral is only antisymmetry-free for even n, got {f.n}")
    if not lam > 0:
        raise ValueError("lambda must be positive")


def _outer_radius(f: Immersion, lam: float, samples: int = 17) -> float:
    """Half-width of a cube that holds every ``y`` within reach of ``f(C)``."""
    r = f.support_halfwidth
    axis = np.linspace(-r, r, samples)
    grid = np.stack(np.meshgrid(*([axis] * f.n), indexing="ij"), -1).reshape(-1, f.n)
    reach = float(np.max(np.abs(f.value(grid)[:, :f.n])))
    # grid sampling can miss the extreme slightly; pad generously
    return max(r, reach) + 0.1 + tail_width(lam)


def laplace_J(f: Immersion, lam: float, cfg: QuadratureConfig | None = None,
              details: bool = False):
    """``J(f)`` by adaptive cubature.

    With C the support cube the integrand vanishes identically when both
    points lie outside C (the stacked differential is then ``[I 0; I 0]``),
    and it is symmetric under ``x <-> y`` for even n.  Hence
    ``J = 2 int_{C x B} - int_{C x C}`` with ``B`` the cube of half-width
    ``R`` beyond which the Gaussian factor is below 1e-14.

    Returns the value, or ``(value, error_estimate, evaluations)`` with
    ``details=True``.
    """
    _check(f, lam)
    cfg = cfg or LAPLACE_CONFIG
    n = f.n
    r = f.support_halfwidth + 0.01
    R = _outer_radius(f, lam)
    g = lambda Z: laplace_integrand(f, lam, Z)  # noqa: E731
    wide = integrate_adaptive(g, np.array([[-r, r]] * n + [[-R, R]] * n), cfg)
    inner = integrate_adaptive(g, np.array([[-r, r]] * (2 * n)), cfg)
    value = 2.0 * wide.value - inner.value
    if not details:
        return value
    return value, 2.0 * wide.error_estimate + inner.error_estimate, wide.evaluations + inner.evaluations


@dataclass
class LaplaceReport:
    lam: float
    J_value: float
    J_error: float
    diag_value: float
    selfint_value: float
    defect: float  # diag_value + selfint_value
    selfint_numeric: float  # windowed integral around the preimage pairs
    local_defect: float  # selfint_numeric - selfint_value
    diag_numeric: float  # J_value - selfint_numeric
    scale: float  # 2 (2 pi / lam)^n
    evaluations: int = 0

    @property
    def normalized_defect(self) -> float:
        return abs(self.defect) / self.scale

    @property
    def normalized_local_defect(self) -> float:
        return abs(self.local_defect) / self.scale

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam, "J_value": self.J_value, "J_error": self.J_error,
            "diag_value": self.diag_value, "selfint_value": self.selfint_value,
            "defect": self.defect, "normalized_defect": self.normalized_defect,
            "selfint_numeric": self.selfint_numeric, "local_defect": self.local_defect,
            "normalized_local_defect": self.normalized_local_defect,
            "diag_numeric": self.diag_numeric, "scale": self.scale,
            "evaluations": self.evaluations,
        }


def _window(offset: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Product of per-axis plateaus: 1 where every ``|offset_i| <= 0.75 r_i``, 0 beyond ``r_i``."""
    inner = WINDOW_INNER_FRACTION * radii
    u = (radii - np.abs(offset)) / (radii - inner)
    return np.prod(smooth_step(u)[0], axis=-1)


def window_radii(rec, n: int, radius=None) -> np.ndarray:
    """Per-axis window radii for one preimage pair, capped to keep the two windows apart."""
    if radius is None:
        r = np.full(n, WINDOW_RADIUS_REST)
        r[0] = WINDOW_RADIUS_FIRST
    else:
        r = np.broadcast_to(np.asarray(radius, float), (n,))
    gap = float(np.max(np.abs(np.asarray(rec.preimage_1) - np.asarray(rec.preimage_2))))
    return np.minimum(r, 0.45 * gap)


def windowed_selfint(f: Immersion, lam: float, records: list, cfg: QuadratureConfig | None = None,
                     radius=None):
    """Integral of J's integrand localized at each double point, both orders counted.

    A pair ``(p, q)`` gets the weight ``w(x - p) w(y - q)``, with ``w`` the
    per-axis plateau window of ``window_radii``.  Returns ``(value, evaluations)``.
    """
    _check(f, lam)
    n = f.n
    total, evals = 0.0, 0
    tol = WINDOW_REL_TOL * leading_scale(n, lam) / 2
    cfg = cfg or QuadratureConfig(abs_tol=tol, rel_tol=1e-12, rule_order=5, initial_cells=2)
    for rec in records:
        p = np.asarray(rec.preimage_1, float)
        q = np.asarray(rec.preimage_2, float)
        radii = window_radii(rec, n, radius)

        def g(Z, p=p, q=q, radii=radii):
            w = _window(Z[:, :n] - p, radii) * _window(Z[:, n:] - q, radii)
            return w * laplace_integrand(f, lam, Z)

        box = np.concatenate([np.stack([p - radii, p + radii], 1),
                              np.stack([q - radii, q + radii], 1)])
        res = integrate_adaptive(g, box, cfg)
        # the integrand is symmetric, so (q, p) contributes the same
        total += 2.0 * res.value
        evals += res.evaluations
    return total, evals


def laplace_decomposition(f: Immersion, lam: float, cfg: QuadratureConfig | None = None,
                          solver: SolverConfig | None = None, records: list | None = None,
                          integral_index: IndexReport | None = None) -> LaplaceReport:
    """Leading-order diagonal and self-intersection terms of ``J`` at one ``lam``.

    ``records`` and ``integral_index`` may be passed in to reuse them across a
    sweep of ``lam`` values; they do not depend on ``lam``.
    """
    _check(f, lam)
    n = f.n
    if records is None:
        records = find_self_intersections(f, solver)
    if integral_index is None:
        integral_index = index_by_integral(f)
    signs = index_by_signs(f, solver, records=records).raw_value
    scale = leading_scale(n, lam)
    diag = -scale * integral_index.raw_value
    selfint = scale * signs
    J, J_err, evals = laplace_J(f, lam, cfg, details=True)
    local, local_evals = windowed_selfint(f, lam, records)
    return LaplaceReport(lam=float(lam), J_value=J, J_error=J_err, diag_value=diag,
                         selfint_value=selfint, defect=diag + selfint,
                         selfint_numeric=local, local_defect=local - selfint,
                         diag_numeric=J - local, scale=scale,
                         evaluations=evals + local_evals)
