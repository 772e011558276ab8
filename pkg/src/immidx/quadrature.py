"""Globally adaptive tensor Gauss-Legendre cubature and the index integrals."""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import BudgetWarning, OddDimension
from .immersion import Immersion
from .parallel import map_rows
from .stiefel_form import integrand_pullback, whitney_integrand_1d

ROUNDING_LIMIT = 0.1
DOMAIN_PAD = 0.05


@dataclass
class QuadratureConfig:
    abs_tol: float = 1e-4
    rel_tol: float = 1e-4
    max_subdivisions: int = 200_000
    rule_order: int = 7
    initial_cells: int = 1  # per axis, before adaptation

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 3 <= self.rule_order <= 15:
            raise ValueError("rule_order must lie in 3..15")
        if self.max_subdivisions < 0 or self.initial_cells < 1:
            raise ValueError("bad subdivision settings")


@dataclass
class IndexReport:
    method: str  # "sign-sum" | "integral" | "whitney-1d" | "parity"
    raw_value: float
    index: int | None
    residual: float
    error_estimate: float = 0.0
    evaluations: int = 0
    converged: bool = True
    ambiguous: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


class QuadResult(NamedTuple):
    value: float
    error_estimate: float
    evaluations: int
    converged: bool
    subdivisions: int


@lru_cache(maxsize=None)
def _tensor_rule(order: int, dim: int):
    """Nodes on [-1, 1]^dim and weights of the tensor Gauss rule, plus the order-2 companion."""
    out = []
    for p in (order, max(1, order - 2)):
        x, w = np.polynomial.legendre.leggauss(p)
        grids = np.meshgrid(*([x] * dim), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([w] * dim), indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        out.append((nodes, weights))
    return out


def _eval_cells(g, lo: np.ndarray, hi: np.ndarray, order: int):
    """Both rule estimates on a batch of cells; returns (high, error, n_evals)."""
    k, d = lo.shape
    (xh, wh), (xl, wl) = _tensor_rule(order, d)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    vol = np.prod(half, axis=-1)
    pts = np.concatenate([
        (mid[:, None, :] + half[:, None, :] * xh[None]).reshape(-1, d),
        (mid[:, None, :] + half[:, None, :] * xl[None]).reshape(-1, d),
    ])
    vals = np.asarray(map_rows(g, pts), dtype=float)
    nh = k * len(wh)
    qh = vals[:nh].reshape(k, -1) @ wh * vol
    ql = vals[nh:].reshape(k, -1) @ wl * vol
    return qh, np.abs(qh - ql), len(pts)


def integrate_adaptive(g, box, cfg: QuadratureConfig | None = None) -> QuadResult:
    """Integrate a batch callable ``g: (m, d) -> (m,)`` over an axis-aligned box.

    Globally adaptive: cells with the largest error estimate are bisected
    along their widest axis until the summed estimate is below
    ``max(abs_tol, rel_tol * |value|)``.  The per-cell error is the
    difference between the order-p and order-(p-2) tensor Gauss rules, which
    overestimates the order-p error on smooth cells.

    Emits BudgetWarning (and returns ``converged=False``) if
    ``max_subdivisions`` runs out first.
    """
    cfg = cfg or QuadratureConfig()
    box = np.asarray(box, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2:
        raise ValueError("box must be a (d, 2) array of [lo, hi] pairs")
    d = box.shape[0]
    m = cfg.initial_cells
    edges = [np.linspace(a, b, m + 1) for a, b in box]
    idx = np.stack(np.meshgrid(*([np.arange(m)] * d), indexing="ij"), -1).reshape(-1, d)
    lo = np.stack([edges[a][idx[:, a]] for a in range(d)], -1)
    hi = np.stack([edges[a][idx[:, a] + 1] for a in range(d)], -1)
    q, e, evals = _eval_cells(g, lo, hi, cfg.rule_order)

    heap = []  # (-err, counter, lo, hi, q)
    counter = 0
    for i in range(len(q)):
        heap.append((-e[i], counter, lo[i], hi[i], q[i]))
        counter += 1
    heapq.heapify(heap)
    total, err = float(np.sum(q)), float(np.sum(e))
    splits = 0
    converged = True
    while err > max(cfg.abs_tol, cfg.rel_tol * abs(total)):
        if splits >= cfg.max_subdivisions:
            converged = False
            break
        # pop the worst cells until they carry half of the excess error
        target = 0.5 * err
        popped, acc = [], 0.0
        budget = min(512, cfg.max_subdivisions - splits)
        while heap and len(popped) < budget and (acc < target or not popped):
            item = heapq.heappop(heap)
            popped.append(item)
            acc += -item[0]
        plo = np.array([p[2] for p in popped])
        phi = np.array([p[3] for p in popped])
        axis = np.argmax(phi - plo, axis=1)
        rows = np.arange(len(popped))
        midv = 0.5 * (plo[rows, axis] + phi[rows, axis])
        lo1, hi1 = plo.copy(), phi.copy()
        hi1[rows, axis] = midv
        lo2, hi2 = plo.copy(), phi.copy()
        lo2[rows, axis] = midv
        clo = np.concatenate([lo1, lo2])
        chi = np.concatenate([hi1, hi2])
        cq, ce, ne = _eval_cells(g, clo, chi, cfg.rule_order)
        evals += ne
        splits += len(popped)
        for p in popped:
            total -= p[4]
            err -= -p[0]
        for i in range(len(cq)):
            heapq.heappush(heap, (-ce[i], counter, clo[i], chi[i], cq[i]))
            counter += 1
        total += float(np.sum(cq))
        err += float(np.sum(ce))
    # re-sum to shed running-sum drift
    total = math.fsum(item[4] for item in heap)
    err = math.fsum(-item[0] for item in heap)
    if not converged:
        warnings.warn(f"subdivision budget {cfg.max_subdivisions} exhausted with error "
                      f"estimate {err:.3e}", BudgetWarning, stacklevel=2)
    return QuadResult(total, err, evals, converged, splits)


def rounded_report(method: str, raw: float, error: float, evaluations: int,
                   converged: bool) -> IndexReport:
    nearest = int(round(raw))
    residual = abs(raw - nearest)
    ambiguous = residual >= ROUNDING_LIMIT
    return IndexReport(method=method, raw_value=float(raw), index=None if ambiguous else nearest,
                       residual=float(residual), error_estimate=float(error),
                       evaluations=int(evaluations), converged=converged, ambiguous=ambiguous)


def index_box(f: Immersion) -> np.ndarray:
    r = f.support_halfwidth + DOMAIN_PAD
    return np.array([[-r, r]] * f.n)


def index_by_integral(f: Immersion, cfg: QuadratureConfig | None = None) -> IndexReport:
    """Integrate the pulled-back index form over the padded support cube.

    Outside the support the Hessian vanishes, so the integrand is exactly
    zero and the finite box loses nothing.  A residual of 0.1 or more
    withholds the integer (``ambiguous=True``).
    """
    if f.n % 2:
        raise OddDimension(f"integral index needs even n, got {f.n}")
    res = integrate_adaptive(lambda X: integrand_pullback(f, X), index_box(f), cfg)
    return rounded_report("integral", res.value, res.error_estimate, res.evaluations,
                          res.converged)


WHITNEY_CONFIG = QuadratureConfig(abs_tol=1e-10, rel_tol=1e-10)


def index_whitney_1d(f: Immersion, cfg: QuadratureConfig | None = None) -> IndexReport:
    """Rotation index of a long plane curve: ``(1/2 pi) * integral`` of the Whitney integrand."""
    if f.n != 1:
        raise ValueError("whitney index needs n = 1")
    res = integrate_adaptive(lambda X: whitney_integrand_1d(f, X[:, 0]), index_box(f),
                             cfg or WHITNEY_CONFIG)
    return rounded_report("whitney-1d", res.value / (2 * math.pi),
                          res.error_estimate / (2 * math.pi), res.evaluations, res.converged)
