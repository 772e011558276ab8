"""Self-intersections of immersions and the sign-sum index.

Double points are roots of ``F(x, y) = f(x) - f(y)`` off the diagonal.  They
are found by damped Newton from a uniform seed grid on the ``2n``-cube,
deduplicated by connected components of the ``cluster_radius`` graph, and
certified by residual and transversality.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import CompletenessWarning, DegenerateDeterminant, NonTransversal
from .immersion import Immersion
from .parallel import map_rows
from .quadrature import IndexReport

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


@dataclass
class SolverConfig:
    grid_points_per_axis: int | None = None  # None: 9 for n <= 2, 5 above
    domain_halfwidth: float = 1.1
    diagonal_exclusion: float = 0.05
    newton_max_iter: int = 50
    newton_tol: float = 1e-12
    cluster_radius: float = 1e-6
    transversality_threshold: float = 1e-8
    completeness_check: bool = True

    def __post_init__(self):
        positive = [self.domain_halfwidth, self.diagonal_exclusion, self.newton_max_iter,
                    self.newton_tol, self.cluster_radius, self.transversality_threshold]
        if self.grid_points_per_axis is not None:
            positive.append(self.grid_points_per_axis)
        if not all(v > 0 for v in positive):
            raise ValueError("solver settings must be positive")
        if not self.newton_tol < self.cluster_radius:
            raise ValueError("newton_tol must be below cluster_radius")

    def grid_for(self, n: int) -> int:
        if self.grid_points_per_axis is not None:
            return self.grid_points_per_axis
        return 9 if n <= 2 else 5


@dataclass
class IntersectionRecord:
    ambient_point: np.ndarray
    preimage_1: np.ndarray
    preimage_2: np.ndarray
    sign: int
    transversality_det: float
    residual: float

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("ambient_point", "preimage_1", "preimage_2"):
            d[k] = [float(v) for v in d[k]]
        d["sign"] = int(d["sign"])
        d["transversality_det"] = float(d["transversality_det"])
        d["residual"] = float(d["residual"])
        return d


def stacked_det(f: Immersion, x1, x2) -> np.ndarray:
    """``det`` of the ``2n x 2n`` matrix with rows ``D_f(x1)`` (n x 2n form) over ``D_f(x2)``."""
    A = np.swapaxes(f.jacobian(x1), -1, -2)
    B = np.swapaxes(f.jacobian(x2), -1, -2)
    return np.linalg.det(np.concatenate([A, B], axis=-2))


def _residual(f: Immersion, Z: np.ndarray) -> np.ndarray:
    n = f.n
    return f.value(Z[:, :n]) - f.value(Z[:, n:])


def _newton(f: Immersion, Z: np.ndarray, cfg: SolverConfig, iters: int | None = None):
    """Damped Newton on ``F(x, y) = f(x) - f(y)`` for a batch of seeds.

    Returns the final iterates and their residual norms ``|F|``.  A seed
    stops once its step falls below ``newton_tol`` or the line search fails.
    """
    n = f.n
    Z = Z.copy()
    done = np.zeros(len(Z), dtype=bool)
    F = _residual(f, Z)
    norm = np.linalg.norm(F, axis=1)
    for _ in range(cfg.newton_max_iter if iters is None else iters):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        Za = Z[act]
        JF = np.concatenate([f.jacobian(Za[:, :n]), -f.jacobian(Za[:, n:])], axis=2)
        # least-squares step tolerates the singular Jacobian on the diagonal
        step = -np.einsum("mij,mj->mi", np.linalg.pinv(JF, rcond=1e-13), F[act])
        alpha = np.ones(act.size)
        accepted = np.zeros(act.size, dtype=bool)
        trial_Z, trial_F, trial_norm = Za.copy(), F[act].copy(), norm[act].copy()
        for _ in range(30):
            pending = np.flatnonzero(~accepted)
            if pending.size == 0:
                break
            cand = Za[pending] + alpha[pending, None] * step[pending]
            Fc = _residual(f, cand)
            nc = np.linalg.norm(Fc, axis=1)
            ok = nc <= (1 - 1e-4 * alpha[pending]) * norm[act][pending] + 1e-300
            ok |= nc == 0
            good = pending[ok]
            trial_Z[good], trial_F[good], trial_norm[good] = cand[ok], Fc[ok], nc[ok]
            accepted[good] = True
            alpha[pending[~ok]] *= 0.5
        step_len = np.linalg.norm(alpha[:, None] * step, axis=1)
        # a failed line search keeps the old iterate; the seed is then stalled
        stalled = ~accepted
        Z[act] = trial_Z
        F[act] = trial_F
        norm[act] = trial_norm
        finished = (accepted & (step_len < cfg.newton_tol)) | (trial_norm == 0) | stalled
        done[act[finished]] = True
    return Z, norm


def _seed_grid(n: int, points: int, halfwidth: float) -> np.ndarray:
    axis = np.linspace(-halfwidth, halfwidth, points)
    grids = np.meshgrid(*([axis] * (2 * n)), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _canonical(Z: np.ndarray, n: int) -> np.ndarray:
    """Order each pair so that the lexicographically smaller preimage comes first."""
    x, y = Z[:, :n], Z[:, n:]
    swap = np.zeros(len(Z), dtype=bool)
    undecided = np.ones(len(Z), dtype=bool)
    for k in range(n):
        lt, gt = x[:, k] < y[:, k], x[:, k] > y[:, k]
        swap |= undecided & gt
        undecided &= ~(lt | gt)
    out = Z.copy()
    out[swap] = np.concatenate([y[swap], x[swap]], axis=1)
    return out


def _solve_from_grid(f: Immersion, cfg: SolverConfig, points: int) -> np.ndarray:
    n = f.n
    seeds = _seed_grid(n, points, cfg.domain_halfwidth)
    gap = np.linalg.norm(seeds[:, :n] - seeds[:, n:], axis=1)
    seeds = seeds[gap >= cfg.diagonal_exclusion]
    # (x, y) and (y, x) lead to mirrored roots; keep one orientation of each seed
    seeds = seeds[np.all(_canonical(seeds, n) == seeds, axis=1)]
    out = map_rows(lambda S: _stacked_newton(f, S, cfg), seeds, min_chunk=2048)
    Z, norm = out[:, :2 * n], out[:, 2 * n]
    ok = norm < RESIDUAL_TOL
    gap = np.linalg.norm(Z[:, :n] - Z[:, n:], axis=1)
    ok &= gap >= cfg.diagonal_exclusion
    n_fail = int(np.sum(norm >= RESIDUAL_TOL))
    if n_fail:
        log.debug("%d of %d seeds did not converge", n_fail, len(seeds))
    return _canonical(Z[ok], n)


def _stacked_newton(f, S, cfg):
    Z, norm = _newton(f, S, cfg)
    return np.concatenate([Z, norm[:, None]], axis=1)


def _cluster(f: Immersion, roots: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    if len(roots) == 0:
        return roots
    tree = cKDTree(roots)
    pairs = tree.query_pairs(cfg.cluster_radius, output_type="ndarray")
    m = len(roots)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    k, labels = connected_components(graph, directed=False)
    reps = np.array([roots[labels == c].mean(axis=0) for c in range(k)])
    polished, _ = _newton(f, reps, cfg, iters=1)
    polished = _canonical(polished, f.n)
    order = np.lexsort(polished.T[::-1])
    return polished[order]


def find_self_intersections(f: Immersion, cfg: SolverConfig | None = None) -> list:
    """All transversal double points of ``f``, one record per unordered preimage pair.

    Raises NonTransversal if a certified root has a (nearly) singular stacked
    Jacobian.  With ``completeness_check`` the search is repeated on a grid of
    twice the density; a different answer triggers CompletenessWarning.
    """
    cfg = cfg or SolverConfig()
    n = f.n
    points = cfg.grid_for(n)
    roots = _cluster(f, _solve_from_grid(f, cfg, points), cfg)
    if cfg.completeness_check:
        fine = _cluster(f, _solve_from_grid(f, cfg, 2 * points - 1), cfg)
        if len(fine) != len(roots) or (len(roots) and np.max(np.abs(fine - roots)) > 1e-6):
            warnings.warn(f"denser seed grid found {len(fine)} double points, coarse grid "
                          f"{len(roots)}; keeping the denser result", CompletenessWarning,
                          stacklevel=2)
            roots = fine
    records = []
    for z in roots:
        x1, x2 = z[:n], z[n:]
        res = float(np.linalg.norm(f.value(x1) - f.value(x2)))
        det = float(stacked_det(f, x1, x2))
        if abs(det) < cfg.transversality_threshold:
            raise NonTransversal(f"double point at {x1}, {x2} has stacked determinant {det:.3e}")
        records.append(IntersectionRecord(
            ambient_point=0.5 * (f.value(x1) + f.value(x2)), preimage_1=x1, preimage_2=x2,
            sign=int(np.sign(det)), transversality_det=det, residual=res))
    return records


def sign_of_intersection(rec: IntersectionRecord, f: Immersion,
                         threshold: float = 1e-8) -> int:
    """Orientation sign of the stacked differentials at a double point.

    For n = 1 the preimages are taken in increasing order; for even n the
    order does not matter.
    """
    x1, x2 = np.asarray(rec.preimage_1, float), np.asarray(rec.preimage_2, float)
    if f.n == 1 and x1[0] > x2[0]:
        x1, x2 = x2, x1
    elif f.n % 2 and f.n > 1:
        raise ValueError("signs are only defined for n = 1 and even n")
    det = float(stacked_det(f, x1, x2))
    if abs(det) < threshold:
        raise DegenerateDeterminant(f"stacked determinant {det:.3e} below threshold")
    return 1 if det > 0 else -1


def index_by_signs(f: Immersion, cfg: SolverConfig | None = None,
                   records: list | None = None) -> IndexReport:
    """Sum of intersection signs (integer for n = 1 and even n, parity for odd n >= 3)."""
    cfg = cfg or SolverConfig()
    if records is None:
        records = find_self_intersections(f, cfg)
    if f.n % 2 and f.n > 1:
        parity = len(records) % 2
        return IndexReport(method="parity", raw_value=float(parity), index=parity, residual=0.0)
    total = sum(sign_of_intersection(r, f, cfg.transversality_threshold) for r in records)
    return IndexReport(method="sign-sum", raw_value=float(total), index=int(total), residual=0.0)
