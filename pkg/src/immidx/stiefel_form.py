"""The index n-form on V(n, 2n) and the index integrand built from it.

For a Stiefel point ``phi`` and tangents ``T_1..T_n`` (each a ``2n x n``
matrix, paired with the coordinate differentials by ``<dphi^j_i, T> = T[j, i]``)

    omega(T_1..T_n) = C_n u(phi) sum_{i_1..i_n} u_{i1 i2} ... u_{i_{n-1} i_n}
                      sum_sigma sum_J (-1)^mu(J) M_J(phi) det[T_b[j_a, i_sigma(a)]]_{a,b}

with ``C_n = -1 / (2^{n+1} pi^{n/2} (n/2)!)``.  The sums over ``i`` and
``sigma`` only enter through the column tuple ``c = i o sigma``; both
integrand routes below exploit that to evaluate each determinant once per
tuple.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import linalg
from .errors import OddDimension, RankDeficient
from .immersion import Immersion


def form_constant(n: int) -> float:
    if n % 2:
        raise OddDimension(f"the index form is defined for even n only, got n={n}")
    return -1.0 / (2 ** (n + 1) * math.pi ** (n / 2) * math.factorial(n // 2))


@lru_cache(maxsize=None)
def _tuple_tables(n: int):
    """Column tuples and the (i, sigma) -> tuple bookkeeping for dimension n.

    Returns ``(tuples, comp)``: ``tuples`` enumerates ``{0..n-1}^n`` (the
    index tuples ``i`` and the column tuples share this enumeration) and
    ``comp[p, q]`` is the position of ``i_p o sigma_q``.  Every sigma enters
    with weight +1.
    """
    tuples = list(itertools.product(range(n), repeat=n))
    pos = {t: k for k, t in enumerate(tuples)}
    perms = [p for p, _ in linalg.permutations_signed(n, one_based=False)]
    comp = np.array([[pos[tuple(i[s] for s in sigma)] for sigma in perms] for i in tuples])
    return np.array(tuples), comp


def pair_weights(U_inv: np.ndarray) -> np.ndarray:
    """``u_{i1 i2} u_{i3 i4} ... u_{i_{n-1} i_n}`` for every index tuple; batch + (n^n,)."""
    n = U_inv.shape[-1]
    tuples, _ = _tuple_tables(n)
    w = np.ones(U_inv.shape[:-2] + (len(tuples),))
    for a in range(0, n, 2):
        w = w * U_inv[..., tuples[:, a], tuples[:, a + 1]]
    return w


def _contract(weights: np.ndarray, per_tuple: np.ndarray, n: int) -> np.ndarray:
    """``sum_i w(i) sum_sigma X(i o sigma)`` given ``X`` on all column tuples."""
    _, comp = _tuple_tables(n)
    summed = per_tuple[..., comp].sum(axis=-1)  # batch + (n^n,) indexed by i
    return np.sum(weights * summed, axis=-1)


@lru_cache(maxsize=None)
def _wedge_index(n: int):
    sets = linalg.index_sets(n)
    tuples, _ = _tuple_tables(n)
    K, C = len(sets), len(tuples)
    rows = np.empty((K, C, n), dtype=int)
    cols = np.empty((K, C, n), dtype=int)
    for k, J in enumerate(sets):
        rows[k] = np.array(J) - 1
        cols[k] = tuples
    signs = np.array([(-1) ** linalg.mu(J) for J in sets], dtype=float)
    return rows, cols, signs


def _as_tangent_stack(tangents, n: int) -> np.ndarray:
    if isinstance(tangents, np.ndarray):
        T = tangents
    else:
        T = np.stack([np.asarray(t, dtype=float) for t in tangents], axis=-3)
    if T.shape[-2:] != (2 * n, n):
        raise ValueError(f"tangents must be 2n x n matrices, got {T.shape[-2:]}")
    return T


def omega_eval(phi, tangents) -> np.ndarray:
    """Evaluate the n-form at ``phi`` on ``n`` tangent matrices.

    ``phi`` may carry a batch shape ``(..., 2n, n)``; ``tangents`` is either a
    list of n matrices or an array ``(..., n, 2n, n)`` with matching batch.
    """
    a = linalg._entries(phi)
    n = a.shape[-1]
    C = form_constant(n)
    T = _as_tangent_stack(tangents, n)
    if T.shape[-3] != n:
        raise ValueError(f"need exactly n={n} tangents, got {T.shape[-3]}")
    _, U_inv, u = linalg.gram_arrays(a)
    w = pair_weights(U_inv)
    M = linalg.all_complementary_minors(a)  # batch + (K,)
    rows, cols, signs = _wedge_index(n)
    # G[..., b, k, c, a] = T_b[j_a, c_a]
    G = T[..., rows, cols]
    G = np.moveaxis(G, -4, -1)  # batch + (K, C, a, b)
    D = np.linalg.det(G)  # batch + (K, C)
    S = np.einsum("...k,...kc->...c", signs * M, D)
    return C * u * _contract(w, S, n)


def hessian_tangents(H: np.ndarray) -> np.ndarray:
    """Tangents ``T_k[j, i] = H[j, i, k]``: derivative of ``x -> D_f(x)`` along ``e_k``."""
    return np.moveaxis(H, -1, -3)


def integrand_pullback(f: Immersion, x) -> np.ndarray:
    """Coefficient of ``dx_1 ^ ... ^ dx_n`` in the pullback of omega by ``D_f``."""
    if f.n % 2:
        raise OddDimension(f"n={f.n} is odd")
    return omega_eval(f.jacobian(x), hessian_tangents(f.hessian(x)))


def integrand_direct(f: Immersion, x) -> np.ndarray:
    """Same integrand from the coordinate formula with ``2n x 2n`` determinants.

    For each column tuple ``c`` the matrix stacks the ``n`` rows
    ``(df_j/dx_k)_j`` over the ``n`` rows ``(d^2 f_j / dx_k dx_{c_k})_j``;
    the Gram data is taken from ``g(x) = det(Df^T Df)^{-1/2}`` and its inverse.
    """
    n = f.n
    C = form_constant(n)
    Df = f.jacobian(x)
    H = f.hessian(x)
    _, G_inv, g = linalg.gram_arrays(Df)
    tuples, _ = _tuple_tables(n)
    top = np.swapaxes(Df, -1, -2)  # (..., n, 2n)
    k_idx = np.arange(n)
    # bottom[..., c, k, j] = H[..., j, k, tuples[c, k]]
    Hm = np.moveaxis(H, -3, -1)  # (..., k, i, j)
    bottom = Hm[..., k_idx, tuples, :]  # (..., C, n, 2n)
    top_b = np.broadcast_to(top[..., None, :, :], bottom.shape)
    E = np.linalg.det(np.concatenate([top_b, bottom], axis=-2))  # (..., C)
    return C * g * _contract(pair_weights(G_inv), E, n)


def whitney_integrand_1d(f: Immersion, x) -> np.ndarray:
    """``(f1'' f2' - f2'' f1') / (f1'^2 + f2'^2)`` for a plane curve."""
    if f.n != 1:
        raise ValueError("whitney integrand needs n = 1")
    t = np.asarray(x, dtype=float)
    pts = t.reshape(-1, 1)
    d1 = f.jacobian(pts)[:, :, 0]
    d2 = f.hessian(pts)[:, :, 0, 0]
    speed2 = d1[:, 0] ** 2 + d1[:, 1] ** 2
    if np.any(speed2 <= 0):
        raise RankDeficient("curve has a vanishing tangent")
    out = (d2[:, 0] * d1[:, 1] - d2[:, 1] * d1[:, 0]) / speed2
    return out.reshape(t.shape)


# -- closedness ---------------------------------------------------------------

def non_closed_perturbation(phi, tangents) -> np.ndarray:
    """``phi^2_1 dphi^1_1 ^ dphi^2_2 ^ ... ^ dphi^n_n``, whose exterior derivative is nonzero."""
    a = linalg._entries(phi)
    n = a.shape[-1]
    T = _as_tangent_stack(tangents, n)
    diag = np.arange(n)
    # W[..., a, b] = T_b[a, a]
    W = np.swapaxes(T[..., diag, diag], -1, -2)
    return a[..., 1, 0] * np.linalg.det(W)


def perturbed_omega(phi, tangents) -> np.ndarray:
    return omega_eval(phi, tangents) + non_closed_perturbation(phi, tangents)


@dataclass
class ExteriorDerivative:
    value: float
    scale: float  # largest |directional-derivative term| in the alternating sum
    steps: list

    @property
    def normalized(self) -> float:
        return abs(self.value) / self.scale if self.scale > 0 else abs(self.value)


def exterior_derivative_terms(phi, tangents, h: float = 1e-4, form=omega_eval,
                              richardson: bool = False) -> ExteriorDerivative:
    """Finite-difference ``d(form)`` on constant tangent fields.

    ``d w(T_0..T_n) = sum_i (-1)^i D_{T_i}[w(.)(T_0..^T_i..T_n)]``; the Lie
    bracket terms vanish for constant fields on the open set V(n, 2n).  The
    step along ``T_i`` is ``h * |phi|_F / |T_i|_F``.
    """
    a = np.asarray(linalg._entries(phi), dtype=float)
    n = a.shape[-1]
    T = [np.asarray(t, dtype=float) for t in tangents]
    if len(T) != n + 1:
        raise ValueError(f"need n+1 = {n + 1} tangents, got {len(T)}")
    if h <= 0:
        raise ValueError("h must be positive")
    if n % 2:
        raise OddDimension(f"n={n} is odd")
    scale_phi = np.linalg.norm(a)
    total, biggest, steps = 0.0, 0.0, []
    for i, Ti in enumerate(T):
        rest = T[:i] + T[i + 1:]
        norm = np.linalg.norm(Ti)
        if norm == 0:
            steps.append(0.0)
            continue
        eps = h * scale_phi / norm

        def central(e):
            return (form(a + e * Ti, rest) - form(a - e * Ti, rest)) / (2 * e)

        for attempt in range(2):
            try:
                d = central(eps)
                if richardson:
                    d = (4 * central(eps / 2) - d) / 3
                break
            except RankDeficient:
                if attempt:
                    raise
                eps *= 0.1
        steps.append(eps)
        term = (-1) ** i * float(d)
        total += term
        biggest = max(biggest, abs(term))
    return ExteriorDerivative(total, biggest, steps)


def exterior_derivative_fd(phi, tangents, h: float = 1e-4, form=omega_eval,
                           richardson: bool = False) -> float:
    return exterior_derivative_terms(phi, tangents, h, form, richardson).value


@dataclass
class ClosednessResult:
    samples: int
    max_abs_d_omega: float  # largest normalized |d omega|
    max_raw_d_omega: float
    threshold: float
    passed: bool


def random_stiefel_samples(n: int, samples: int, rng: np.random.Generator,
                           low: float = -2.0, high: float = 2.0, min_det: float = 1e-3):
    """Draw ``(phi, [T_0..T_n])`` with uniform entries and ``det U > min_det``."""
    out = []
    while len(out) < samples:
        phi = rng.uniform(low, high, size=(2 * n, n))
        if np.linalg.det(phi.T @ phi) <= min_det:
            continue
        tangents = [rng.uniform(low, high, size=(2 * n, n)) for _ in range(n + 1)]
        out.append((phi, tangents))
    return out


def closedness_check(n: int = 2, samples: int = 100, seed: int = 7, h: float = 1e-4,
                     threshold: float = 1e-4, perturbed: bool = False,
                     richardson: bool = False) -> ClosednessResult:
    """Seeded closedness statistic: max over samples of normalized ``|d omega|``."""
    rng = np.random.default_rng(seed)
    form = perturbed_omega if perturbed else omega_eval
    worst, worst_raw = 0.0, 0.0
    for phi, tangents in random_stiefel_samples(n, samples, rng):
        r = exterior_derivative_terms(phi, tangents, h, form, richardson)
        worst = max(worst, r.normalized)
        worst_raw = max(worst_raw, abs(r.value))
    return ClosednessResult(samples, worst, worst_raw, threshold, bool(worst < threshold))
