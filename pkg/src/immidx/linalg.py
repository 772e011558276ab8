"""Small dense-matrix kernel for points of the Stiefel variety V(n, 2n).

Layout convention used everywhere in the package: a Stiefel point is stored
as a ``(2n, n)`` array whose entry ``[j, i]`` is ``d f_j / d x_i`` (ambient
row ``j``, domain column ``i``).  The ``(n, 2n)`` row form appears only when
stacking differentials, via ``.T`` / ``swapaxes``.

Index sets ``J`` are 1-based, strictly increasing tuples drawn from
``{1, ..., 2n}``.  Every array function accepts a leading batch shape.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import RankDeficient, TooLarge

RANK_RTOL = 1e-12
MAX_PERMUTATION_N = 8

IndexSet = tuple


@dataclass(frozen=True)
class StiefelPoint:
    """A full-rank ``2n x n`` matrix (the value of a differential)."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != 2 * a.shape[1] or a.shape[1] < 1:
            raise ValueError(f"Stiefel point must be 2n x n, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if not is_full_rank(a):
            raise RankDeficient("matrix does not have full column rank")

    @property
    def n(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class GramData:
    U: np.ndarray
    U_inv: np.ndarray
    u: float


def _entries(phi) -> np.ndarray:
    if isinstance(phi, StiefelPoint):
        return phi.entries
    return np.asarray(phi, dtype=float)


def check_index_set(J, n: int) -> tuple:
    J = tuple(int(j) for j in J)
    if len(J) != n or any(a >= b for a, b in zip(J, J[1:])) or J[0] < 1 or J[-1] > 2 * n:
        raise ValueError(f"invalid index set {J} for n={n}")
    return J


@lru_cache(maxsize=None)
def index_sets(n: int) -> tuple:
    """All strictly increasing n-subsets of {1..2n}, lexicographic order."""
    return tuple(itertools.combinations(range(1, 2 * n + 1), n))


def complement(J, n: int) -> tuple:
    s = set(J)
    return tuple(j for j in range(1, 2 * n + 1) if j not in s)


def mu(J) -> int:
    """Sign exponent ``n(n-1)/2 + j_1 + ... + j_n`` of a 1-based index set."""
    n = len(J)
    return n * (n - 1) // 2 + sum(J)


def minor(phi, J) -> np.ndarray:
    """Determinant of the rows of ``phi`` listed in ``J`` (1-based)."""
    a = _entries(phi)
    rows = [j - 1 for j in J]
    return np.linalg.det(a[..., rows, :])


def complementary_minor(phi, J) -> np.ndarray:
    """Determinant of the rows of ``phi`` NOT in ``J``, taken in increasing order."""
    a = _entries(phi)
    n = a.shape[-1]
    return minor(a, complement(J, n))


def all_complementary_minors(phi) -> np.ndarray:
    """Stack of ``M_J`` over ``index_sets(n)``; shape ``batch + (C(2n, n),)``."""
    a = _entries(phi)
    n = a.shape[-1]
    rows = np.array([[j - 1 for j in complement(J, n)] for J in index_sets(n)])
    sub = a[..., rows, :]  # batch + (K, n, n)
    return np.linalg.det(sub)


def is_full_rank(phi) -> np.ndarray | bool:
    a = _entries(phi)
    n = a.shape[-1]
    U = np.swapaxes(a, -1, -2) @ a
    colmax = np.max(np.sqrt(np.diagonal(U, axis1=-2, axis2=-1)), axis=-1)
    ok = np.linalg.det(U) > RANK_RTOL * colmax ** (2 * n)
    return bool(ok) if np.ndim(ok) == 0 else ok


def gram_arrays(phi):
    """Batched Gram data: ``(U, U_inv, u)`` with ``u = det(U)**-0.5``.

    Raises RankDeficient if any matrix in the batch fails the scale-invariant
    rank test ``det U < 1e-12 * (max column norm)**(2n)``.
    """
    a = _entries(phi)
    n = a.shape[-1]
    U = np.swapaxes(a, -1, -2) @ a
    detU = np.linalg.det(U)
    colmax = np.max(np.sqrt(np.diagonal(U, axis1=-2, axis2=-1)), axis=-1)
    if np.any(~(detU > RANK_RTOL * colmax ** (2 * n))):
        raise RankDeficient(f"det U = {np.min(detU):.3e} below rank threshold")
    U_inv = np.linalg.inv(U)
    U_inv = 0.5 * (U_inv + np.swapaxes(U_inv, -1, -2))
    return U, U_inv, detU ** -0.5


def gram(phi) -> GramData:
    U, U_inv, u = gram_arrays(phi)
    return GramData(U=U, U_inv=U_inv, u=float(u) if np.ndim(u) == 0 else u)


@lru_cache(maxsize=None)
def _perms(n: int) -> tuple:
    out = []
    for p in itertools.permutations(range(n)):
        # parity from cycle decomposition
        seen, sign = [False] * n, 1
        for s in range(n):
            if seen[s]:
                continue
            k, length = s, 0
            while not seen[k]:
                seen[k] = True
                k = p[k]
                length += 1
            if length % 2 == 0:
                sign = -sign
        out.append((p, sign))
    return tuple(out)


def permutations_signed(n: int, one_based: bool = True) -> list:
    """All ``n!`` permutations with their parity sign."""
    if n < 1 or n > MAX_PERMUTATION_N:
        raise TooLarge(f"permutation enumeration guarded to 1 <= n <= {MAX_PERMUTATION_N}, got {n}")
    shift = 1 if one_based else 0
    return [(tuple(i + shift for i in p), s) for p, s in _perms(n)]
