"""Optional thread parallelism for batched, pure evaluations.

The worker count comes from the ``IMMIDX_THREADS`` environment variable
(default 1).  Work is split into contiguous chunks and reassembled in order,
so results do not depend on the thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("IMMIDX_THREADS", "1")))
    except ValueError:
        return 1


def map_rows(fn, X: np.ndarray, min_chunk: int = 4096) -> np.ndarray:
    """Apply a batch function to the rows of ``X``, chunked across threads."""
    workers = thread_count()
    m = X.shape[0]
    if workers == 1 or m < 2 * min_chunk:
        return fn(X)
    bounds = np.linspace(0, m, min(workers, m // min_chunk) + 1).astype(int)
    chunks = [X[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=0)
