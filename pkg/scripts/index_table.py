#!/usr/bin/env python3
"""Index of every bundled example by all applicable methods."""

import time
import warnings

from immidx.errors import CompletenessWarning
from immidx.intersections import find_self_intersections, index_by_signs
from immidx.quadrature import index_by_integral, index_whitney_1d
from immidx.specs import EXAMPLES, build

print(f"{'example':24} {'n':>2} {'points':>6} {'signs':>6} {'integral':>22} {'sec':>6}")
for name, desc in EXAMPLES.items():
    f = build(desc)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CompletenessWarning)
        recs = find_self_intersections(f)
    s = index_by_signs(f, records=recs)
    if f.n == 1:
        q = f"{index_whitney_1d(f).raw_value:.15f}"
    elif f.n % 2 == 0:
        q = f"{index_by_integral(f).raw_value:.10f}"
    else:
        q = "(parity only)"
    note = " *completeness warning*" if caught else ""
    print(f"{name:24} {f.n:2d} {len(recs):6d} {s.index:6d} {q:>22} "
          f"{time.perf_counter() - t0:6.1f}{note}", flush=True)
