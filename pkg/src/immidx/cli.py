"""Command-line front end: ``immidx <command> ...``.

Every command prints one JSON object (``"schema": 1``, floats with 17
significant digits) to stdout, or writes it to ``--out``.  Exit codes:
0 all checks passed, 2 a mathematical check failed, 1 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import specs
from .errors import (BudgetWarning, CompletenessWarning, DegenerateDeterminant, ImmIdxError,
                     NonTransversal, RoundingAmbiguous)
from .immersion import validate_derivatives
from .intersections import find_self_intersections, index_by_signs
from .laplace import LAPLACE_CONFIG, laplace_decomposition
from .quadrature import QuadratureConfig, index_by_integral, index_whitney_1d
from .stiefel_form import closedness_check

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2
DERIVATIVE_THRESHOLD = 1e-5
LAPLACE_TOL_FACTOR = 10.0

log = logging.getLogger("immidx")


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    """Carries the JSON payload of a command whose mathematical check failed."""

    def __init__(self, payload: dict):
        super().__init__("check failed")
        self.payload = payload


# -- JSON ---------------------------------------------------------------------

def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _plain(obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj, indent: int, level: int) -> str:
    import json

    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj, ".17g")
        # keep floats recognizable as floats after a round trip
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(pad + i for i in items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(k) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(pad + i for i in items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(payload: dict) -> str:
    """Deterministic JSON with floats at 17 significant digits and a schema tag."""
    body = {"schema": SCHEMA}
    body.update(_plain(payload))
    return _encode(body, 2, 0) + "\n"


def _emit(payload: dict, out: str | None):
    text = dumps(payload)
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


# -- commands -----------------------------------------------------------------

def _load(path: str) -> specs.Manifest:
    return specs.load_manifest(path)


def _warnings_list(caught) -> list:
    return [f"{w.category.__name__}: {w.message}" for w in caught]


def cmd_index(args) -> dict:
    man = _load(args.spec)
    quad = man.quadrature
    if args.tol is not None:
        if not args.tol > 0:
            raise UsageError("--tol must be positive")
        quad = dataclasses.replace(quad, abs_tol=args.tol, rel_tol=args.tol)
    f = specs.build(man.immersion)
    out = {"command": "index", "immersion": man.immersion, "n": f.n}
    reports = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BudgetWarning)
        warnings.simplefilter("always", CompletenessWarning)
        signs = index_by_signs(f, man.solver)
        reports[signs.method] = signs
        if f.n % 2 == 0:
            reports["integral"] = index_by_integral(f, quad)
        elif f.n == 1:
            whitney_cfg = None if args.tol is None else QuadratureConfig(abs_tol=args.tol,
                                                                         rel_tol=args.tol)
            reports["whitney-1d"] = index_whitney_1d(f, whitney_cfg)
    if signs.method == "parity":
        out["parity"] = signs.index
    else:
        out["sign_sum"] = signs.index
    for key, label in (("integral", "integral"), ("whitney-1d", "whitney_1d")):
        if key in reports:
            out[label] = reports[key].index
    out["reports"] = {k: r.to_dict() for k, r in reports.items()}
    values = [r.index for r in reports.values()]
    ambiguous = [k for k, r in reports.items() if r.ambiguous]
    out["agree"] = not ambiguous and len(set(values)) == 1
    out["warnings"] = _warnings_list(caught)
    if ambiguous:
        out["error"] = f"RoundingAmbiguous: {', '.join(ambiguous)}"
        raise CheckFailed(out)
    if not out["agree"]:
        raise CheckFailed(out)
    return out


def cmd_intersections(args) -> dict:
    man = _load(args.spec)
    solver = man.solver
    if args.grid is not None:
        if args.grid < 2:
            raise UsageError("--grid must be at least 2")
        solver = dataclasses.replace(solver, grid_points_per_axis=args.grid)
    f = specs.build(man.immersion)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CompletenessWarning)
        records = find_self_intersections(f, solver)
    return {"command": "intersections", "immersion": man.immersion, "n": f.n,
            "count": len(records), "records": [r.to_dict() for r in records],
            "warnings": _warnings_list(caught)}


def cmd_check_form(args) -> dict:
    if args.n < 2 or args.n % 2:
        raise UsageError("--n must be an even integer >= 2")
    if args.samples < 0:
        raise UsageError("--samples must be non-negative")
    if not args.h > 0:
        raise UsageError("--h must be positive")
    res = closedness_check(n=args.n, samples=args.samples, seed=args.seed, h=args.h,
                           threshold=args.threshold, perturbed=args.perturbed)
    out = {"command": "check-form", "n": args.n, "seed": args.seed, "h": args.h,
           "samples": res.samples, "max_abs_d_omega": res.max_abs_d_omega,
           "max_raw_d_omega": res.max_raw_d_omega, "threshold": res.threshold,
           "perturbed": bool(args.perturbed), "pass": res.passed, "warnings": []}
    if args.samples == 0:
        msg = "0 samples: closedness check passes vacuously"
        out["warnings"].append(msg)
        log.warning(msg)
    if not res.passed:
        raise CheckFailed(out)
    return out


def _parse_lambdas(text: str) -> list:
    try:
        lams = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --lambdas {text!r}") from exc
    if not lams or not all(v > 0 and math.isfinite(v) for v in lams):
        raise UsageError("--lambdas must be a comma-separated list of positive numbers")
    return lams


def cmd_check_laplace(args) -> dict:
    lams = _parse_lambdas(args.lambdas)
    man = _load(args.spec)
    f = specs.build(man.immersion)
    if f.n % 2:
        raise UsageError("check-laplace needs even n")
    cfg = LAPLACE_CONFIG
    if args.tol is not None:
        cfg = dataclasses.replace(cfg, abs_tol=args.tol, rel_tol=args.tol)
    # 2 int_{C x B} - int_{C x C}: three tolerance budgets add up
    combined = 3.0 * cfg.abs_tol
    reports = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BudgetWarning)
        warnings.simplefilter("always", CompletenessWarning)
        records = find_self_intersections(f, man.solver)
        integral = index_by_integral(f, man.quadrature)
        for lam in lams:
            rep = laplace_decomposition(f, lam, cfg, man.solver, records=records,
                                        integral_index=integral)
            d = rep.to_dict()
            d["J_within_tolerance"] = bool(abs(rep.J_value) < LAPLACE_TOL_FACTOR * combined)
            reports.append(d)
    local = [r["normalized_local_defect"] for r in reports]
    out = {"command": "check-laplace", "immersion": man.immersion, "n": f.n,
           "combined_tolerance": combined, "reports": reports,
           "local_defect_decreasing": all(a > b for a, b in zip(local, local[1:])),
           "pass": all(r["J_within_tolerance"] for r in reports),
           "warnings": _warnings_list(caught)}
    if not out["pass"]:
        raise CheckFailed(out)
    return out


def cmd_validate(args) -> dict:
    man = _load(args.spec)
    if not args.h > 0:
        raise UsageError("--h must be positive")
    if args.samples < 0:
        raise UsageError("--samples must be non-negative")
    f = specs.build(man.immersion)
    seed = man.seed if args.seed is None else args.seed
    rep = validate_derivatives(f, samples=args.samples, h=args.h, seed=seed)
    out = {"command": "validate", "immersion": man.immersion, "n": f.n, "h": args.h,
           "samples": rep.samples, "seed": seed,
           "max_jacobian_dev": rep.max_jacobian_dev, "max_hessian_dev": rep.max_hessian_dev,
           "worst_jacobian_point": rep.worst_jacobian_point,
           "worst_hessian_point": rep.worst_hessian_point,
           "threshold": args.threshold, "pass": rep.max_deviation < args.threshold}
    if not out["pass"]:
        raise CheckFailed(out)
    return out


def cmd_examples(args) -> dict:
    if args.action == "list":
        return {"command": "examples", "examples": sorted(specs.EXAMPLES)}
    if not args.name:
        raise UsageError("examples emit needs a NAME")
    return specs.example(args.name)


# -- entry point --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="immidx", description="Index of immersions R^n -> R^2n fixed at infinity.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("index", help="index by sign sum and by integration")
    s.add_argument("--spec", required=True)
    s.add_argument("--tol", type=float, help="abs and rel tolerance of the index integral")
    s.add_argument("--out")
    s.set_defaults(func=cmd_index)

    s = sub.add_parser("intersections", help="list transversal double points")
    s.add_argument("--spec", required=True)
    s.add_argument("--grid", type=int, help="seed grid points per axis")
    s.add_argument("--out")
    s.set_defaults(func=cmd_intersections)

    s = sub.add_parser("check-form", help="finite-difference closedness of the index form")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--samples", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--h", type=float, default=1e-4)
    s.add_argument("--threshold", type=float, default=1e-4)
    s.add_argument("--perturbed", action="store_true",
                   help="add a non-closed term (the check should then fail)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_check_form)

    s = sub.add_parser("check-laplace", help="Laplace integral and its leading-order split")
    s.add_argument("--spec", required=True)
    s.add_argument("--lambdas", default="25,50,100")
    s.add_argument("--tol", type=float, help="abs and rel tolerance of the 2n-dim integrals")
    s.add_argument("--out")
    s.set_defaults(func=cmd_check_laplace)

    s = sub.add_parser("validate", help="compare analytic derivatives with finite differences")
    s.add_argument("--spec", required=True)
    s.add_argument("--h", type=float, default=1e-5)
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--seed", type=int, help="defaults to the manifest seed")
    s.add_argument("--threshold", type=float, default=DERIVATIVE_THRESHOLD)
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("examples", help="list or emit the bundled immersion descriptors")
    s.add_argument("action", choices=["list", "emit"])
    s.add_argument("name", nargs="?")
    s.add_argument("--out")
    s.set_defaults(func=cmd_examples)
    return p


def _check_threads():
    raw = os.environ.get("IMMIDX_THREADS")
    if raw is None:
        return
    try:
        ok = int(raw) >= 1
    except ValueError:
        ok = False
    if not ok:
        raise UsageError(f"IMMIDX_THREADS must be a positive integer, got {raw!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    out = getattr(args, "out", None)
    try:
        _check_threads()
        payload = args.func(args)
    except CheckFailed as exc:
        _emit(exc.payload, out)
        return EXIT_CHECK
    except (NonTransversal, DegenerateDeterminant, RoundingAmbiguous) as exc:
        print(f"immidx: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (UsageError, ImmIdxError, ValueError) as exc:
        print(f"immidx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _emit(payload, out)
    except UsageError as exc:
        print(f"immidx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
