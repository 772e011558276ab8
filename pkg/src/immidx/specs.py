"""Declarative JSON descriptors for immersions and run manifests.

Immersion descriptor (``"builder"`` selects the constructor)::

    {"builder": "trivial", "n": 2}
    {"builder": "one_loop_curve", "slope_x": 1.5, "slope_y": 1.5, "base": 1.6,
     "ramp": 0.2, "inner": 0.8}
    {"builder": "bump_loop_curve", "amplitude": 1.3956, "height": 0.5}
    {"builder": "lift", "base": <descriptor>, "bump": <profile>, "cutoff": <profile>}
    {"builder": "concat", "first": <descriptor>, "second": <descriptor>}
    {"builder": "perturb", "base": <descriptor>, "amplitude": 0.01,
     "center": [0.3, 0.2], "halfwidth": 0.3, "component": 2}
    {"builder": "reflect", "base": <descriptor>, "component": 3}

Every key except ``builder`` and the nested descriptors is optional.

Profile descriptor (``"profile"`` defaults to ``"bump"``)::

    {"profile": "bump", "center": 0.4, "halfwidth": 0.6, "amplitude": 1.0}
    {"profile": "plateau", "inner": 0.5, "outer": 1.0, "amplitude": 1.0}
    {"profile": "sign_plateau", "amplitude": 1.5, "ramp": 0.2, "inner": 0.8, "outer": 1.0}

A manifest is either a bare immersion descriptor or an object
``{"immersion": <descriptor>, "solver": {...}, "quadrature": {...}, "seed": 0}``
whose ``solver`` / ``quadrature`` entries override SolverConfig and
QuadratureConfig fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import immersion as im
from .errors import DimensionMismatch, PreimageMismatch, SpecError
from .intersections import SolverConfig
from .profiles import BumpFunction, Plateau, SignPlateau
from .quadrature import QuadratureConfig

_PROFILES = {"bump": BumpFunction, "plateau": Plateau, "sign_plateau": SignPlateau}


def _take(desc: dict, allowed: set, where: str) -> dict:
    extra = set(desc) - allowed
    if extra:
        raise SpecError(f"{where}: unknown keys {sorted(extra)}")
    return desc


def load_profile(desc: dict):
    if not isinstance(desc, dict):
        raise SpecError("profile descriptor must be an object")
    desc = dict(desc)
    kind = desc.pop("profile", "bump")
    if kind not in _PROFILES:
        raise SpecError(f"unknown profile {kind!r}; choose from {sorted(_PROFILES)}")
    cls = _PROFILES[kind]
    _take(desc, {f.name for f in fields(cls)}, f"profile {kind}")
    try:
        return cls(**{k: float(v) for k, v in desc.items()})
    except (TypeError, ValueError) as exc:
        raise SpecError(f"profile {kind}: {exc}") from exc


def build(desc: dict) -> im.Immersion:
    """Construct an immersion from a descriptor; raises SpecError on bad input."""
    if not isinstance(desc, dict) or "builder" not in desc:
        raise SpecError("immersion descriptor must be an object with a 'builder' key")
    d = dict(desc)
    kind = d.pop("builder")
    try:
        if kind == "trivial":
            _take(d, {"n"}, kind)
            return im.trivial_immersion(int(d.get("n", 2)))
        if kind == "one_loop_curve":
            _take(d, {"slope_x", "slope_y", "base", "ramp", "inner"}, kind)
            return im.one_loop_curve(**{k: float(v) for k, v in d.items()})
        if kind == "bump_loop_curve":
            _take(d, {"amplitude", "height"}, kind)
            return im.bump_loop_curve(**{k: float(v) for k, v in d.items()})
        if kind == "lift":
            _take(d, {"base", "bump", "cutoff"}, kind)
            kw = {}
            if "bump" in d:
                kw["bump"] = load_profile(d["bump"])
            if "cutoff" in d:
                kw["cutoff"] = load_profile(d["cutoff"])
            return im.lift(build(_required(d, "base", kind)), **kw)
        if kind == "concat":
            _take(d, {"first", "second"}, kind)
            return im.concat(build(_required(d, "first", kind)), build(_required(d, "second", kind)))
        if kind == "perturb":
            _take(d, {"base", "amplitude", "center", "halfwidth", "component"}, kind)
            base = build(_required(d, "base", kind))
            return im.perturb(base, amplitude=float(d.get("amplitude", 0.01)),
                              center=d.get("center"), halfwidth=float(d.get("halfwidth", 0.3)),
                              component=int(d.get("component", 0)))
        if kind == "reflect":
            _take(d, {"base", "component"}, kind)
            comp = d.get("component")
            return im.reflect(build(_required(d, "base", kind)),
                              None if comp is None else int(comp))
    except SpecError:
        raise
    except (TypeError, ValueError, DimensionMismatch, PreimageMismatch) as exc:
        raise SpecError(f"{kind}: {exc}") from exc
    raise SpecError(f"unknown builder {kind!r}")


def _required(d: dict, key: str, kind: str):
    if key not in d:
        raise SpecError(f"{kind}: missing {key!r}")
    return d[key]


@dataclass
class Manifest:
    immersion: dict
    solver: SolverConfig = field(default_factory=SolverConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    seed: int = 0


def _override(cls, values: dict, where: str):
    if not isinstance(values, dict):
        raise SpecError(f"{where} must be an object")
    _take(values, {f.name for f in fields(cls)}, where)
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: {exc}") from exc


def parse_manifest(data) -> Manifest:
    if not isinstance(data, dict):
        raise SpecError("manifest must be a JSON object")
    data = dict(data)
    # files written by `immidx examples emit` carry the output schema tag
    schema = data.pop("schema", 1)
    if schema != 1:
        raise SpecError(f"unsupported schema {schema!r}")
    if "builder" in data:
        return Manifest(immersion=data)
    _take(data, {"immersion", "solver", "quadrature", "seed"}, "manifest")
    if "immersion" not in data:
        raise SpecError("manifest needs an 'immersion' descriptor")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SpecError("seed must be an integer")
    return Manifest(immersion=data["immersion"],
                    solver=_override(SolverConfig, data.get("solver", {}), "solver"),
                    quadrature=_override(QuadratureConfig, data.get("quadrature", {}), "quadrature"),
                    seed=seed)


def load_manifest(path) -> Manifest:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    return parse_manifest(data)


# -- example suite ------------------------------------------------------------

_LIFTED = {"builder": "lift", "base": {"builder": "one_loop_curve"}}

EXAMPLES = {
    "trivial2": {"builder": "trivial", "n": 2},
    "trivial3": {"builder": "trivial", "n": 3},
    "one_loop_curve": {"builder": "one_loop_curve"},
    "bump_loop_curve": {"builder": "bump_loop_curve"},
    "reflected_curve": {"builder": "reflect", "base": {"builder": "one_loop_curve"}},
    "lifted": _LIFTED,
    "lifted_bump_loop": {"builder": "lift", "base": {"builder": "bump_loop_curve"},
                         "bump": {"profile": "bump", "center": 0.4, "halfwidth": 0.6}},
    "reflected_lifted": {"builder": "reflect", "base": _LIFTED},
    "perturbed_lifted": {"builder": "perturb", "base": _LIFTED, "amplitude": 0.01,
                         "center": [0.3, 0.2], "halfwidth": 0.3, "component": 2},
    "concat_lifted_trivial": {"builder": "concat", "first": _LIFTED,
                              "second": {"builder": "trivial", "n": 2}},
    "concat_lifted_lifted": {"builder": "concat", "first": _LIFTED, "second": _LIFTED},
    "concat_curves": {"builder": "concat", "first": {"builder": "one_loop_curve"},
                      "second": {"builder": "one_loop_curve"}},
}


def example(name: str) -> dict:
    if name not in EXAMPLES:
        raise SpecError(f"unknown example {name!r}; available: {', '.join(sorted(EXAMPLES))}")
    return json.loads(json.dumps(EXAMPLES[name]))
