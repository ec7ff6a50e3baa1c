"""Run configuration: JSON in, validated objects out.

Validation collects every problem before anything is computed; each
violation names the offending field with a dotted path such as
``kernel.alpha`` or ``source.charges[0].location``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .geometry import DiscreteSet, SetSpec, discretize, join
from .kernel import KernelSpec
from .measure import DiscreteMeasure, PointCharge, measure_from_csv
from .qp import DEFAULT_MAX_ITER, DEFAULT_TOL

SCHEMA_VERSION = 1
COMMANDS = ("discretize", "sweep", "equilibrium", "gauss", "converge-up", "converge-down", "verify")
TOP_KEYS = ("schema", "kernel", "geometry", "resolution", "source", "options", "output_dir", "description")
OPTION_KEYS = (
    "tol", "max_iter", "rng_seed", "radii", "origin", "gauss", "window", "window_center",
    "shell_radius", "shell_center", "subsets", "limit", "limit_resolution", "rest_subset",
    "source_scales", "zero_index", "members",
)
NEEDS_SOURCE = ("sweep", "gauss", "converge-up", "converge-down", "verify")


class ConfigError(ValueError):
    """Raised with the full list of violations; ``violations`` is a list of ``{field, message}``."""

    def __init__(self, violations: list[dict]):
        self.violations = violations
        super().__init__("; ".join(f"{v['field']}: {v['message']}" for v in violations))

    def to_dict(self) -> dict:
        return {"schema": SCHEMA_VERSION, "error": "invalid config", "violations": self.violations}


@dataclass
class RunConfig:
    kernel: KernelSpec
    geometry: SetSpec
    resolution: int | list[int]
    source: list[PointCharge] | DiscreteMeasure | None
    options: dict
    output_dir: str
    raw: dict = field(repr=False)

    @property
    def tol(self) -> float:
        return float(self.options.get("tol", DEFAULT_TOL))

    @property
    def max_iter(self) -> int:
        return int(self.options.get("max_iter", DEFAULT_MAX_ITER))

    @property
    def rng_seed(self) -> int:
        return int(self.options.get("rng_seed", 0))

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def bundled_scenarios() -> list[str]:
    root = resources.files("riesz_balayage") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_config(path: str) -> tuple[dict, Path]:
    """Load a config file, or a bundled scenario by name (e.g. ``sphere_sweep``)."""
    p = Path(path)
    if p.is_file():
        return json.loads(p.read_text()), p.resolve().parent
    res = resources.files("riesz_balayage") / "scenarios" / f"{path}.json"
    if res.is_file():
        return json.loads(res.read_text()), Path.cwd()
    raise ConfigError([{"field": "--config", "message": f"no config file or bundled scenario named {path!r}"}])


def build_set(spec: SetSpec, resolution) -> DiscreteSet:
    """Discretize; a list of resolutions meshes each part of a union separately."""
    if isinstance(resolution, list):
        return join([discretize(p, r) for p, r in zip(spec.parts, resolution)])
    return discretize(spec, resolution)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _kernel_field(msg: str) -> str:
    for key in ("alpha", "dim", "diag_mode", "mc_samples", "near_field", "max_principle_constant"):
        if msg.startswith(key) or f" {key}" in msg.split(":")[0]:
            return f"kernel.{key}"
    return "kernel"


def _set_spec(d, where: str, errs: list[dict], base_dir: Path) -> SetSpec | None:
    if not isinstance(d, dict):
        errs.append({"field": where, "message": "must be an object describing a set"})
        return None
    d = dict(d)
    if d.get("shape") == "points_file" and "path" in d:
        d["path"] = str((base_dir / d["path"]).resolve())
    try:
        return SetSpec.from_dict(d)
    except (ValueError, TypeError, KeyError) as e:
        text = str(e).removeprefix("invalid SetSpec: ")
        for msg in text.split("; "):
            errs.append({"field": where, "message": msg})
        return None


def _positive_list(v, where, errs, increasing=False) -> bool:
    if not (isinstance(v, list) and v and all(_is_num(t) and t > 0 for t in v)):
        errs.append({"field": where, "message": "must be a non-empty list of positive numbers"})
        return False
    if increasing and any(b <= a for a, b in zip(v, v[1:])):
        errs.append({"field": where, "message": "must be strictly increasing"})
        return False
    return True


def _point(v, n, where, errs) -> bool:
    if not (isinstance(v, list) and len(v) == n and all(_is_num(t) for t in v)):
        errs.append({"field": where, "message": f"must be a list of {n} finite numbers"})
        return False
    return True


def parse_config(raw: dict, command: str, base_dir: Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Validate ``raw`` for ``command``; raises :class:`ConfigError` listing every violation."""
    base_dir = Path.cwd() if base_dir is None else base_dir
    errs: list[dict] = []
    if command not in COMMANDS:
        errs.append({"field": "command", "message": f"must be one of {COMMANDS}"})
    if not isinstance(raw, dict):
        raise ConfigError([{"field": "config", "message": "top level must be a JSON object"}])
    raw = json.loads(json.dumps(raw))
    opts = raw.setdefault("options", {})
    if not isinstance(opts, dict):
        errs.append({"field": "options", "message": "must be an object"})
        opts = raw["options"] = {}
    for k, v in (overrides or {}).items():
        if v is not None:
            opts[k] = v

    for k in raw:
        if k not in TOP_KEYS:
            errs.append({"field": k, "message": "unknown top-level key"})
    if raw.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        errs.append({"field": "schema", "message": f"unsupported schema {raw.get('schema')!r}, expected {SCHEMA_VERSION}"})

    kernel = None
    kd = raw.get("kernel")
    if not isinstance(kd, dict):
        errs.append({"field": "kernel", "message": "missing or not an object"})
    else:
        for key in ("alpha", "dim"):
            if key not in kd:
                errs.append({"field": f"kernel.{key}", "message": "missing"})
        if "alpha" in kd and not _is_num(kd["alpha"]):
            errs.append({"field": "kernel.alpha", "message": "must be a finite number"})
        elif "dim" in kd and not _is_int(kd["dim"]):
            errs.append({"field": "kernel.dim", "message": "must be an integer"})
        elif "alpha" in kd and "dim" in kd:
            try:
                kernel = KernelSpec.from_dict(kd)
            except (ValueError, TypeError) as e:
                text = str(e).removeprefix("invalid KernelSpec: ")
                for msg in text.split("; "):
                    errs.append({"field": _kernel_field(msg), "message": msg})

    geom = None
    if "geometry" not in raw:
        errs.append({"field": "geometry", "message": "missing"})
    else:
        geom = _set_spec(raw["geometry"], "geometry", errs, base_dir)
    if geom is not None and kernel is not None and geom.dim != kernel.dim:
        errs.append({"field": "geometry", "message": f"lives in R^{geom.dim} but kernel.dim is {kernel.dim}"})
    if geom is not None and not geom.bounded:
        if not (command == "converge-up" and geom.shape == "ray"):
            errs.append({"field": "geometry.shape",
                         "message": f"{geom.shape!r} is unbounded; only converge-up accepts a ray"})

    res = raw.get("resolution")
    if isinstance(res, list):
        if geom is not None and (geom.shape != "union" or len(res) != len(geom.parts)):
            errs.append({"field": "resolution", "message": "a list needs a union geometry with one entry per part"})
        if not all(_is_int(r) and r >= 1 for r in res):
            errs.append({"field": "resolution", "message": "entries must be integers >= 1"})
    elif not (_is_int(res) and res >= 1):
        errs.append({"field": "resolution", "message": "must be an integer >= 1 (or a list for unions)"})

    source = None
    sd = raw.get("source")
    n = kernel.dim if kernel is not None else (geom.dim if geom is not None else None)
    if sd is None:
        if command in NEEDS_SOURCE:
            errs.append({"field": "source", "message": f"required by {command}"})
    elif not isinstance(sd, dict) or ("charges" in sd) == ("measure_file" in sd):
        errs.append({"field": "source", "message": "must hold exactly one of 'charges' or 'measure_file'"})
    elif "charges" in sd:
        items = sd["charges"]
        if not (isinstance(items, list) and items):
            errs.append({"field": "source.charges", "message": "must be a non-empty list"})
        else:
            charges = []
            for i, c in enumerate(items):
                where = f"source.charges[{i}]"
                if not isinstance(c, dict) or "location" not in c:
                    errs.append({"field": where, "message": "needs a 'location'"})
                    continue
                ok = n is None or _point(c["location"], n, f"{where}.location", errs)
                m = c.get("mass", 1.0)
                if not (_is_num(m) and m > 0):
                    errs.append({"field": f"{where}.mass", "message": "must be a positive number"})
                    ok = False
                if ok:
                    charges.append(PointCharge(tuple(c["location"]), float(m)))
            if len(charges) == len(items):
                source = charges
    else:
        sub: list[dict] = []
        sspec = _set_spec(sd.get("geometry"), "source.geometry", sub, base_dir)
        sres = sd.get("resolution")
        if not (_is_int(sres) and sres >= 1):
            sub.append({"field": "source.resolution", "message": "must be an integer >= 1"})
        path = base_dir / str(sd["measure_file"])
        if not path.is_file():
            sub.append({"field": "source.measure_file", "message": f"file {str(sd['measure_file'])!r} not found"})
        if not sub and sspec is not None:
            try:
                source = measure_from_csv(path.read_text(), discretize(sspec, sres))
                if np.any(source.masses < 0):
                    sub.append({"field": "source.measure_file", "message": "masses must be non-negative"})
            except ValueError as e:
                sub.append({"field": "source.measure_file", "message": str(e)})
        errs.extend(sub)

    _check_options(opts, command, n, geom, errs, base_dir)

    out = raw.get("output_dir", "out")
    if not isinstance(out, str):
        errs.append({"field": "output_dir", "message": "must be a string"})
    if errs:
        raise ConfigError(errs)
    return RunConfig(kernel=kernel, geometry=geom, resolution=res, source=source, options=opts,
                     output_dir=out, raw=raw)


def _check_options(opts: dict, command: str, n, geom, errs: list[dict], base_dir: Path) -> None:
    for k in opts:
        if k not in OPTION_KEYS:
            errs.append({"field": f"options.{k}", "message": "unknown option"})
    if "tol" in opts and not (_is_num(opts["tol"]) and 0 < opts["tol"] < 1):
        errs.append({"field": "options.tol", "message": "must lie in (0, 1)"})
    if "max_iter" in opts and not (_is_int(opts["max_iter"]) and opts["max_iter"] > 0):
        errs.append({"field": "options.max_iter", "message": "must be a positive integer"})
    if "rng_seed" in opts and not (_is_int(opts["rng_seed"]) and 0 <= opts["rng_seed"] < 2**64):
        errs.append({"field": "options.rng_seed", "message": "must be an unsigned 64-bit integer"})
    for key in ("window", "shell_radius"):
        if key in opts and not (_is_num(opts[key]) and opts[key] > 0):
            errs.append({"field": f"options.{key}", "message": "must be a positive number"})
    for key in ("origin", "window_center", "shell_center"):
        if key in opts and n is not None:
            _point(opts[key], n, f"options.{key}", errs)
    if "gauss" in opts and not isinstance(opts["gauss"], bool):
        errs.append({"field": "options.gauss", "message": "must be true or false"})
    if "members" in opts and not (_is_int(opts["members"]) and opts["members"] >= 2):
        errs.append({"field": "options.members", "message": "must be an integer >= 2"})
    if "source_scales" in opts:
        _positive_list(opts["source_scales"], "options.source_scales", errs)
    if "zero_index" in opts:
        sc = opts.get("source_scales", [])
        if not (_is_int(opts["zero_index"]) and 0 <= opts["zero_index"] < max(len(sc), 1)):
            errs.append({"field": "options.zero_index", "message": "must index into options.source_scales"})
    if command == "converge-up":
        if "radii" not in opts:
            errs.append({"field": "options.radii", "message": "required by converge-up"})
        else:
            _positive_list(opts["radii"], "options.radii", errs, increasing=True)
    if command == "converge-down":
        subs = opts.get("subsets")
        if not (isinstance(subs, list) and subs):
            errs.append({"field": "options.subsets", "message": "converge-down needs a non-empty list of sets"})
        else:
            for i, s in enumerate(subs):
                _set_spec(s, f"options.subsets[{i}]", errs, base_dir)
    if "limit" in opts:
        _set_spec(opts["limit"], "options.limit", errs, base_dir)
        lr = opts.get("limit_resolution")
        if not (_is_int(lr) and lr >= 1):
            errs.append({"field": "options.limit_resolution", "message": "an integer >= 1 is required with options.limit"})
    if "rest_subset" in opts:
        _set_spec(opts["rest_subset"], "options.rest_subset", errs, base_dir)


def set_from_option(cfg: RunConfig, key: str) -> SetSpec:
    return SetSpec.from_dict(cfg.options[key])


def charges_on_nodes(cfg: RunConfig, S: DiscreteSet) -> list[dict]:
    """Violations for charges that coincide with a panel node of ``S``."""
    out = []
    if not isinstance(cfg.source, list):
        return out
    for i, q in enumerate(cfg.source):
        if np.any(np.linalg.norm(S.nodes - np.asarray(q.location), axis=1) == 0):
            out.append({"field": f"source.charges[{i}].location",
                        "message": "charge lies on a panel node; the source potential must be bounded and "
                                   "continuous on the set (continuity hypothesis on the source)"})
    return out
