"""Command-line front end.

    riesz-balayage <command> --config <path|scenario> [--out DIR] [--seed N] [--tol X] [--quiet]

Exit status: 0 success, 1 invalid config, 2 solver did not converge,
3 a verification row failed.  Every run writes ``result.json``; commands
that produce a measure also write ``measure.csv``, the convergence commands
write per-stage CSV tables and ``verify`` writes ``references.csv`` when a
closed-form reference applies.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .balayage import SolverError, minimum_mass_check, sweep, sweep_with_rest, verify_characterizations
from .config import (COMMANDS, SCHEMA_VERSION, ConfigError, RunConfig, bundled_scenarios, build_set,
                     charges_on_nodes, parse_config, read_config, set_from_option)
from .convergence import constants_monotone, gauss_exhaustion, sweep_decreasing, sweep_exhaustion
from .equilibrium import FROSTMAN_TOL, equilibrium_mass_identity, equilibrium_measure
from .gauss import lambda_class_extremality, representation_check, solve_gauss, support_compactness_probe, trichotomy
from .geometry import SetSpec, analytic_measure, exhaustion, restrict
from .measure import measure_to_csv
from .oracle import newtonian_ball_sweep_mass, newtonian_sphere_capacity, reference_table_csv
from .report import Report, jsonable

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3
REFERENCE_TOL = 2e-2


class Run:
    """Collects artifacts in memory and writes them once the command has finished."""

    def __init__(self, cfg: RunConfig, command: str, out: Path):
        self.cfg, self.command, self.out = cfg, command, out
        self.files: dict[str, str] = {}
        self.result: dict = {}
        self.reports: list[Report] = []

    def add_report(self, rep: Report) -> Report:
        self.reports.append(rep)
        return rep

    @property
    def failed(self) -> list[str]:
        return [f"{r.title}: {c.name}" for r in self.reports if r.applicable for c in r.failures()]

    def document(self) -> dict:
        return {
            "schema": SCHEMA_VERSION, "command": self.command, "code_version": __version__,
            "config_hash": self.cfg.digest(), "rng_seed": self.cfg.rng_seed, "tol": self.cfg.tol,
            "config": self.cfg.raw, "result": jsonable(self.result),
            "reports": [r.to_dict() for r in self.reports], "failed_checks": self.failed,
        }

    def write(self) -> list[Path]:
        self.out.mkdir(parents=True, exist_ok=True)
        files = dict(self.files)
        files["result.json"] = json.dumps(self.document(), indent=2, allow_nan=False) + "\n"
        paths = []
        for name, text in sorted(files.items()):
            p = self.out / name
            p.write_text(text)
            paths.append(p)
        return paths


def _panels_csv(S) -> str:
    head = ",".join([f"x{k}" for k in range(S.dim)] + ["measure", "radius", "cell_dim"])
    rows = [head]
    for p, m, r, d in zip(S.nodes, S.cell_measures, S.cell_radii, S.cell_dims):
        rows.append(",".join(repr(float(v)) for v in p) + f",{float(m)!r},{float(r)!r},{int(d)}")
    return "\n".join(rows) + "\n"


def _target(cfg: RunConfig):
    try:
        S = build_set(cfg.geometry, cfg.resolution)
    except ValueError as e:
        raise ConfigError([{"field": "geometry", "message": str(e)}]) from e
    bad = charges_on_nodes(cfg, S)
    if bad:
        raise ConfigError(bad)
    return S


def _option_set(cfg: RunConfig, key: str, base):
    try:
        return restrict(base, set_from_option(cfg, key))
    except ValueError as e:
        raise ConfigError([{"field": f"options.{key}", "message": str(e)}]) from e


def cmd_discretize(run: Run) -> None:
    cfg = run.cfg
    S = _target(cfg)
    try:
        exact = analytic_measure(cfg.geometry)
    except ValueError:
        exact = math.nan
    run.result = {"panels": len(S), "set_key": S.key, "spec_hash": cfg.geometry.digest(),
                  "total_measure": S.total_measure(), "analytic_measure": exact,
                  "cell_dims": sorted({int(d) for d in S.cell_dims})}
    run.files["panels.csv"] = _panels_csv(S)


def cmd_sweep(run: Run) -> None:
    cfg = run.cfg
    S = _target(cfg)
    r = sweep(cfg.source, S, cfg.kernel, cfg.tol, cfg.max_iter)
    run.result = r.to_dict()
    run.files["measure.csv"] = measure_to_csv(r.swept)


def cmd_equilibrium(run: Run) -> None:
    cfg = run.cfg
    S = _target(cfg)
    e = equilibrium_measure(S, cfg.kernel, cfg.tol, cfg.max_iter)
    run.result = e.to_dict()
    run.files["measure.csv"] = measure_to_csv(e.gamma)


def cmd_gauss(run: Run) -> None:
    cfg = run.cfg
    S = _target(cfg)
    g = solve_gauss(cfg.source, S, cfg.kernel, cfg.tol, cfg.max_iter)
    run.result = g.to_dict()
    run.files["measure.csv"] = measure_to_csv(g.lam)


def cmd_converge_up(run: Run) -> None:
    cfg, o = run.cfg, run.cfg.options
    if isinstance(cfg.resolution, list):
        raise ConfigError([{"field": "resolution", "message": "converge-up needs a single resolution"}])
    try:
        stages = exhaustion(cfg.geometry, o["radii"], cfg.resolution, o.get("origin"))
    except ValueError as e:
        raise ConfigError([{"field": "options.radii", "message": str(e)}]) from e
    bad = charges_on_nodes(cfg, stages[-1])
    if bad:
        raise ConfigError(bad)
    labels = [f"R={r:g}" for r in o["radii"]]
    bal = sweep_exhaustion(cfg.source, stages, cfg.kernel, cfg.tol)
    bal.stage_labels = labels
    run.add_report(bal.checks(cfg.tol))
    run.result["balayage"] = bal.to_dict()
    run.files["stages.csv"] = bal.to_csv()
    run.files["measure.csv"] = measure_to_csv(bal.measures[-1])
    if o.get("gauss", True):
        gr = gauss_exhaustion(cfg.source, stages, cfg.kernel, cfg.tol, window=o.get("window"),
                              center=o.get("window_center"))
        gr.stage_labels = labels
        rep = gr.checks(cfg.tol)
        rep.title = "Gauss minimisers along increasing stages"
        swept = gr.extra["swept_masses"]
        if all(m <= 1 + cfg.tol for m in swept):
            rep.add("constants_monotone", constants_monotone(gr.constants_c, True, cfg.tol),
                    cfg.tol * max(1.0, max(abs(c) for c in gr.constants_c)),
                    note="c non-increasing while every swept mass is at most 1")
        run.add_report(rep)
        run.result["gauss"] = gr.to_dict()
        run.files["gauss_stages.csv"] = gr.to_csv()
        if "shell_radius" in o:
            probe = support_compactness_probe(cfg.source, stages, cfg.kernel, cfg.tol,
                                              shell_radius=o["shell_radius"], center=o.get("shell_center"))
            if not swept[-1] > 1 + cfg.tol:
                probe.applicable = False
                probe.data["reason"] = "final swept mass does not exceed 1"
            run.add_report(probe)


def cmd_converge_down(run: Run) -> None:
    cfg, o = run.cfg, run.cfg.options
    base = _target(cfg)
    stages = []
    for i, d in enumerate(o["subsets"]):
        try:
            stages.append(restrict(base, SetSpec.from_dict(d)))
        except ValueError as e:
            raise ConfigError([{"field": f"options.subsets[{i}]", "message": str(e)}]) from e
    limit = None
    if "limit" in o:
        try:
            limit = build_set(set_from_option(cfg, "limit"), o["limit_resolution"])
        except ValueError as e:
            raise ConfigError([{"field": "options.limit", "message": str(e)}]) from e
    try:
        rep = sweep_decreasing(cfg.source, stages, cfg.kernel, cfg.tol, limit=limit)
    except ValueError as e:
        if "nested" in str(e):
            raise ConfigError([{"field": "options.subsets", "message": str(e)}]) from e
        raise
    run.add_report(rep.checks(cfg.tol))
    run.result["balayage"] = rep.to_dict()
    run.files["stages.csv"] = rep.to_csv()
    run.files["measure.csv"] = measure_to_csv(rep.measures[-1])


def _references(cfg: RunConfig, swept_mass: float, cap: float) -> list:
    """Closed-form values available for the Newtonian kernel on a sphere in R^3."""
    g, k = cfg.geometry, cfg.kernel
    if not (k.alpha == 2 and k.dim == 3 and g.shape == "sphere" and isinstance(cfg.source, list)):
        return []
    c = np.asarray(g.center)
    d = [float(np.linalg.norm(np.asarray(q.location) - c)) for q in cfg.source]
    if any(t <= g.radius for t in d):
        return []
    refs = [newtonian_sphere_capacity(g.radius)]
    mass = sum(q.mass * newtonian_ball_sweep_mass(g.radius, t).value for q, t in zip(cfg.source, d))
    refs.append(type(refs[0])(f"sweep_mass r={g.radius} charges={len(d)}", mass, "closed_form",
                              1e-15 * max(1.0, mass)))
    return [(refs[0], cap), (refs[1], swept_mass)]


def cmd_verify(run: Run) -> None:
    cfg, o = run.cfg, run.cfg.options
    S = _target(cfg)
    k, tol, seed = cfg.kernel, cfg.tol, cfg.rng_seed
    r = sweep(cfg.source, S, k, tol, cfg.max_iter)
    run.result["balayage"] = r.to_dict()
    run.add_report(verify_characterizations(r, k, S, cfg.source, seed, tol))
    run.add_report(minimum_mass_check(r, k, S, cfg.source, seed, tol))

    e = equilibrium_measure(S, k, tol, cfg.max_iter)
    run.result["equilibrium"] = e.to_dict()
    eq = Report("equilibrium measure")
    eq.add("frostman", e.frostman_excess, FROSTMAN_TOL, note="(U^gamma - 1)_+ at probes and nodes")
    eq.add("potential_on_support", e.potential_residual, 100 * tol)
    eq.data.update(capacity=e.capacity)
    run.add_report(eq)
    run.add_report(equilibrium_mass_identity(cfg.source, S, k, tol))

    g = solve_gauss(cfg.source, S, k, tol, cfg.max_iter)
    run.result["gauss"] = g.to_dict()
    run.add_report(representation_check(g, r, e, tol))
    run.add_report(lambda_class_extremality(g, k, S, seed, tol, members=o.get("members", 10),
                                            gamma=e.gamma, omega=cfg.source))
    if "rest_subset" in o:
        run.add_report(sweep_with_rest(cfg.source, S, _option_set(cfg, "rest_subset", S), k, tol))
    if "source_scales" in o:
        run.add_report(trichotomy(cfg.source, S, k, o["source_scales"], tol, zero_index=o.get("zero_index")))

    pairs = _references(cfg, r.swept_mass, e.capacity)
    if pairs:
        ref = Report("closed-form references")
        for rv, got in pairs:
            ref.add(rv.name.split(" ")[0], abs(got - rv.value) / abs(rv.value), REFERENCE_TOL,
                    note=f"computed {got:.6g}, reference {rv.value:.6g}")
        run.add_report(ref)
        run.files["references.csv"] = reference_table_csv([rv for rv, _ in pairs])
    run.files["measure.csv"] = measure_to_csv(r.swept)


HANDLERS = {
    "discretize": cmd_discretize, "sweep": cmd_sweep, "equilibrium": cmd_equilibrium, "gauss": cmd_gauss,
    "converge-up": cmd_converge_up, "converge-down": cmd_converge_down, "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riesz-balayage", description=__doc__.split("\n\n")[0],
                                 epilog="bundled scenarios: " + ", ".join(bundled_scenarios()))
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON config file or bundled scenario name")
    ap.add_argument("--out", help="output directory (overrides output_dir in the config)")
    ap.add_argument("--seed", type=int, help="rng seed for randomised checks (overrides options.rng_seed)")
    ap.add_argument("--tol", type=float, help="solver tolerance (overrides options.tol)")
    ap.add_argument("--quiet", action="store_true", help="print nothing on success")
    return ap


def _fail_config(err: ConfigError, out: Path | None) -> int:
    text = json.dumps(err.to_dict(), indent=2)
    print(text, file=sys.stderr)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(text + "\n")
    return EXIT_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out) if args.out else None
    try:
        raw, base_dir = read_config(args.config)
        cfg = parse_config(raw, args.command, base_dir, {"rng_seed": args.seed, "tol": args.tol})
    except ConfigError as e:
        return _fail_config(e, out)
    except json.JSONDecodeError as e:
        return _fail_config(ConfigError([{"field": "--config", "message": f"not valid JSON: {e}"}]), out)
    out = out or Path(cfg.output_dir)
    run = Run(cfg, args.command, out)
    try:
        HANDLERS[args.command](run)
    except ConfigError as e:
        return _fail_config(e, out)
    except SolverError as e:
        print(f"solver did not converge: {e}", file=sys.stderr)
        return EXIT_SOLVER
    paths = run.write()
    status = EXIT_VERIFY if run.failed else EXIT_OK
    if not args.quiet or status:
        stream = sys.stdout if status == EXIT_OK else sys.stderr
        for rep in run.reports:
            for c in rep.checks:
                mark = "n/a " if not rep.applicable else ("PASS" if c.passed else "FAIL")
                print(f"{mark} {rep.title}: {c.name} = {c.value:.3g}", file=stream)
        if not args.quiet:
            for p in paths:
                print(f"wrote {p}")
    return status


if __name__ == "__main__":
    sys.exit(main())
