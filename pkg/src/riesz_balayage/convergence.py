"""Sweeping and Gauss problems along nested sequences of panel sets.

Increasing stages model an exhaustion K_j of an unbounded set; decreasing
stages model A_j shrinking to their intersection.  Measures of different
stages are compared in the energy norm of the largest stage (smaller stages
are zero-padded into it).  "Vague" convergence is tracked through integrals
of five fixed smooth bumps.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .balayage import probe_points, sweep
from .gauss import solve_gauss
from .geometry import DiscreteSet
from .kernel import KernelSpec, assemble_matrix, potential
from .measure import DiscreteMeasure, distance_between, embed
from .qp import DEFAULT_TOL
from .report import Report

LIMIT_TOL = 1e-2


def check_nested(stages: list[DiscreteSet], increasing: bool = True) -> None:
    if not stages:
        raise ValueError("no stages")
    for a, b in zip(stages, stages[1:]):
        small, big = (a, b) if increasing else (b, a)
        if not small.is_subset_of(big):
            kind = "increasing" if increasing else "decreasing"
            raise ValueError(f"stages are not nested {kind} (node sets must be included)")


@dataclass(frozen=True)
class Bump:
    center: tuple[float, ...]
    radius: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        t = np.linalg.norm(np.atleast_2d(x) - np.asarray(self.center), axis=1) / self.radius
        out = np.zeros(len(t))
        inside = t < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        return out


def default_bumps(S: DiscreteSet, count: int = 5) -> list[Bump]:
    """Bumps centred at nodes spread over ``S`` by distance from its first node."""
    ref = S.nodes[0]
    order = np.argsort(np.linalg.norm(S.nodes - ref, axis=1), kind="stable")
    picks = order[np.linspace(0, len(order) - 1, count).round().astype(int)]
    R = max(S.circumradius(), 1e-12)
    return [Bump(tuple(float(v) for v in S.nodes[i]), 0.3 * R) for i in picks]


def bump_integrals(mu: DiscreteMeasure, bumps: list[Bump]) -> np.ndarray:
    return np.array([float(mu.masses @ f(mu.set.nodes)) for f in bumps])


@dataclass(eq=False)
class ConvergenceReport:
    stage_labels: list[str]
    masses: list[float]
    energies: list[float]
    gauss_values: list[float]
    constants_c: list[float]
    pairwise_strong_distances: list[float]
    potential_monotonicity_violations: list[float]
    bump_integrals: np.ndarray
    limit_estimate: str
    increasing: bool
    kind: str = "balayage"
    measures: list[DiscreteMeasure] = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("stage,label,panels,mass,energy,gauss_value,c,distance_to_next,max_potential_violation\n")
        n = len(self.stage_labels)
        for j in range(n):
            dist = self.pairwise_strong_distances[j] if j < n - 1 else float("nan")
            viol = self.potential_monotonicity_violations[j - 1] if j > 0 else float("nan")
            c = self.constants_c[j] if self.constants_c else float("nan")
            buf.write(f"{j},{self.stage_labels[j]},{len(self.measures[j].set) if self.measures else ''},"
                      f"{self.masses[j]!r},{self.energies[j]!r},{self.gauss_values[j]!r},{c!r},{dist!r},{viol!r}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "increasing": self.increasing, "stage_labels": self.stage_labels,
            "masses": self.masses, "energies": self.energies, "gauss_values": self.gauss_values,
            "constants_c": self.constants_c, "pairwise_strong_distances": self.pairwise_strong_distances,
            "potential_monotonicity_violations": self.potential_monotonicity_violations,
            "bump_integrals": self.bump_integrals.tolist(), "limit_estimate": self.limit_estimate,
            "sampling_note": "monotone-net statements are sampled along the declared sequence of stages only",
            **self.extra,
        }

    def checks(self, tol: float = DEFAULT_TOL) -> Report:
        """Monotonicity checks expected along this kind of nested sequence."""
        rep = Report(f"{self.kind} along {'increasing' if self.increasing else 'decreasing'} stages")
        scale = max(1.0, max(abs(e) for e in self.energies) if self.energies else 1.0)
        if self.kind == "balayage":
            rep.add("potential_monotone", max([0.0] + self.potential_monotonicity_violations), tol * scale,
                    note="worst wrong-direction potential increment at fixed probes")
            steps = np.diff(self.energies)
            bad = -steps if self.increasing else steps
            rep.add("energy_monotone", float(max([0.0] + list(bad))), tol * scale)
            msteps = np.diff(self.masses)
            mbad = -msteps if self.increasing else msteps
            rep.add("mass_monotone", float(max([0.0] + list(mbad))), tol * max(1.0, max(self.masses)))
        d = self.pairwise_strong_distances
        if len(d) >= 2:
            worst = max(b - a for a, b in zip(d, d[1:]))
            rep.add("distances_decreasing", worst, 0.0, passed=worst < 0,
                    note="consecutive strong distances must strictly decrease")
        if "limit_relative_distance" in self.extra:
            rep.add("limit_distance", self.extra["limit_relative_distance"], LIMIT_TOL,
                    note="last stage against a direct sweep of the limit set, relative energy distance")
        return rep


def _stage_probes(stages, omega, increasing):
    ref = stages[0] if increasing else stages[-1]
    big = stages[-1] if increasing else stages[0]
    return np.vstack([probe_points(big, omega), ref.nodes])


def _run(omega, stages, spec, tol, increasing, kind, bumps, probes):
    check_nested(stages, increasing)
    big = stages[-1] if increasing else stages[0]
    Kbig = assemble_matrix(spec, big).entries
    if bumps is None:
        bumps = default_bumps(stages[0] if increasing else stages[-1])
    if probes is None:
        probes = _stage_probes(stages, omega, increasing)
    measures, masses, energies, values, cs, pots = [], [], [], [], [], []
    extra_mass = []
    for S in stages:
        if kind == "balayage":
            r = sweep(omega, S, spec, tol)
            mu, val = r.swept, r.gauss_value
            cs.append(float("nan"))
        else:
            g = solve_gauss(omega, S, spec, tol)
            mu, val = g.lam, g.w_value
            cs.append(g.c_weighted)
            extra_mass.append(g.swept_mass)
        measures.append(mu)
        masses.append(mu.total())
        energies.append(mu.energy(spec))
        values.append(val)
        pots.append(potential(spec, mu, probes))
    padded = [embed(m, big).masses for m in measures]
    dists = []
    for a, b in zip(padded, padded[1:]):
        u = a - b
        dists.append(math.sqrt(max(float(u @ (Kbig @ u)), 0.0)))
    viol = []
    for p0, p1 in zip(pots, pots[1:]):
        inc = p1 - p0
        if kind == "balayage":
            viol.append(float(max(0.0, np.max(-inc if increasing else inc))))
        else:
            # Gauss minimisers carry no potential ordering
            viol.append(math.nan)
    rep = ConvergenceReport(
        stage_labels=[f"stage{j}" for j in range(len(stages))], masses=masses, energies=energies,
        gauss_values=values, constants_c=cs if kind == "gauss" else [], pairwise_strong_distances=dists,
        potential_monotonicity_violations=viol, bump_integrals=np.array([bump_integrals(m, bumps) for m in measures]),
        limit_estimate=measures[-1].set.key, increasing=increasing, kind=kind, measures=measures,
        extra={"bumps": [{"center": list(b.center), "radius": b.radius} for b in bumps]})
    if kind == "gauss":
        rep.extra["swept_masses"] = extra_mass
    return rep


def sweep_exhaustion(omega, stages: list[DiscreteSet], spec: KernelSpec, tol: float = DEFAULT_TOL,
                     bumps=None, probes=None) -> ConvergenceReport:
    """Balayage onto each stage of an increasing nested sequence."""
    return _run(omega, stages, spec, tol, True, "balayage", bumps, probes)


def sweep_decreasing(omega, stages: list[DiscreteSet], spec: KernelSpec, tol: float = DEFAULT_TOL,
                     limit: DiscreteSet | None = None, bumps=None, probes=None) -> ConvergenceReport:
    """Balayage onto each stage of a decreasing nested sequence.

    With ``limit`` given, the last stage's swept measure is compared with a
    direct sweep onto ``limit`` (any panel set, nested or not), and the fixed
    probes default to the off-set probe shells plus the nodes of ``limit``.
    """
    if probes is None and limit is not None:
        probes = np.vstack([probe_points(stages[0], omega), limit.nodes])
    rep = _run(omega, stages, spec, tol, False, "balayage", bumps, probes)
    # stage nodes off the limit set are reported but not part of the fixed probes
    nodes = stages[-1].nodes
    pots = [potential(spec, m, nodes) for m in rep.measures]
    rep.extra["stage_node_potential_increase"] = max(
        [0.0] + [float(np.max(b - a)) for a, b in zip(pots, pots[1:])])
    if limit is not None:
        direct = sweep(omega, limit, spec, tol).swept
        d = distance_between(spec, rep.measures[-1], direct)
        rep.extra["limit_distance"] = d
        rep.extra["limit_relative_distance"] = d / math.sqrt(direct.energy(spec))
        rep.extra["limit_mass"] = direct.total()
    return rep


def gauss_exhaustion(omega, stages: list[DiscreteSet], spec: KernelSpec, tol: float = DEFAULT_TOL,
                     increasing: bool = True, bumps=None, window: float | None = None,
                     center=None) -> ConvergenceReport:
    """Gauss minimisers along nested stages.

    ``window`` (a radius about ``center``) adds the mass each minimiser puts
    inside that ball; its trend estimates the mass of the vague limit.
    """
    rep = _run(omega, stages, spec, tol, increasing, "gauss", bumps, None)
    if window is not None:
        c = np.zeros(spec.dim) if center is None else np.asarray(center, float)
        wm = [float(m.masses[np.linalg.norm(m.set.nodes - c, axis=1) <= window].sum()) for m in rep.measures]
        rep.extra["window_radius"] = window
        rep.extra["window_masses"] = wm
        rep.extra["vague_limit_mass_estimate"] = wm[-1]
    return rep


def constants_monotone(c: list[float], increasing: bool, tol: float = DEFAULT_TOL) -> float:
    """Worst violation of the expected direction: non-increasing for exhaustions, non-decreasing otherwise."""
    steps = np.diff(c)
    bad = steps if increasing else -steps
    return float(max([0.0] + list(bad)))
