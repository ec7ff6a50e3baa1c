"""Inner balayage (sweeping) of a source onto a panel set, and its verification.

The swept measure is the minimiser of ``w^T K w - 2 b^T w`` over ``w >= 0``
with ``b`` the source potential averaged over each panel.  The checks below
test the properties that characterise it: potential equality on the set,
domination off the set, the symmetry relation, minimality of the Gauss
functional, potential and energy among measures dominating the source on
the set, the energy identity, the mass bound and the rest identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DiscreteSet, fibonacci_directions
from .kernel import KernelSpec, assemble_matrix, potential
from .measure import (DiscreteMeasure, PointCharge, as_charges, check_charges_off_set, field_on_panels,
                      source_mass)
from .qp import DEFAULT_MAX_ITER, DEFAULT_TOL, QPSolution, solve_cone
from .report import Report

SHELL_FACTORS = (1.5, 2.0, 4.0)
MIDPOINT_FRACTIONS = (0.25, 0.5, 0.75)

# thresholds for verify_characterizations
POTENTIAL_MATCH_TOL = 1e-2
DOMINATION_TOL = 1e-3
ENERGY_IDENTITY_TOL = 1e-6
SYMMETRY_TOL = 1e-2
MASS_BOUND_TOL = 1e-6


class SolverError(RuntimeError):
    """The quadratic program did not reach its KKT tolerance."""


def shell_directions(dim: int, count: int = 64) -> np.ndarray:
    if dim == 3:
        return fibonacci_directions(count)
    if dim == 2:
        t = 2 * math.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    raise ValueError("probe shells are implemented for dim 2 and 3")


def probe_points(S: DiscreteSet, omega=None, count: int = 64) -> np.ndarray:
    """Fixed off-set probes: shells at 1.5, 2 and 4 circumradii around the set's centre,
    plus points between the nearest node and each point charge.

    Probes closer than one panel circumradius to a charge are dropped.
    """
    c = S.center()
    R = S.circumradius()
    dirs = shell_directions(S.dim, count)
    pts = [c + f * R * dirs for f in SHELL_FACTORS]
    charges = [] if omega is None or isinstance(omega, DiscreteMeasure) else as_charges(omega)
    for q in charges:
        z = np.asarray(q.location)
        k = int(np.argmin(np.linalg.norm(S.nodes - z, axis=1)))
        p = S.nodes[k]
        pts.append(np.array([p + t * (z - p) for t in MIDPOINT_FRACTIONS]))
    P = np.vstack(pts)
    if charges:
        locs = np.array([q.location for q in charges])
        d = np.min(np.linalg.norm(P[:, None, :] - locs[None, :, :], axis=2), axis=1)
        P = P[d > S.cell_radii.max()]
    return P


def source_potential(spec: KernelSpec, omega, probes) -> np.ndarray:
    return potential(spec, omega, probes)


@dataclass(eq=False)
class BalayageResult:
    swept: DiscreteMeasure
    source_mass: float
    swept_mass: float
    energy_swept: float
    mutual_energy_source: float
    potential_match_residual: float
    domination_residual: float
    gauss_value: float
    qp: QPSolution
    b: np.ndarray
    probes: np.ndarray

    def to_dict(self) -> dict:
        return {
            "source_mass": self.source_mass, "swept_mass": self.swept_mass,
            "energy_swept": self.energy_swept, "mutual_energy_source": self.mutual_energy_source,
            "potential_match_residual": self.potential_match_residual,
            "domination_residual": self.domination_residual, "gauss_value": self.gauss_value,
            "qp": {"objective": self.qp.objective, "kkt_stationarity": self.qp.kkt_stationarity,
                   "kkt_complementarity": self.qp.kkt_complementarity, "iterations": self.qp.iterations,
                   "converged": self.qp.converged},
            "panels": len(self.swept.set), "set_key": self.swept.set.key,
        }


def _source_at_nodes(spec, omega, S):
    """Point values of U^omega at the nodes (not panel means), used for the matching residual."""
    if isinstance(omega, DiscreteMeasure):
        return field_on_panels(spec, omega, S)
    return potential(spec, omega, S.nodes)


def sweep(omega, target: DiscreteSet, spec: KernelSpec, tol: float = DEFAULT_TOL,
          max_iter: int = DEFAULT_MAX_ITER, require_convergence: bool = True) -> BalayageResult:
    """Inner balayage of ``omega`` (point charges or a discrete measure) onto ``target``."""
    if target.dim != spec.dim:
        raise ValueError(f"target dimension {target.dim} differs from kernel dimension {spec.dim}")
    check_charges_off_set(omega, target)
    K = assemble_matrix(spec, target).entries
    b = field_on_panels(spec, omega, target)
    sol = solve_cone(K, b, tol=tol, max_iter=max_iter)
    if require_convergence and not sol.converged:
        raise SolverError(f"balayage QP did not converge in {sol.iterations} iterations "
                          f"(stationarity {sol.kkt_stationarity:.3e}, complementarity {sol.kkt_complementarity:.3e})")
    w = sol.w
    swept = DiscreteMeasure(target, w)
    Kw = K @ w
    u_nodes = _source_at_nodes(spec, omega, target)
    match = float(np.max(np.abs(Kw - u_nodes)) / np.max(np.abs(u_nodes))) if np.any(u_nodes) else 0.0
    probes = probe_points(target, omega)
    dom = domination_excess(spec, swept, omega, probes)
    return BalayageResult(
        swept=swept, source_mass=source_mass(omega), swept_mass=float(w.sum()), energy_swept=float(w @ Kw),
        mutual_energy_source=float(w @ b), potential_match_residual=match, domination_residual=dom,
        gauss_value=sol.objective, qp=sol, b=b, probes=probes)


def domination_excess(spec, mu: DiscreteMeasure, omega, probes) -> float:
    """max over probes of (U^mu - U^omega)_+ / U^omega."""
    if len(probes) == 0:
        return 0.0
    um = potential(spec, mu, probes)
    uo = potential(spec, omega, probes)
    return float(max(0.0, np.max((um - uo) / uo)))


# ---------------------------------------------------------------------------
# random test measures


def random_charges(S: DiscreteSet, rng: np.random.Generator, count: int = 3) -> list[PointCharge]:
    """Point charges at random positions 1.3-3 circumradii from the set's centre."""
    c, R = S.center(), S.circumradius()
    dirs = rng.standard_normal((count, S.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = R * rng.uniform(1.3, 3.0, count)
    masses = rng.uniform(0.2, 1.0, count)
    return [PointCharge(tuple(c + r * d), float(m)) for d, r, m in zip(dirs, radii, masses)]


def dominating_perturbation(mu: DiscreteMeasure, rng: np.random.Generator, scale: float) -> DiscreteMeasure:
    """``mu`` plus positive masses on a random subset of panels (total extra mass ~ ``scale``)."""
    n = len(mu.set)
    mask = rng.random(n) < 0.3
    if not mask.any():
        mask[rng.integers(n)] = True
    extra = np.where(mask, rng.random(n), 0.0)
    extra *= scale / extra.sum()
    return DiscreteMeasure(mu.set, mu.masses + extra)


# ---------------------------------------------------------------------------
# verification


def verify_characterizations(result: BalayageResult, spec: KernelSpec, target: DiscreteSet, omega,
                             rng_seed: int = 0, tol: float = DEFAULT_TOL) -> Report:
    """Run the characterisation suite on a computed balayage."""
    rep = Report("balayage characterisations")
    rep.data["rng_seed"] = int(rng_seed)
    rng = np.random.default_rng(rng_seed)
    K = assemble_matrix(spec, target).entries
    w = result.swept.masses
    b = result.b
    scale = max(1.0, float(np.max(np.abs(b))))
    slack = 10 * tol * scale
    Kw = K @ w
    probes = np.vstack([result.probes, target.nodes])

    rep.add("potential_match", result.potential_match_residual, POTENTIAL_MATCH_TOL,
            note="max over nodes |U^sw - U^src| / max U^src")

    # symmetry relation: int U^{w^A} d sigma = int U^omega d sigma^A
    sym = []
    for _ in range(5):
        sigma = random_charges(target, rng)
        ws = sweep(sigma, target, spec, tol=tol).swept.masses
        lhs = float(w @ field_on_panels(spec, sigma, target))
        rhs = float(ws @ b)
        sym.append(abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    rep.add("symmetry", max(sym), SYMMETRY_TOL, note="5 random charge triples")
    rep.skip("exhaustion_limit", "covered by the convergence module")

    # Gauss functional minimality over random feasible measures
    worst = -math.inf
    for k in range(10):
        if k % 2 == 0:
            mu = np.maximum(w + rng.normal(0, 1, len(w)) * (w.mean() + 1e-12), 0.0)
        else:
            mu = rng.random(len(w)) * 2 * max(w.sum(), 1e-12) / len(w)
        worst = max(worst, result.gauss_value - float(mu @ (K @ mu) - 2 * b @ mu))
    rep.add("gauss_minimality", max(worst, 0.0), slack, note="Gauss value minus min over 10 random measures")

    # minimum potential and minimum energy over the dominating class
    pot_gap, en_gap = -math.inf, -math.inf
    u_sw = potential(spec, result.swept, probes)
    members_ok = True
    for _ in range(5):
        nu = dominating_perturbation(result.swept, rng, scale=rng.uniform(0.05, 0.5) * max(result.swept_mass, 1e-12))
        members_ok &= bool(np.all(K @ nu.masses >= b - slack))
        pot_gap = max(pot_gap, float(np.max(u_sw - potential(spec, nu, probes))))
        en_gap = max(en_gap, float(w @ Kw) - nu.energy(spec))
    rep.add("class_membership", 0.0 if members_ok else 1.0, 0.0, note="perturbed measures dominate U^src at nodes")
    rep.add("minimum_potential", max(pot_gap, 0.0), slack)
    rep.add("minimum_energy", max(en_gap, 0.0), slack)

    rep.add("domination", result.domination_residual, DOMINATION_TOL, note="(U^sw - U^src)_+ / U^src off the set")
    e = result.energy_swept
    rep.add("energy_identity", abs(e - result.mutual_energy_source) / e if e > 0 else 0.0, ENERGY_IDENTITY_TOL)
    ratio = result.swept_mass / result.source_mass - 1.0
    rep.add("mass_bound", max(ratio, 0.0), MASS_BOUND_TOL, note=f"swept {result.swept_mass:.6g} / source {result.source_mass:.6g}")
    rep.data.update(swept_mass=result.swept_mass, source_mass=result.source_mass, panels=len(target))
    return rep


def sweep_with_rest(omega, A: DiscreteSet, Aprime: DiscreteSet, spec: KernelSpec,
                    tol: float = DEFAULT_TOL) -> Report:
    """Compare the direct sweep onto ``Aprime`` with sweeping onto ``A`` first, then onto ``Aprime``."""
    if not Aprime.is_subset_of(A):
        raise ValueError("Aprime must consist of panels of A")
    rep = Report("balayage with a rest")
    rA = sweep(omega, A, spec, tol)
    direct = sweep(omega, Aprime, spec, tol)
    twice = sweep(rA.swept, Aprime, spec, tol)
    K = assemble_matrix(spec, Aprime).entries
    d = direct.swept.masses - twice.swept.masses
    dist = math.sqrt(max(float(d @ (K @ d)), 0.0))
    norm = math.sqrt(direct.energy_swept)
    rep.add("relative_energy_distance", dist / norm if norm > 0 else dist, 1e-3)
    probes = np.vstack([probe_points(A, omega), A.nodes])
    u_small = potential(spec, direct.swept, probes)
    u_big = potential(spec, rA.swept, probes)
    excess = float(np.max((u_small - u_big) / np.maximum(np.abs(u_big), 1e-300)))
    rep.add("potential_order", max(excess, 0.0), 1e-6 + 10 * tol, note="(U^{w^A'} - U^{w^A})_+ relative at probes and nodes")
    rep.add("mass_order", max(direct.swept_mass - rA.swept_mass, 0.0), 10 * tol * max(1.0, rA.swept_mass))
    rep.data.update(mass_A=rA.swept_mass, mass_Aprime=direct.swept_mass, mass_twice=twice.swept_mass,
                    distance=dist, panels_A=len(A), panels_Aprime=len(Aprime))
    return rep


def minimum_mass_check(result: BalayageResult, spec: KernelSpec, target: DiscreteSet, omega,
                       rng_seed: int = 0, tol: float = DEFAULT_TOL, members: int = 10) -> Report:
    """The swept measure has the least total mass among sampled measures dominating the source on the set.

    Uniqueness of the minimiser is not asserted.
    """
    rep = Report("minimum total mass")
    rep.data["rng_seed"] = int(rng_seed)
    rng = np.random.default_rng(rng_seed)
    K = assemble_matrix(spec, target).entries
    b = result.b
    slack = 10 * tol * max(1.0, float(np.max(np.abs(b))))
    masses = []
    worst = -math.inf
    for k in range(members):
        if k == 0:
            nu = result.swept
        else:
            nu = dominating_perturbation(result.swept, rng, scale=rng.uniform(0.01, 0.5) * max(result.swept_mass, 1e-12))
        if not np.all(K @ nu.masses >= b - slack):
            rep.add(f"member_{k}_membership", 1.0, 0.0)
            continue
        masses.append(nu.total())
        worst = max(worst, result.swept_mass - nu.total())
    rep.add("mass_minimality", max(worst, 0.0), slack, note=f"{len(masses)} verified members")
    rep.data.update(member_masses=masses, swept_mass=result.swept_mass)
    return rep
