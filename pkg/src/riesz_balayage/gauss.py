"""Gauss variational problem: minimise the weighted energy over probability measures.

With external field ``f = -U^omega`` the weighted energy of ``w`` is
``w^T K w - 2 b^T w`` and the minimiser over the simplex is ``lambda``.
The KKT multiplier ``c = lambda^T (K lambda - b)`` is the weighted
equilibrium constant: the weighted potential ``K lambda - b`` is at least
``c`` on every node and equal to it on the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .balayage import BalayageResult, SolverError, probe_points, sweep
from .equilibrium import EquilibriumResult
from .geometry import DiscreteSet
from .kernel import KernelSpec, assemble_matrix, potential
from .measure import DiscreteMeasure, check_charges_off_set, field_on_panels, source_scaled
from .qp import DEFAULT_MAX_ITER, DEFAULT_TOL, QPSolution, solve_simplex
from .report import Report

SCALAR_TOL = 5e-2


@dataclass(eq=False)
class GaussResult:
    lam: DiscreteMeasure
    c_weighted: float
    w_value: float
    weighted_potential_residual: float
    lower_bound_residual: float
    swept_mass: float
    solvable: bool
    qp: QPSolution
    b: np.ndarray
    spec: KernelSpec
    balayage: BalayageResult | None = None

    def to_dict(self) -> dict:
        return {
            "c_weighted": self.c_weighted, "w_value": self.w_value,
            "weighted_potential_residual": self.weighted_potential_residual,
            "lower_bound_residual": self.lower_bound_residual, "swept_mass": self.swept_mass,
            "lambda_mass": self.lam.total(), "solvable": self.solvable,
            "qp": {"objective": self.qp.objective, "kkt_stationarity": self.qp.kkt_stationarity,
                   "kkt_complementarity": self.qp.kkt_complementarity, "iterations": self.qp.iterations,
                   "converged": self.qp.converged},
            "companion_sweep": None if self.balayage is None else {
                "set_key": self.balayage.swept.set.key, "swept_mass": self.balayage.swept_mass,
                "gauss_value": self.balayage.gauss_value},
            "panels": len(self.lam.set), "set_key": self.lam.set.key,
        }


def solve_gauss(omega, target: DiscreteSet, spec: KernelSpec, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER, require_convergence: bool = True,
                companion: bool = True) -> GaussResult:
    """Minimiser of the weighted energy over probability measures on ``target``.

    ``companion=True`` also sweeps ``omega`` onto ``target`` to record the swept mass.
    """
    check_charges_off_set(omega, target)
    K = assemble_matrix(spec, target).entries
    b = field_on_panels(spec, omega, target)
    sol = solve_simplex(K, b, tol=tol, max_iter=max_iter)
    if require_convergence and not sol.converged:
        raise SolverError(f"Gauss QP did not converge in {sol.iterations} iterations")
    w = sol.w
    g = K @ w - b
    c = float(w @ g)
    supp = w > 0
    flat = float(np.max(np.abs(g[supp] - c)))
    lower = float(max(0.0, np.max(c - g)))
    bal = sweep(omega, target, spec, tol, max_iter) if companion else None
    return GaussResult(lam=DiscreteMeasure(target, w), c_weighted=c, w_value=sol.objective,
                       weighted_potential_residual=flat, lower_bound_residual=lower,
                       swept_mass=bal.swept_mass if bal is not None else math.nan,
                       solvable=True, qp=sol, b=b, spec=spec, balayage=bal)


def representation_check(g: GaussResult, b: BalayageResult, e: EquilibriumResult,
                         tol: float = DEFAULT_TOL, threshold: float = SCALAR_TOL) -> Report:
    """Compare ``lambda`` with ``omega^A + c * gamma_A`` and ``c`` with ``(1 - omega^A(X)) / cap``.

    Only applicable when the swept mass is at most one; otherwise the report
    is marked not applicable and carries no checks.
    """
    rep = Report("representation of the Gauss minimiser")
    S = g.lam.set
    if b.swept.set.key != S.key or e.gamma.set.key != S.key:
        raise ValueError("results must refer to the same panel set")
    rep.data.update(swept_mass=b.swept_mass, capacity=e.capacity, c_weighted=g.c_weighted)
    if b.swept_mass > 1 + tol:
        rep.applicable = False
        rep.data["reason"] = "swept mass exceeds 1"
        return rep
    K = assemble_matrix(g.spec, S).entries
    pred = b.swept.masses + g.c_weighted * e.gamma.masses
    d = g.lam.masses - pred
    dist = math.sqrt(max(float(d @ (K @ d)), 0.0))
    lam_norm = math.sqrt(max(float(g.lam.masses @ (K @ g.lam.masses)), 0.0))
    rep.add("measure_identity", dist / lam_norm, threshold, note="|lambda - (sweep + c gamma)| / |lambda|")
    c_pred = (1.0 - b.swept_mass) / e.capacity
    denom = max(abs(c_pred), abs(g.c_weighted))
    scalar = abs(g.c_weighted - c_pred) / denom if denom > 0 else 0.0
    rep.add("constant_identity", scalar, threshold, note=f"c={g.c_weighted:.6g} vs (1 - sweep mass)/cap={c_pred:.6g}")
    rep.data.update(c_predicted=c_pred, distance=dist)
    return rep


def _lambda_members(g: GaussResult, K: np.ndarray, rng: np.random.Generator, count: int,
                    gamma: DiscreteMeasure | None):
    """Sampled members of the class {mu >= 0 : K mu - b >= c on every node}.

    Half are ``lambda`` plus positive masses; the rest are random positive
    measures scaled up just enough to satisfy the node inequalities, so they
    need not dominate ``lambda`` panelwise.
    """
    lam = g.lam.masses
    b, c = g.b, g.c_weighted
    n = len(lam)
    members = [("lambda", lam.copy())]
    if gamma is not None:
        members.append(("lambda+eps*gamma", lam + 0.05 * gamma.masses))
    k = 0
    while len(members) < count:
        k += 1
        if k % 2:
            mask = rng.random(n) < 0.3
            if not mask.any():
                mask[rng.integers(n)] = True
            extra = np.where(mask, rng.random(n), 0.0)
            members.append((f"lambda+bump{k}", lam + rng.uniform(0.01, 0.5) * extra / extra.sum()))
        else:
            nu = rng.random(n) * rng.random(n) + 1e-3
            Kn = K @ nu
            need = np.max((c + b) / Kn)
            if need <= 0:
                need = 1e-3
            members.append((f"scaled_random{k}", need * (1 + 1e-9) * nu))
    return members


def lambda_class_extremality(g: GaussResult, spec: KernelSpec, target: DiscreteSet, rng_seed: int = 0,
                             tol: float = DEFAULT_TOL, members: int = 10,
                             gamma: DiscreteMeasure | None = None, omega=None) -> Report:
    """``lambda`` has the least potential, energy norm and total mass among sampled class members.

    Uniqueness of the mass minimiser is not asserted.
    """
    rep = Report("extremality of the Gauss minimiser in its class")
    rep.data["rng_seed"] = int(rng_seed)
    if not (g.swept_mass <= 1 + tol or math.isnan(g.swept_mass)):
        rep.applicable = False
        rep.data["reason"] = "swept mass exceeds 1"
        return rep
    rng = np.random.default_rng(rng_seed)
    K = assemble_matrix(spec, target).entries
    scale = max(1.0, float(np.max(np.abs(g.b))))
    slack = 10 * tol * scale
    probes = np.vstack([probe_points(target, omega), target.nodes])
    u_lam = potential(spec, g.lam, probes)
    lam = g.lam.masses
    lam_norm = math.sqrt(float(lam @ (K @ lam)))
    pot_gap = norm_gap = mass_gap = -math.inf
    rows = []
    verified = 0
    for name, mu in _lambda_members(g, K, rng, members, gamma):
        ok = bool(np.all(K @ mu - g.b >= g.c_weighted - slack))
        if not ok:
            rep.add(f"membership_{name}", 1.0, 0.0)
            continue
        verified += 1
        u_mu = potential(spec, DiscreteMeasure(target, mu), probes)
        pg = float(np.max((u_lam - u_mu) / np.maximum(np.abs(u_mu), 1e-300)))
        ng = lam_norm - math.sqrt(float(mu @ (K @ mu)))
        mg = float(lam.sum() - mu.sum())
        pot_gap, norm_gap, mass_gap = max(pot_gap, pg), max(norm_gap, ng), max(mass_gap, mg)
        rows.append({"member": name, "mass": float(mu.sum()), "potential_gap": pg, "norm_gap": ng})
    rep.add("verified_members", float(members - verified), 0.0, note=f"{verified} of {members} satisfy the node inequalities")
    rep.add("minimum_potential", max(pot_gap, 0.0), 1e-6 + slack, note="max relative (U^lambda - U^mu)_+ at probes and nodes")
    rep.add("minimum_norm", max(norm_gap, 0.0), slack)
    rep.add("minimum_mass", max(mass_gap, 0.0), slack)
    rep.data["members"] = rows
    return rep


def outer_mass_fraction(mu: DiscreteMeasure, shell_radius: float, center=None) -> float:
    c = np.zeros(mu.set.dim) if center is None else np.asarray(center, float)
    r = np.linalg.norm(mu.set.nodes - c, axis=1)
    tot = mu.total()
    return float(mu.masses[r > shell_radius].sum() / tot) if tot > 0 else 0.0


def support_compactness_probe(omega, exhaustion: list[DiscreteSet], spec: KernelSpec, tol: float = DEFAULT_TOL,
                              shell_radius: float = 1.0, center=None) -> Report:
    """Fraction of the Gauss minimiser's mass beyond ``shell_radius`` along an increasing exhaustion.

    When the swept mass exceeds one and the source potential decays along the
    set, the minimisers settle on a compact piece and the fraction beyond a
    shell enclosing that piece falls to zero.  ``center`` defaults to the origin.
    """
    from .convergence import check_nested

    check_nested(exhaustion, increasing=True)
    rep = Report("support of the Gauss minimiser along an exhaustion")
    fracs, swept, cs = [], [], []
    for K in exhaustion:
        g = solve_gauss(omega, K, spec, tol)
        fracs.append(outer_mass_fraction(g.lam, shell_radius, center))
        swept.append(g.swept_mass)
        cs.append(g.c_weighted)
    steps = np.diff(fracs)
    rep.data.update(outer_fraction=fracs, swept_mass=swept, constants_c=cs, shell_radius=shell_radius,
                    stages=len(exhaustion))
    rep.data["strictly_decreasing"] = bool(len(steps) > 0 and np.all(steps < 0))
    rep.data["max_increment"] = float(np.max(steps)) if len(steps) else 0.0
    if len(steps):
        rep.add("outer_fraction_non_increasing", max(0.0, float(np.max(steps))), tol,
                note="largest stage-to-stage increase of the mass fraction beyond the shell")
        rep.add("outer_fraction_drops", fracs[-1] - fracs[0], 0.0, passed=fracs[-1] < fracs[0] - tol,
                note="last stage keeps less mass beyond the shell than the first")
    return rep


def trichotomy(omega, target: DiscreteSet, spec: KernelSpec, scales, tol: float = DEFAULT_TOL,
               zero_index: int | None = None, threshold: float = SCALAR_TOL) -> Report:
    """Sign of the Gauss constant against ``1 - swept mass`` for scaled copies of ``omega``.

    ``zero_index`` marks the run whose swept mass is meant to be one; by
    default it is the run whose computed swept mass is nearest to one.  Its
    constant must be small next to the largest positive constant.
    """
    rep = Report("sign of the Gauss constant")
    runs = []
    for k, t in enumerate(scales):
        g = solve_gauss(source_scaled(omega, float(t)), target, spec, tol)
        runs.append((float(t), g.swept_mass, g.c_weighted))
        want, got = np.sign(1.0 - g.swept_mass), np.sign(g.c_weighted)
        rep.add(f"sign_scale{k}", float(want != got), 0.0,
                note=f"scale {t}: swept mass {g.swept_mass:.6g}, c {g.c_weighted:.6g}")
    if zero_index is None:
        zero_index = int(np.argmin([abs(m - 1.0) for _, m, _ in runs]))
    positive = [c for _, m, c in runs if c > 0]
    if positive:
        ratio = abs(runs[zero_index][2]) / max(positive)
        rep.add("zero_case", ratio, threshold, note="|c| of the unit-mass run over the largest positive c")
    else:
        rep.add("zero_case", math.inf, threshold, passed=False, note="no run with a positive constant")
    rep.data.update(scales=[r[0] for r in runs], swept_masses=[r[1] for r in runs],
                    constants_c=[r[2] for r in runs], zero_index=zero_index)
    return rep
