"""Equilibrium measure and capacity of a panel set.

The equilibrium measure solves the cone QP with unit linear term; by
complementarity its total mass equals its energy, which is the capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .balayage import SolverError, probe_points, sweep
from .geometry import DiscreteSet
from .kernel import KernelSpec, assemble_matrix, potential
from .measure import DiscreteMeasure, check_charges_off_set, field_on_panels, source_mass
from .qp import DEFAULT_MAX_ITER, DEFAULT_TOL, QPSolution, solve_cone
from .report import Report

FROSTMAN_TOL = 1e-3


@dataclass(eq=False)
class EquilibriumResult:
    gamma: DiscreteMeasure
    capacity: float
    energy: float
    potential_residual: float
    frostman_excess: float
    qp: QPSolution

    def density(self) -> np.ndarray:
        """Mass per unit cell measure."""
        return self.gamma.masses / self.gamma.set.cell_measures

    def to_dict(self) -> dict:
        d = self.density()
        return {
            "capacity": self.capacity, "energy": self.energy,
            "potential_residual": self.potential_residual, "frostman_excess": self.frostman_excess,
            "density_ratio": float(d.max() / d.min()) if d.min() > 0 else float("inf"),
            "qp": {"objective": self.qp.objective, "kkt_stationarity": self.qp.kkt_stationarity,
                   "kkt_complementarity": self.qp.kkt_complementarity, "iterations": self.qp.iterations,
                   "converged": self.qp.converged},
            "panels": len(self.gamma.set), "set_key": self.gamma.set.key,
        }


def equilibrium_measure(target: DiscreteSet, spec: KernelSpec, tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER, require_convergence: bool = True) -> EquilibriumResult:
    if len(target) == 0:
        raise ValueError("target is empty")
    if target.dim != spec.dim:
        raise ValueError(f"target dimension {target.dim} differs from kernel dimension {spec.dim}")
    K = assemble_matrix(spec, target).entries
    sol = solve_cone(K, np.ones(len(target)), tol=tol, max_iter=max_iter)
    if require_convergence and not sol.converged:
        raise SolverError(f"equilibrium QP did not converge in {sol.iterations} iterations")
    w = sol.w
    gamma = DiscreteMeasure(target, w)
    Kw = K @ w
    supp = w > 0
    resid = float(np.max(np.abs(Kw[supp] - 1.0))) if supp.any() else 0.0
    probes = np.vstack([probe_points(target), target.nodes])
    excess = float(max(0.0, np.max(potential(spec, gamma, probes)) - 1.0))
    return EquilibriumResult(gamma=gamma, capacity=float(w.sum()), energy=float(w @ Kw),
                             potential_residual=resid, frostman_excess=excess, qp=sol)


def capacity(target: DiscreteSet, spec: KernelSpec, tol: float = DEFAULT_TOL) -> float:
    return equilibrium_measure(target, spec, tol).capacity


def equilibrium_mass_identity(omega, target: DiscreteSet, spec: KernelSpec, tol: float = DEFAULT_TOL) -> Report:
    """Swept mass computed by sweeping versus the integral of ``U^omega`` against the equilibrium measure."""
    if source_mass(omega) <= 0:
        raise ValueError("the source must be a nonzero measure")
    check_charges_off_set(omega, target)
    rep = Report("equilibrium mass identity")
    left = sweep(omega, target, spec, tol).swept_mass
    eq = equilibrium_measure(target, spec, tol)
    right = float(eq.gamma.masses @ field_on_panels(spec, omega, target))
    rep.add("relative_difference", abs(left - right) / max(abs(left), abs(right)), 2e-2)
    rep.data.update(swept_mass=left, integral_against_equilibrium=right, capacity=eq.capacity)
    return rep
