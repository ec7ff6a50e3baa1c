"""Positive discrete measures on panel sets, and point-charge sources."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .geometry import DiscreteSet
from .kernel import KernelMatrix, KernelSpec, assemble_matrix, interaction, point_potentials


@dataclass(eq=False)
class DiscreteMeasure:
    """Masses ``masses[i] >= 0`` spread uniformly over the panels of ``set``."""

    set: DiscreteSet
    masses: np.ndarray

    def __post_init__(self):
        m = np.array(self.masses, dtype=float)
        if m.shape != (len(self.set),):
            raise ValueError(f"need {len(self.set)} masses, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("masses must be finite")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        m.setflags(write=False)
        self.masses = m

    @classmethod
    def zero(cls, S: DiscreteSet) -> "DiscreteMeasure":
        return cls(S, np.zeros(len(S)))

    @classmethod
    def uniform(cls, S: DiscreteSet, total: float = 1.0) -> "DiscreteMeasure":
        """Mass proportional to cell measure (normalised surface/volume measure)."""
        return cls(S, total * S.cell_measures / S.cell_measures.sum())

    def total(self) -> float:
        return float(self.masses.sum())

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.set, c * self.masses)

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        if other.set is not self.set and other.set.key != self.set.key:
            raise ValueError("measures live on different sets")
        return DiscreteMeasure(self.set, self.masses + other.masses)

    def energy(self, spec: KernelSpec) -> float:
        K = assemble_matrix(spec, self.set)
        return float(self.masses @ (K.entries @ self.masses))


@dataclass(frozen=True)
class PointCharge:
    location: tuple[float, ...]
    mass: float

    def __post_init__(self):
        loc = tuple(float(v) for v in self.location)
        object.__setattr__(self, "location", loc)
        if not all(math.isfinite(v) for v in loc):
            raise ValueError("charge location must be finite")
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ValueError("charge mass must be positive and finite")

    def to_dict(self) -> dict:
        return {"location": list(self.location), "mass": self.mass}


def as_charges(omega) -> list[PointCharge]:
    if isinstance(omega, PointCharge):
        return [omega]
    out = list(omega)
    if not all(isinstance(c, PointCharge) for c in out):
        raise TypeError("expected a DiscreteMeasure, a PointCharge or a list of PointCharges")
    return out


def source_mass(omega) -> float:
    if isinstance(omega, DiscreteMeasure):
        return omega.total()
    return float(sum(c.mass for c in as_charges(omega)))


def source_scaled(omega, c: float):
    if isinstance(omega, DiscreteMeasure):
        return omega.scaled(c)
    return [PointCharge(q.location, c * q.mass) for q in as_charges(omega)]


def check_charges_off_set(omega, S: DiscreteSet) -> None:
    """Reject charges sitting on a node: U^omega must be bounded and continuous on the set."""
    if isinstance(omega, DiscreteMeasure):
        return
    for q in as_charges(omega):
        if len(q.location) != S.dim:
            raise ValueError(f"charge at {q.location} has dimension {len(q.location)}, set has {S.dim}")
        d = np.linalg.norm(S.nodes - np.asarray(q.location), axis=1)
        if np.any(d == 0):
            raise ValueError(
                f"charge at {q.location} lies on a panel node: its potential is unbounded on the set, "
                "violating the continuity hypothesis on the source")


def field_on_panels(spec: KernelSpec, omega, S: DiscreteSet) -> np.ndarray:
    """``b_i`` = mean of ``U^omega`` over panel ``i``: the linear term of the Gauss functional."""
    if isinstance(omega, DiscreteMeasure):
        if omega.set is S or omega.set.key == S.key:
            return assemble_matrix(spec, S).entries @ omega.masses
        if S.is_subset_of(omega.set):
            # rows of the superset's matrix, so sweeping twice stays consistent
            return assemble_matrix(spec, omega.set).entries[S.index_in(omega.set)] @ omega.masses
        return interaction(spec, S, omega.set) @ omega.masses
    charges = as_charges(omega)
    if not charges:
        return np.zeros(len(S))
    locs = np.array([q.location for q in charges])
    m = np.array([q.mass for q in charges])
    return point_potentials(spec, S, locs).T @ m


def total_mass(mu: DiscreteMeasure) -> float:
    return mu.total()


def _masses_and_matrix(K, mu, nu):
    M = K.entries if isinstance(K, KernelMatrix) else np.asarray(K, float)
    w = mu.masses if isinstance(mu, DiscreteMeasure) else np.asarray(mu, float)
    v = nu.masses if isinstance(nu, DiscreteMeasure) else np.asarray(nu, float)
    if isinstance(K, KernelMatrix):
        for x in (mu, nu):
            if isinstance(x, DiscreteMeasure) and x.set.key != K.set_key:
                raise ValueError("measure is not on the kernel matrix's set")
    if w.shape != (M.shape[0],) or v.shape != (M.shape[0],):
        raise ValueError("measure sizes do not match the kernel matrix")
    return M, w, v


def norm_distance(K, mu, nu) -> float:
    """Energy-norm distance ``sqrt((w - v)^T K (w - v))``."""
    M, w, v = _masses_and_matrix(K, mu, nu)
    u = w - v
    return math.sqrt(max(float(u @ (M @ u)), 0.0))


def energy_norm(K, mu) -> float:
    M, w, _ = _masses_and_matrix(K, mu, mu)
    return math.sqrt(max(float(w @ (M @ w)), 0.0))


def restrict_measure(mu: DiscreteMeasure, indices: Iterable[int]) -> DiscreteMeasure:
    """Trace on the given panels: masses kept there, zero elsewhere."""
    idx = np.asarray(list(indices), dtype=int)
    if len(idx) and (idx.min() < 0 or idx.max() >= len(mu.set)):
        raise IndexError("panel index out of range")
    out = np.zeros(len(mu.set))
    out[idx] = mu.masses[idx]
    return DiscreteMeasure(mu.set, out)


def embed(mu: DiscreteMeasure, superset: DiscreteSet) -> DiscreteMeasure:
    """The same measure viewed on a set containing its panels (zero on new panels)."""
    pos = mu.set.index_in(superset)
    out = np.zeros(len(superset))
    out[pos] = mu.masses
    return DiscreteMeasure(superset, out)


def pull_back(mu: DiscreteMeasure, subset: DiscreteSet) -> DiscreteMeasure:
    """Restrict ``mu`` to the panels of ``subset`` (which must be panels of ``mu.set``)."""
    pos = subset.index_in(mu.set)
    return DiscreteMeasure(subset, mu.masses[pos])


# ---------------------------------------------------------------------------
# CSV


def measure_to_csv(mu: DiscreteMeasure) -> str:
    n = mu.set.dim
    buf = io.StringIO()
    buf.write(f"# set_spec_hash={mu.set.spec.digest()} panel_hash={mu.set.key}\n")
    buf.write(",".join([f"x{k}" for k in range(n)] + ["mass"]) + "\n")
    for p, m in zip(mu.set.nodes, mu.masses):
        buf.write(",".join(repr(float(v)) for v in p) + "," + repr(float(m)) + "\n")
    return buf.getvalue()


def measure_from_csv(text: str, S: DiscreteSet) -> DiscreteMeasure:
    """Read masses written by :func:`measure_to_csv`, matching rows to the nodes of ``S``."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    header = lines[0].split(",")
    if header[-1] != "mass" or len(header) != S.dim + 1:
        raise ValueError("measure CSV header must be node coordinates followed by 'mass'")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    lookup = {tuple(p): k for k, p in enumerate(S.nodes)}
    masses = np.zeros(len(S))
    for r in rows:
        key = tuple(r[:-1])
        if key not in lookup:
            raise ValueError(f"node {key} of the CSV is not a panel node of the set")
        masses[lookup[key]] = r[-1]
    return DiscreteMeasure(S, masses)


def charges_from_config(items: Sequence[dict]) -> list[PointCharge]:
    return [PointCharge(tuple(c["location"]), float(c.get("mass", 1.0))) for c in items]


def distance_between(spec: KernelSpec, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Energy distance of measures that may live on different panel sets.

    Nested sets share the larger set's matrix; otherwise the cross term
    comes from :func:`~riesz_balayage.kernel.interaction`.
    """
    A, B = mu.set, nu.set
    if A.key == B.key:
        return norm_distance(assemble_matrix(spec, A), mu.masses, nu.masses)
    if A.is_subset_of(B):
        return norm_distance(assemble_matrix(spec, B), embed(mu, B), nu)
    if B.is_subset_of(A):
        return norm_distance(assemble_matrix(spec, A), mu, embed(nu, A))
    cross = float(mu.masses @ (interaction(spec, A, B) @ nu.masses))
    sq = mu.energy(spec) + nu.energy(spec) - 2 * cross
    return math.sqrt(max(sq, 0.0))
