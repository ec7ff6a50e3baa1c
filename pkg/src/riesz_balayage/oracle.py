"""Reference values: classical closed forms and refinement extrapolation.

The brute-force QP oracle lives in :mod:`riesz_balayage.qp`.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

METHODS = ("closed_form", "brute_force", "refinement_extrapolation")


@dataclass(frozen=True)
class ReferenceValue:
    name: str
    value: float
    method: str
    uncertainty: float

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not self.uncertainty > 0:
            raise ValueError("uncertainty must be positive")

    def contains(self, x: float, factor: float = 1.0) -> bool:
        return abs(x - self.value) <= factor * self.uncertainty


def newtonian_ball_sweep_mass(r: float, z_dist: float, n: int = 3) -> ReferenceValue:
    """Mass of the Newtonian balayage of a unit charge at distance ``z_dist`` onto the sphere of radius ``r``.

    The swept potential equals the charge's potential on the ball and is
    harmonic outside, so far away it behaves like ``m |x|^(2-n)``; comparing
    with the Kelvin image gives ``m = (r / z_dist)^(n-2)``.
    """
    if n < 3:
        raise ValueError("the Newtonian kernel needs n >= 3")
    if not (r > 0 and z_dist > r):
        raise ValueError("need 0 < r < z_dist (charge outside the ball)")
    v = (r / z_dist) ** (n - 2)
    return ReferenceValue(f"sweep_mass r={r} z={z_dist} n={n}", v, "closed_form", 1e-15 * max(1.0, v))


def newtonian_sphere_capacity(r: float, n: int = 3) -> ReferenceValue:
    """Capacity ``r^(n-2)`` of a sphere for the kernel ``|x-y|^(2-n)`` (no normalising constants)."""
    if n < 3:
        raise ValueError("the Newtonian kernel needs n >= 3")
    v = float(r) ** (n - 2)
    return ReferenceValue(f"capacity r={r} n={n}", v, "closed_form", 1e-15 * max(1.0, v))


def newtonian_swept_potential_at_source(r: float, z_dist: float) -> float:
    """``U^{sweep}(z)`` in R^3 for a unit charge at distance ``z_dist`` swept onto the sphere of radius ``r``.

    The swept potential outside the ball is that of the Kelvin image charge
    ``r/z`` at ``r^2/z``; at the source this equals the swept measure's energy.
    """
    return (r / z_dist) / (z_dist - r * r / z_dist)


def refinement_extrapolate(values: Sequence[tuple[float, float]], name: str = "extrapolated") -> ReferenceValue:
    """First-order Richardson extrapolation from ``(h, value)`` pairs, ``h`` the mesh size.

    Uses the two finest entries; the uncertainty is the last difference.  A
    non-monotone sequence yields the finest value with an uncertainty equal
    to twice the spread of all values.
    """
    pts = sorted(((float(h), float(v)) for h, v in values), key=lambda t: -t[0])
    if len(pts) < 3:
        raise ValueError("refinement extrapolation needs at least 3 resolutions")
    hs = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if np.any(hs <= 0) or len(np.unique(hs)) != len(hs):
        raise ValueError("mesh sizes must be positive and distinct")
    floor = 1e-12 * max(1.0, float(np.max(np.abs(vs))))
    spread = float(vs.max() - vs.min())
    if spread <= floor:
        return ReferenceValue(name, float(vs[-1]), "refinement_extrapolation", max(spread, floor))
    diffs = np.diff(vs)
    monotone = np.all(diffs > 0) or np.all(diffs < 0)
    if not monotone:
        return ReferenceValue(name, float(vs[-1]), "refinement_extrapolation", max(2 * spread, floor))
    (h1, v1), (h2, v2) = pts[-2], pts[-1]
    value = (h1 * v2 - h2 * v1) / (h1 - h2)
    return ReferenceValue(name, float(value), "refinement_extrapolation", max(abs(v2 - v1), floor))


def surface_mesh_size(panels: int, area: float = 4 * math.pi) -> float:
    """Typical panel diameter of a quasi-uniform surface mesh."""
    return math.sqrt(area / panels)


def reference_table_csv(refs: Sequence[ReferenceValue]) -> str:
    buf = io.StringIO()
    buf.write("name,value,method,uncertainty\n")
    for r in refs:
        buf.write(f"{r.name},{r.value!r},{r.method},{r.uncertainty!r}\n")
    return buf.getvalue()
