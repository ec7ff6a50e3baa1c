"""Riesz kernels |x - y|^(alpha - n) and their discrete energy matrices.

Matrix entries are normalised so that ``w @ K @ w`` is the energy of the
measure putting mass ``w_i`` uniformly on panel ``i``:

* diagonal: mean of the kernel over pairs of points of one panel
  (finite as long as ``n - alpha`` is below the panel's dimension);
* neighbouring panels: mean of the kernel over the two panels, computed
  with the sub-panel quadrature stored on the :class:`DiscreteSet`;
* distant panels: the kernel at the two nodes.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.spatial import cKDTree

from .geometry import DiscreteSet

DIAG_MODES = ("equivalent_disc", "analytic_segment", "monte_carlo")
TIE_SLACK = 1.0 + 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """Riesz kernel of order ``alpha`` in ``R^dim``.

    ``near_field`` is the neighbour radius, in units of panel circumradius,
    inside which entries are panel averages; 0 gives pure node evaluation
    off the diagonal.
    """

    alpha: float
    dim: int
    diag_mode: str = "equivalent_disc"
    mc_samples: int = 100_000
    mc_seed: int = 0
    near_field: float = 6.0
    max_principle_constant: float = 1.0

    def __post_init__(self):
        errs = self.problems()
        if errs:
            raise ValueError("invalid KernelSpec: " + "; ".join(errs))

    def problems(self) -> list[str]:
        errs = []
        a, n = self.alpha, self.dim
        if not isinstance(n, int) or n < 2:
            errs.append(f"dim must be an integer >= 2, got {n!r}")
        if not (isinstance(a, (int, float)) and math.isfinite(a) and 0 < a <= 2):
            errs.append(f"alpha={a!r} outside the admitted range: alpha in (0, 2] and alpha < dim")
        elif isinstance(n, int) and not a < n:
            errs.append(f"alpha={a!r} outside the admitted range: alpha in (0, 2] and alpha < dim={n}")
        if self.diag_mode not in DIAG_MODES:
            errs.append(f"diag_mode must be one of {DIAG_MODES}, got {self.diag_mode!r}")
        if self.diag_mode == "monte_carlo" and not (isinstance(self.mc_samples, int) and self.mc_samples > 0):
            errs.append("monte_carlo diag_mode needs mc_samples > 0")
        if not self.near_field >= 0:
            errs.append("near_field must be >= 0")
        if self.max_principle_constant != 1.0:
            errs.append("max_principle_constant is fixed to 1 for Riesz kernels")
        return errs

    @property
    def s(self) -> float:
        """Exponent of the singularity, ``dim - alpha``."""
        return self.dim - self.alpha

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown KernelSpec fields {sorted(unknown)}")
        d = dict(d)
        if "alpha" in d:
            d["alpha"] = float(d["alpha"])
        return cls(**d)


def evaluate(spec: KernelSpec, x, y) -> float:
    """Kernel value ``|x - y|^(alpha - n)``; ``inf`` on the diagonal."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != (spec.dim,) or y.shape != (spec.dim,):
        raise ValueError(f"points must have dimension {spec.dim}")
    r = float(np.linalg.norm(x - y))
    if r == 0.0:
        return math.inf
    return r ** (-spec.s)


def kernel_of_distance(spec: KernelSpec, r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.asarray(r, float) ** (-spec.s)


# ---------------------------------------------------------------------------
# self-energies


def ball_volume(d: int, a: float = 1.0) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * a**d


def segment_self_energy(h: float, s: float) -> float:
    """Mean of ``|u - v|^-s`` for ``u, v`` uniform on an interval of length ``h`` (``s < 1``)."""
    if not s < 1:
        raise ValueError("segment self-energy is infinite for s >= 1")
    return 2.0 * h ** (-s) / ((1 - s) * (2 - s))


@lru_cache(maxsize=64)
def _unit_ball_mean(d: int, s: float) -> float:
    # density of |X - Y| for X, Y uniform in the unit d-ball, integrated against r^-s
    def integrand(r):
        x = 1.0 - r * r / 4.0
        return r ** (d - 1 - s) * special.betainc((d + 1) / 2, 0.5, x)

    val, _ = integrate.quad(integrand, 0.0, 2.0, limit=200, epsabs=0, epsrel=1e-12)
    return d * val


def ball_self_energy(d: int, a: float, s: float) -> float:
    """Mean of ``|x - y|^-s`` over independent uniform points of a ``d``-ball of radius ``a``."""
    if not s < d:
        raise ValueError(f"self-energy of a {d}-dimensional panel is infinite for s={s} >= {d}")
    return _unit_ball_mean(int(d), float(s)) * a ** (-s)


def equivalent_radius(d: int, measure: float) -> float:
    return (measure / ball_volume(d)) ** (1.0 / d)


def monte_carlo_self_energy(d: int, measure: float, s: float, samples: int, seed: int = 0) -> float:
    """Sample pairs in the ``d``-ball of the panel's measure and average the kernel."""
    if samples <= 0:
        raise ValueError("monte_carlo needs a positive number of samples")
    rng = np.random.default_rng(seed)
    a = equivalent_radius(d, measure)

    def draw(k):
        g = rng.standard_normal((k, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * (a * rng.random(k) ** (1.0 / d))[:, None]

    r = np.linalg.norm(draw(samples) - draw(samples), axis=1)
    return float(np.mean(r ** (-s)))


def self_energies(spec: KernelSpec, S: DiscreteSet) -> np.ndarray:
    """Diagonal entries: self-energy of a unit mass spread uniformly over each panel."""
    s = spec.s
    bad = np.flatnonzero(S.cell_dims <= s)
    if len(bad):
        raise ValueError(
            f"panels of dimension {int(S.cell_dims[bad[0]])} have infinite self-energy for "
            f"alpha={spec.alpha} in R^{spec.dim} (zero capacity); need dim - alpha < panel dimension")
    out = np.empty(len(S))
    for i, (d, m) in enumerate(zip(S.cell_dims, S.cell_measures)):
        d = int(d)
        if spec.diag_mode == "monte_carlo":
            out[i] = monte_carlo_self_energy(d, m, s, spec.mc_samples, spec.mc_seed + i)
        elif spec.diag_mode == "analytic_segment" and d == 1:
            out[i] = segment_self_energy(m, s)
        else:
            out[i] = ball_self_energy(d, equivalent_radius(d, m), s)
    return out


DIAG_NOTES = {
    "equivalent_disc": "uniform self-energy of the ball/disc/interval of equal measure in the panel's dimension",
    "analytic_segment": "closed-form self-energy of a uniform interval for 1-D panels, equal-measure ball otherwise",
    "monte_carlo": "Monte Carlo mean of the kernel over sampled point pairs in the equal-measure ball",
}


# ---------------------------------------------------------------------------
# matrix assembly


@dataclass(eq=False)
class KernelMatrix:
    entries: np.ndarray
    set_key: str
    spec: KernelSpec
    diag_note: str

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, w):
        return self.entries @ w


def _pair_means(P1, W1, P2, W2, s, chunk=256):
    out = np.empty(len(P1))
    for c in range(0, len(P1), chunk):
        sl = slice(c, c + chunk)
        d = np.linalg.norm(P1[sl, :, None, :] - P2[sl, None, :, :], axis=3)
        with np.errstate(divide="ignore"):
            k = d ** (-s)
        # zero-weight padding may coincide; its weight kills the inf
        k[~np.isfinite(k)] = 0.0
        out[sl] = np.einsum("kp,kq,kpq->k", W1[sl], W2[sl], k)
    return out


def _near_pairs(spec: KernelSpec, A: DiscreteSet, B: DiscreteSet):
    """Index pairs (i in A, j in B) that get panel-averaged entries, plus an 'adjacent' flag."""
    if spec.near_field <= 0:
        return np.empty(0, int), np.empty(0, int), np.empty(0, bool)
    rmax = max(A.cell_radii.max(), B.cell_radii.max())
    tA, tB = cKDTree(A.nodes), cKDTree(B.nodes)
    sdm = tA.sparse_distance_matrix(tB, spec.near_field * rmax * TIE_SLACK, output_type="ndarray")
    i, j, d = sdm["i"].astype(int), sdm["j"].astype(int), sdm["v"]
    order = np.lexsort((j, i))
    i, j, d = i[order], j[order], d[order]
    scale = np.maximum(A.cell_radii[i], B.cell_radii[j])
    # the slack keeps pairs at exactly the cutoff on one side, whatever the rounding
    keep = (d < spec.near_field * scale * TIE_SLACK) & (d > 0)
    i, j, d, scale = i[keep], j[keep], d[keep], scale[keep]
    adjacent = d < 0.4 * spec.near_field * scale * TIE_SLACK
    return i, j, adjacent


def interaction(spec: KernelSpec, A: DiscreteSet, B: DiscreteSet) -> np.ndarray:
    """Mutual-energy matrix between unit uniform masses on the panels of ``A`` (rows) and ``B``.

    Coincident nodes are treated as the same panel and get its self-energy.
    """
    if A.dim != spec.dim or B.dim != spec.dim:
        raise ValueError(f"set dimension differs from kernel dimension {spec.dim}")
    D = np.linalg.norm(A.nodes[:, None, :] - B.nodes[None, :, :], axis=2)
    same = D == 0
    with np.errstate(divide="ignore"):
        M = D ** (-spec.s)
    i, j, adjacent = _near_pairs(spec, A, B)
    if len(i):
        for sel, (pa, wa, pb, wb) in (
            (adjacent, (A.quad_fine, A.wfine, B.quad_fine, B.wfine)),
            (~adjacent, (A.quad_coarse, A.wcoarse, B.quad_coarse, B.wcoarse)),
        ):
            ii, jj = i[sel], j[sel]
            if len(ii):
                M[ii, jj] = _pair_means(pa[ii], wa[ii], pb[jj], wb[jj], spec.s)
    if same.any():
        ia, jb = np.nonzero(same)
        M[ia, jb] = self_energies(spec, A.subset(ia))
    return M


_CACHE: "OrderedDict[tuple, KernelMatrix]" = OrderedDict()
_CACHE_SIZE = 8


def assemble_matrix(spec: KernelSpec, S: DiscreteSet) -> KernelMatrix:
    """Symmetric energy matrix of ``S`` (cached on the set's content hash)."""
    if S.dim != spec.dim:
        raise ValueError(f"set dimension {S.dim} differs from kernel dimension {spec.dim}")
    key = (spec, S.key)
    hit = _CACHE.get(key)
    if hit is not None:
        _CACHE.move_to_end(key)
        return hit
    M = interaction(spec, S, S)
    M = 0.5 * (M + M.T)
    K = KernelMatrix(entries=M, set_key=S.key, spec=spec, diag_note=DIAG_NOTES[spec.diag_mode])
    _CACHE[key] = K
    if len(_CACHE) > _CACHE_SIZE:
        _CACHE.popitem(last=False)
    return K


# ---------------------------------------------------------------------------
# potentials


def point_potentials(spec: KernelSpec, S: DiscreteSet, probes) -> np.ndarray:
    """Matrix ``P[k, j]`` = potential at ``probes[k]`` of a unit uniform mass on panel ``j``.

    Probes within the near-field radius of a panel integrate over its fine
    quadrature; probes equal to a node of ``S`` take the matrix row instead.
    """
    probes = np.atleast_2d(np.asarray(probes, float))
    if probes.shape[1] != spec.dim:
        raise ValueError(f"probes must have dimension {spec.dim}")
    D = np.linalg.norm(probes[:, None, :] - S.nodes[None, :, :], axis=2)
    with np.errstate(divide="ignore"):
        P = D ** (-spec.s)
    if spec.near_field > 0:
        kk, jj = np.nonzero(D < spec.near_field * S.cell_radii[None, :] * TIE_SLACK)
        if len(kk):
            d = np.linalg.norm(S.quad_fine[jj] - probes[kk][:, None, :], axis=2)
            with np.errstate(divide="ignore"):
                k = d ** (-spec.s)
            k[~np.isfinite(k)] = 0.0
            P[kk, jj] = np.einsum("kq,kq->k", S.wfine[jj], k)
    on = np.flatnonzero((D == 0).any(axis=1))
    if len(on):
        K = assemble_matrix(spec, S).entries
        P[on] = K[np.argmax(D[on] == 0, axis=1)]
    return P


def potential(spec: KernelSpec, mu, probes) -> np.ndarray:
    """``U^mu`` at ``probes`` for a :class:`~riesz_balayage.measure.DiscreteMeasure` or charge list."""
    from .measure import DiscreteMeasure, as_charges

    probes = np.atleast_2d(np.asarray(probes, float))
    if isinstance(mu, DiscreteMeasure):
        if mu.set.dim != spec.dim:
            raise ValueError("measure dimension differs from kernel dimension")
        return point_potentials(spec, mu.set, probes) @ mu.masses
    charges = as_charges(mu)
    out = np.zeros(len(probes))
    for c in charges:
        if len(c.location) != spec.dim:
            raise ValueError("charge dimension differs from kernel dimension")
        r = np.linalg.norm(probes - np.asarray(c.location), axis=1)
        with np.errstate(divide="ignore"):
            out += c.mass * r ** (-spec.s)
    return out


def mutual_energy(K, w, v) -> float:
    """``w^T K v``."""
    M = K.entries if isinstance(K, KernelMatrix) else np.asarray(K, float)
    w, v = np.asarray(w, float), np.asarray(v, float)
    if w.shape != (M.shape[0],) or v.shape != (M.shape[0],):
        raise ValueError(f"mass vectors must have length {M.shape[0]}")
    return float(w @ (M @ v))
