"""Quadratic programs ``min w^T K w - 2 b^T w`` over the nonnegative cone or the simplex.

Both solvers run projected gradient with Barzilai-Borwein steps and an exact
line search along the projected direction (so the objective never
increases).  Every few iterations the current support is "polished": the
equality-constrained system on that support is solved directly and the
result is kept if it is feasible and not worse.  This gives KKT residuals
at round-off level once the support has been identified.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .kernel import KernelMatrix

CONSTRAINTS = ("nonneg_cone", "simplex")
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200_000


@dataclass(eq=False)
class ConeQPProblem:
    K: np.ndarray
    b: np.ndarray
    constraint: str = "nonneg_cone"

    def __post_init__(self):
        K = self.K.entries if isinstance(self.K, KernelMatrix) else self.K
        K = np.asarray(K, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("K must be square")
        if b.shape != (K.shape[0],):
            raise ValueError(f"b must have length {K.shape[0]}, got shape {b.shape}")
        if not np.all(np.isfinite(b)) or not np.all(np.isfinite(K)):
            raise ValueError("K and b must be finite")
        if self.constraint not in CONSTRAINTS:
            raise ValueError(f"constraint must be one of {CONSTRAINTS}")
        self.K, self.b = K, b

    @property
    def n(self) -> int:
        return len(self.b)

    def objective(self, w) -> float:
        return float(w @ (self.K @ w) - 2 * self.b @ w)


@dataclass(eq=False)
class QPSolution:
    w: np.ndarray
    objective: float
    kkt_stationarity: float
    kkt_complementarity: float
    multiplier_c: float | None
    iterations: int
    converged: bool
    history: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


def _scale(b) -> float:
    return max(1.0, float(np.max(np.abs(b))) if len(b) else 1.0)


def kkt_residuals(p: ConeQPProblem, w) -> tuple[float, float, float | None]:
    """Scaled (stationarity, complementarity, multiplier) at ``w``.

    Cone: stationarity = max (-g)_+, complementarity = max |w_i g_i|.
    Simplex: c = w^T g, stationarity = max (c - g)_+, complementarity = max w_i |g_i - c|.
    """
    g = p.K @ w - p.b
    sc = _scale(p.b)
    if p.constraint == "nonneg_cone":
        stat = max(0.0, float(np.max(-g)))
        comp = float(np.max(np.abs(w * g)))
        return stat / sc, comp / sc, None
    c = float(w @ g)
    stat = max(0.0, float(np.max(c - g)))
    comp = float(np.max(w * np.abs(g - c)))
    return stat / sc, comp / sc, c


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum w = 1}`` (sorting algorithm)."""
    v = np.asarray(v, float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _project(p: ConeQPProblem, v):
    if p.constraint == "nonneg_cone":
        return np.maximum(v, 0.0)
    return project_simplex(v)


def _solve_on_support(p: ConeQPProblem, S: np.ndarray):
    """Exact minimiser restricted to support ``S`` without sign constraints; None if singular."""
    w = np.zeros(p.n)
    if len(S) == 0:
        return w if p.constraint == "nonneg_cone" else None
    KS = p.K[np.ix_(S, S)]
    try:
        cf = linalg.cho_factor(KS, check_finite=False)
    except linalg.LinAlgError:
        return None
    if p.constraint == "nonneg_cone":
        w[S] = linalg.cho_solve(cf, p.b[S], check_finite=False)
        return w
    # K_S x - b_S = c 1, 1^T x = 1
    xb = linalg.cho_solve(cf, p.b[S], check_finite=False)
    x1 = linalg.cho_solve(cf, np.ones(len(S)), check_finite=False)
    s1 = x1.sum()
    if not s1 > 0:
        return None
    c = (1.0 - xb.sum()) / s1
    w[S] = xb + c * x1
    return w


def _solve(p: ConeQPProblem, tol: float, max_iter: int, x0=None, polish_every: int = 10,
           stall_window: int = 5000) -> QPSolution:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 0:
        raise ValueError("max_iter must be nonnegative")
    K, b = p.K, p.b
    n = p.n
    if x0 is None:
        w = np.zeros(n) if p.constraint == "nonneg_cone" else np.full(n, 1.0 / n)
    else:
        w = _project(p, np.asarray(x0, float))
    Kw = K @ w
    f = float(w @ Kw - 2 * b @ w)
    history = [f]
    # first step from the largest diagonal entry (a cheap curvature bound from below)
    t = 1.0 / max(float(np.max(np.diag(K))), 1e-300)
    last_support = None
    best_f, best_it = f, 0
    it = 0

    def done(w):
        st, cp, _ = kkt_residuals(p, w)
        return st <= tol and cp <= tol

    converged = done(w)
    while not converged and it < max_iter:
        it += 1
        g = Kw - b
        d = _project(p, w - t * g) - w
        Kd = K @ d
        gd = float(g @ d)
        dKd = float(d @ Kd)
        if dKd <= 0 or gd >= 0:
            # no descent along the projected direction: at a stationary point up to round-off
            history.append(f)
            converged = done(w)
            if not converged:
                t = 1.0 / max(float(np.max(np.diag(K))), 1e-300)
                if it - best_it > stall_window:
                    break
            continue
        theta = min(1.0, -gd / dKd)
        # a convex combination of feasible points; clamp round-off only
        w = np.maximum(w + theta * d, 0.0)
        if p.constraint == "simplex":
            w /= w.sum()
        Kw = K @ w
        f = float(w @ Kw - 2 * b @ w)
        # spectral step from the accepted displacement
        sy = theta * theta * dKd
        ss = theta * theta * float(d @ d)
        t = ss / sy if sy > 0 else t
        if it % polish_every == 0 or it == 1:
            S = np.flatnonzero(w > 0)
            key = S.tobytes()
            if key != last_support:
                last_support = key
                cand = _solve_on_support(p, S)
                if cand is not None and np.all(cand >= 0):
                    fc = p.objective(cand)
                    if fc <= f + 1e-15 * max(1.0, abs(f)):
                        w, f = cand, fc
                        Kw = K @ w
        history.append(f)
        if f < best_f - 1e-15 * max(1.0, abs(best_f)):
            best_f, best_it = f, it
        elif it - best_it > stall_window:
            break
        converged = done(w)
    st, cp, c = kkt_residuals(p, w)
    return QPSolution(w=w, objective=p.objective(w), kkt_stationarity=st, kkt_complementarity=cp,
                      multiplier_c=c, iterations=it, converged=bool(st <= tol and cp <= tol),
                      history=np.array(history))


def _as_problem(p, b, constraint) -> ConeQPProblem:
    if isinstance(p, ConeQPProblem):
        if p.constraint != constraint:
            raise ValueError(f"problem constraint is {p.constraint}, expected {constraint}")
        return p
    return ConeQPProblem(p, b, constraint)


def solve_cone(p, b=None, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, x0=None) -> QPSolution:
    """Minimise ``w^T K w - 2 b^T w`` over ``w >= 0``.

    Accepts a :class:`ConeQPProblem` or ``(K, b)``.  ``converged`` is False
    when the KKT residuals are not within ``tol`` (relative to
    ``max(1, |b|_inf)``) after ``max_iter`` iterations or on stagnation.
    """
    return _solve(_as_problem(p, b, "nonneg_cone"), tol, max_iter, x0)


def solve_simplex(p, b=None, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, x0=None) -> QPSolution:
    """Minimise ``w^T K w - 2 b^T w`` over probability vectors; ``multiplier_c = w^T (K w - b)``."""
    return _solve(_as_problem(p, b, "simplex"), tol, max_iter, x0)


def brute_force(p: ConeQPProblem, max_n: int = 12) -> QPSolution:
    """Global minimiser by enumerating all supports (exact linear solves); N <= 12."""
    if p.n > max_n:
        raise ValueError(f"brute force limited to N <= {max_n}, got {p.n}")
    best, best_f = None, np.inf
    for r in range(0, p.n + 1):
        for S in itertools.combinations(range(p.n), r):
            S = np.array(S, dtype=int)
            w = np.zeros(p.n)
            if len(S):
                KS = p.K[np.ix_(S, S)]
                if p.constraint == "nonneg_cone":
                    w[S] = np.linalg.solve(KS, p.b[S])
                else:
                    xb = np.linalg.solve(KS, p.b[S])
                    x1 = np.linalg.solve(KS, np.ones(len(S)))
                    w[S] = xb + (1.0 - xb.sum()) / x1.sum() * x1
            elif p.constraint == "simplex":
                continue
            if np.any(w < 0):
                continue
            f = p.objective(w)
            if f < best_f:
                best, best_f = w, f
    st, cp, c = kkt_residuals(p, best)
    return QPSolution(w=best, objective=best_f, kkt_stationarity=st, kkt_complementarity=cp,
                      multiplier_c=c, iterations=0, converged=True)
