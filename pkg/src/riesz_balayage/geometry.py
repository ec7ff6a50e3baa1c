"""Panel discretizations of compact subsets of R^n.

A :class:`DiscreteSet` stores one node per panel together with the panel's
measure (length, area or volume), its circumradius, its intrinsic dimension
and two levels of sub-panel quadrature.  The quadrature is what lets the
kernel module integrate the kernel over neighbouring panels instead of
sampling it at the nodes only.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import SphericalVoronoi

SHAPES = ("sphere", "ball", "segment", "annulus", "box", "union", "points_file", "ray", "halfspace")
BOUNDED_SHAPES = ("sphere", "ball", "segment", "annulus", "box", "union", "points_file")

# Relative tolerance used by the membership predicates.
MEMBER_TOL = 1e-9


def _vec(x) -> tuple[float, ...] | None:
    if x is None:
        return None
    return tuple(float(v) for v in x)


@dataclass(frozen=True)
class SetSpec:
    """Geometric description of a set; see the ``sphere``/``ball``/... constructors."""

    shape: str
    dim: int
    center: tuple[float, ...] | None = None
    radius: float | None = None
    a: tuple[float, ...] | None = None
    b: tuple[float, ...] | None = None
    r_in: float | None = None
    r_out: float | None = None
    lo: tuple[float, ...] | None = None
    hi: tuple[float, ...] | None = None
    parts: tuple["SetSpec", ...] = ()
    path: str | None = None
    cell_dim: int | None = None
    start: tuple[float, ...] | None = None
    direction: tuple[float, ...] | None = None
    normal: tuple[float, ...] | None = None
    offset: float | None = None

    def __post_init__(self):
        errors = self.problems()
        if errors:
            raise ValueError("invalid SetSpec: " + "; ".join(errors))

    # -- constructors -------------------------------------------------
    @classmethod
    def sphere(cls, center, radius) -> "SetSpec":
        c = _vec(center)
        return cls("sphere", len(c), center=c, radius=float(radius))

    @classmethod
    def ball(cls, center, radius) -> "SetSpec":
        c = _vec(center)
        return cls("ball", len(c), center=c, radius=float(radius))

    @classmethod
    def segment(cls, a, b) -> "SetSpec":
        a, b = _vec(a), _vec(b)
        return cls("segment", len(a), a=a, b=b)

    @classmethod
    def annulus(cls, center, r_in, r_out) -> "SetSpec":
        c = _vec(center)
        return cls("annulus", len(c), center=c, r_in=float(r_in), r_out=float(r_out))

    @classmethod
    def box(cls, lo, hi) -> "SetSpec":
        lo, hi = _vec(lo), _vec(hi)
        return cls("box", len(lo), lo=lo, hi=hi)

    @classmethod
    def union(cls, parts: Sequence["SetSpec"]) -> "SetSpec":
        parts = tuple(parts)
        dim = parts[0].dim if parts else 0
        return cls("union", dim, parts=parts)

    @classmethod
    def points_file(cls, path, dim: int, cell_dim: int | None = None) -> "SetSpec":
        return cls("points_file", int(dim), path=str(path), cell_dim=int(cell_dim if cell_dim is not None else dim))

    @classmethod
    def ray(cls, start, direction) -> "SetSpec":
        s = _vec(start)
        return cls("ray", len(s), start=s, direction=_vec(direction))

    @classmethod
    def halfspace(cls, normal, offset: float = 0.0) -> "SetSpec":
        n = _vec(normal)
        return cls("halfspace", len(n), normal=n, offset=float(offset))

    # -- validation ---------------------------------------------------
    def problems(self) -> list[str]:
        errs: list[str] = []
        if self.shape not in SHAPES:
            return [f"unknown shape {self.shape!r}"]
        if not isinstance(self.dim, int) or self.dim < 2:
            errs.append(f"dim must be an integer >= 2, got {self.dim!r}")

        def need(name, length=None):
            v = getattr(self, name)
            if v is None:
                errs.append(f"{self.shape}: missing {name}")
                return None
            if length is not None and len(v) != length:
                errs.append(f"{self.shape}: {name} has {len(v)} coordinates, expected {length}")
            if isinstance(v, tuple) and not all(math.isfinite(t) for t in v):
                errs.append(f"{self.shape}: {name} not finite")
            return v

        n = self.dim
        if self.shape in ("sphere", "ball"):
            need("center", n)
            r = need("radius")
            if r is not None and not r > 0:
                errs.append(f"{self.shape}: radius must be > 0")
        elif self.shape == "segment":
            a, b = need("a", n), need("b", n)
            if a is not None and b is not None and a == b:
                errs.append("segment: endpoints coincide")
        elif self.shape == "annulus":
            need("center", n)
            ri, ro = need("r_in"), need("r_out")
            if ri is not None and ro is not None and not (0 < ri < ro):
                errs.append("annulus: need 0 < r_in < r_out")
        elif self.shape == "box":
            lo, hi = need("lo", n), need("hi", n)
            if lo is not None and hi is not None and not all(l < h for l, h in zip(lo, hi)):
                errs.append("box: need lo < hi componentwise")
        elif self.shape == "union":
            if not self.parts:
                errs.append("union: no parts")
            for p in self.parts:
                if p.dim != n:
                    errs.append(f"union: part dim {p.dim} differs from {n}")
                if p.shape not in BOUNDED_SHAPES:
                    errs.append(f"union: part shape {p.shape!r} is not bounded")
        elif self.shape == "points_file":
            need("path")
            if self.cell_dim is not None and not 1 <= self.cell_dim <= n:
                errs.append("points_file: cell_dim must lie in [1, dim]")
        elif self.shape == "ray":
            need("start", n)
            d = need("direction", n)
            if d is not None and not any(d):
                errs.append("ray: zero direction")
        elif self.shape == "halfspace":
            nv = need("normal", n)
            need("offset")
            if nv is not None and not any(nv):
                errs.append("halfspace: zero normal")
        return errs

    # -- serialization ------------------------------------------------
    def to_dict(self) -> dict:
        out: dict = {"shape": self.shape, "dim": self.dim}
        for key in ("center", "radius", "a", "b", "r_in", "r_out", "lo", "hi", "path",
                    "cell_dim", "start", "direction", "normal", "offset"):
            v = getattr(self, key)
            if v is not None:
                out[key] = list(v) if isinstance(v, tuple) else v
        if self.parts:
            out["parts"] = [p.to_dict() for p in self.parts]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SetSpec":
        d = dict(d)
        shape = d.pop("shape", None)
        parts = tuple(cls.from_dict(p) for p in d.pop("parts", ()))
        kwargs = {}
        for key, v in d.items():
            if key == "dim":
                continue
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown SetSpec field {key!r}")
            kwargs[key] = tuple(float(t) for t in v) if isinstance(v, (list, tuple)) else v
        if shape == "union":
            dim = parts[0].dim if parts else int(d.get("dim", 0))
        elif shape == "points_file":
            dim = int(d["dim"]) if "dim" in d else 0
        else:
            probe = next((kwargs[k] for k in ("center", "a", "lo", "start", "normal") if k in kwargs), None)
            dim = len(probe) if probe is not None else int(d.get("dim", 0))
        if "cell_dim" in kwargs and kwargs["cell_dim"] is not None:
            kwargs["cell_dim"] = int(kwargs["cell_dim"])
        return cls(shape, dim, parts=parts, **kwargs)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def bounded(self) -> bool:
        return self.shape in BOUNDED_SHAPES


@dataclass(eq=False)
class DiscreteSet:
    """Panels of a compact set.

    ``quad_fine``/``quad_coarse`` hold sub-panel quadrature points of shape
    ``(N, Q, n)`` with weights summing to one per panel (zero-padded).
    """

    nodes: np.ndarray
    cell_measures: np.ndarray
    cell_radii: np.ndarray
    cell_dims: np.ndarray
    spec: SetSpec
    resolution: int
    quad_fine: np.ndarray
    wfine: np.ndarray
    quad_coarse: np.ndarray
    wcoarse: np.ndarray
    _key: str | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("nodes", "cell_measures", "cell_radii", "quad_fine", "wfine", "quad_coarse", "wcoarse"):
            arr = getattr(self, name)
            arr = np.asarray(arr, dtype=float)
            arr.setflags(write=False)
            setattr(self, name, arr)
        self.cell_dims = np.asarray(self.cell_dims, dtype=int)
        self.cell_dims.setflags(write=False)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def key(self) -> str:
        """Content hash identifying this panel set."""
        if self._key is None:
            h = hashlib.sha256()
            for arr in (self.nodes, self.cell_measures, self.cell_radii):
                h.update(np.ascontiguousarray(arr).tobytes())
            h.update(np.ascontiguousarray(self.cell_dims).tobytes())
            self._key = h.hexdigest()[:16]
        return self._key

    def total_measure(self) -> float:
        return float(self.cell_measures.sum())

    def center(self) -> np.ndarray:
        lo, hi = self.nodes.min(axis=0), self.nodes.max(axis=0)
        return 0.5 * (lo + hi)

    def circumradius(self) -> float:
        c = self.center()
        return float(np.max(np.linalg.norm(self.nodes - c, axis=1) + self.cell_radii))

    def subset(self, idx, spec: SetSpec | None = None) -> "DiscreteSet":
        idx = np.asarray(idx, dtype=int)
        return DiscreteSet(
            nodes=self.nodes[idx], cell_measures=self.cell_measures[idx], cell_radii=self.cell_radii[idx],
            cell_dims=self.cell_dims[idx], spec=spec if spec is not None else self.spec,
            resolution=self.resolution, quad_fine=self.quad_fine[idx], wfine=self.wfine[idx],
            quad_coarse=self.quad_coarse[idx], wcoarse=self.wcoarse[idx],
        )

    def index_in(self, other: "DiscreteSet") -> np.ndarray:
        """Positions of this set's nodes inside ``other``; raises if some node is missing."""
        lookup = {tuple(p): i for i, p in enumerate(other.nodes)}
        try:
            return np.array([lookup[tuple(p)] for p in self.nodes], dtype=int)
        except KeyError:
            raise ValueError("node set is not contained in the other set") from None

    def is_subset_of(self, other: "DiscreteSet") -> bool:
        try:
            self.index_in(other)
        except ValueError:
            return False
        return True


# ---------------------------------------------------------------------------
# quadrature rules


def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def _triangle_rule(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapsed Gauss rule on the reference triangle; weights sum to 1/2."""
    u, wu = _gauss01(n)
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu)
    return U.ravel(), (V * (1 - U)).ravel(), (W * (1 - U)).ravel()


def _pad(rows: list[np.ndarray], wts: list[np.ndarray], nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q = max(len(w) for w in wts)
    n = nodes.shape[1]
    P = np.repeat(nodes[:, None, :], q, axis=1).copy()
    W = np.zeros((len(rows), q))
    for i, (r, w) in enumerate(zip(rows, wts)):
        P[i, : len(w)] = r
        W[i, : len(w)] = w / w.sum()
    return P.reshape(len(rows), q, n), W


# ---------------------------------------------------------------------------
# primitive discretizations (all return plain dicts of arrays)


def fibonacci_directions(m: int) -> np.ndarray:
    k = np.arange(m) + 0.5
    z = 1 - 2 * k / m
    phi = math.pi * (1 + math.sqrt(5)) * k
    r = np.sqrt(1 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _unit_sphere_cells(m: int, orders: tuple[int, int]):
    """Spherical Voronoi cells of the ``m``-point Fibonacci lattice.

    Returns generators, exact cell areas, vertex lists and the fine/coarse
    quadrature (points on the unit sphere, weights normalised per cell).
    """
    X = fibonacci_directions(m)
    sv = SphericalVoronoi(X, radius=1.0, center=np.zeros(3))
    sv.sort_vertices_of_regions()
    areas = sv.calculate_areas()
    verts = [sv.vertices[r] for r in sv.regions]
    quads = []
    for order in orders:
        ta, tb, tw = _triangle_rule(order)
        pts, wts = [], []
        for i, V in enumerate(verts):
            n = X[i]
            p, q = V, np.roll(V, -1, axis=0)
            cr = np.cross(p - n, q - n)
            flat = 0.5 * np.linalg.norm(cr, axis=1)
            # distance of each fan-triangle plane from the origin (central projection Jacobian)
            dist = np.abs(np.einsum("ij,ij->i", cr / np.linalg.norm(cr, axis=1)[:, None], p))
            Y = n + ta[None, :, None] * (p - n)[:, None, :] + tb[None, :, None] * (q - n)[:, None, :]
            r = np.linalg.norm(Y, axis=2)
            w = 2 * tw[None, :] * flat[:, None] * dist[:, None] / r**3
            pts.append((Y / r[..., None]).reshape(-1, 3))
            wts.append(w.ravel())
        quads.append((pts, wts))
    return X, areas, verts, quads


def _sphere3(center, radius, m):
    if m < 12:
        raise ValueError("sphere in R^3 needs resolution >= 12 panels")
    X, areas, verts, quads = _unit_sphere_cells(m, (4, 2))
    c = np.asarray(center)
    rad = np.array([np.max(np.linalg.norm(V - X[i], axis=1)) for i, V in enumerate(verts)])
    (pf, wf), (pc, wc) = quads
    Pf, Wf = _pad(pf, wf, X)
    Pc, Wc = _pad(pc, wc, X)
    return dict(nodes=c + radius * X, cell_measures=radius**2 * areas, cell_radii=radius * rad,
                cell_dims=np.full(m, 2), quad_fine=c + radius * Pf, wfine=Wf,
                quad_coarse=c + radius * Pc, wcoarse=Wc)


def _circle(center, radius, m):
    if m < 3:
        raise ValueError("circle needs resolution >= 3 arcs")
    c = np.asarray(center)
    dt = 2 * math.pi / m
    th = (np.arange(m) + 0.5) * dt
    nodes = c + radius * np.column_stack([np.cos(th), np.sin(th)])
    out = dict(nodes=nodes, cell_measures=np.full(m, radius * dt),
               cell_radii=np.full(m, 2 * radius * math.sin(dt / 4)), cell_dims=np.full(m, 1))
    for tag, order in (("fine", 8), ("coarse", 3)):
        u, w = _gauss01(order)
        t = th[:, None] + (u[None, :] - 0.5) * dt
        P = c + radius * np.stack([np.cos(t), np.sin(t)], axis=2)
        out["quad_" + tag] = P
        out["w" + tag] = np.repeat(w[None, :], m, axis=0)
    return out


def _segment(a, b, m):
    a, b = np.asarray(a, float), np.asarray(b, float)
    L = float(np.linalg.norm(b - a))
    t = (np.arange(m) + 0.5) / m
    nodes = a + t[:, None] * (b - a)
    h = L / m
    out = dict(nodes=nodes, cell_measures=np.full(m, h), cell_radii=np.full(m, h / 2), cell_dims=np.full(m, 1))
    for tag, order in (("fine", 8), ("coarse", 3)):
        u, w = _gauss01(order)
        tt = (np.arange(m)[:, None] + u[None, :]) / m
        out["quad_" + tag] = a + tt[..., None] * (b - a)
        out["w" + tag] = np.repeat(w[None, :], m, axis=0)
    return out


def _shell3(center, r_in, r_out, layers, central):
    """Radial layers of a ball/spherical shell, each split into Fibonacci angular cells."""
    c = np.asarray(center)
    edges = np.linspace(r_in, r_out, layers + 1)
    delta = (r_out - r_in) / layers
    acc = {k: [] for k in ("nodes", "cell_measures", "cell_radii", "pf", "wf", "pc", "wc")}
    for k in range(layers):
        r1, r2 = edges[k], edges[k + 1]
        if central and k == 0:
            dirs = fibonacci_directions(24)
            for tag, nr in (("f", 4), ("c", 2)):
                u, wu = _gauss01(nr)
                rr = r1 + (r2 - r1) * u
                P = (rr[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
                W = np.repeat(wu * rr**2, len(dirs))
                acc["p" + tag].append(c + P)
                acc["w" + tag].append(W)
            acc["nodes"].append(c.copy())
            acc["cell_measures"].append(4 * math.pi / 3 * r2**3)
            acc["cell_radii"].append(r2)
            continue
        rmid = 0.5 * (r1 + r2)
        m = max(12, int(round(4 * math.pi * rmid**2 / delta**2)))
        X, areas, verts, quads = _unit_sphere_cells(m, (3, 1))
        rnode = 0.75 * (r2**4 - r1**4) / (r2**3 - r1**3)
        for i in range(m):
            acc["nodes"].append(c + rnode * X[i])
            acc["cell_measures"].append(areas[i] * (r2**3 - r1**3) / 3)
            corners = np.vstack([r1 * verts[i], r2 * verts[i]])
            acc["cell_radii"].append(float(np.max(np.linalg.norm(corners - rnode * X[i], axis=1))))
        for (pts, wts), tag, nr in zip(quads, ("f", "c"), (3, 2)):
            u, wu = _gauss01(nr)
            rr = r1 + (r2 - r1) * u
            for i in range(m):
                P = (rr[:, None, None] * pts[i][None, :, :]).reshape(-1, 3)
                W = (wu[:, None] * rr[:, None] ** 2 * wts[i][None, :]).ravel()
                acc["p" + tag].append(c + P)
                acc["w" + tag].append(W)
    nodes = np.array(acc["nodes"])
    Pf, Wf = _pad(acc["pf"], acc["wf"], nodes)
    Pc, Wc = _pad(acc["pc"], acc["wc"], nodes)
    return dict(nodes=nodes, cell_measures=np.array(acc["cell_measures"]), cell_radii=np.array(acc["cell_radii"]),
                cell_dims=np.full(len(nodes), 3), quad_fine=Pf, wfine=Wf, quad_coarse=Pc, wcoarse=Wc)


def _shell2(center, r_in, r_out, layers, central):
    """Rings of a disc/planar annulus split into sectors of roughly square shape."""
    c = np.asarray(center)
    edges = np.linspace(r_in, r_out, layers + 1)
    delta = (r_out - r_in) / layers
    acc = {k: [] for k in ("nodes", "cell_measures", "cell_radii", "pf", "wf", "pc", "wc")}
    for k in range(layers):
        r1, r2 = edges[k], edges[k + 1]
        if central and k == 0:
            m, shift = 1, 0.0
        else:
            m = max(6, int(round(2 * math.pi * 0.5 * (r1 + r2) / delta)))
            shift = 0.5 * (k % 2)
        dt = 2 * math.pi / m
        for j in range(m):
            t1 = (j + shift) * dt
            if m == 1:
                node = c.copy()
                rad = r2
            else:
                rc = (2 / 3) * (r2**3 - r1**3) / (r2**2 - r1**2)
                node = c + rc * np.array([math.cos(t1 + dt / 2), math.sin(t1 + dt / 2)])
                corners = np.array([[r * math.cos(t), r * math.sin(t)] for r in (r1, r2) for t in (t1, t1 + dt)]) + c
                rad = float(np.max(np.linalg.norm(corners - node, axis=1)))
            acc["nodes"].append(node)
            acc["cell_measures"].append(0.5 * dt * (r2**2 - r1**2))
            acc["cell_radii"].append(rad)
            for tag, (nr, nt) in (("f", (5, 5 if m > 1 else 16)), ("c", (2, 2 if m > 1 else 8))):
                ur, wr = _gauss01(nr)
                ut, wt = _gauss01(nt)
                rr = r1 + (r2 - r1) * ur
                tt = t1 + dt * ut
                R, T = np.meshgrid(rr, tt, indexing="ij")
                P = c + np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
                W = (np.outer(wr * rr, wt)).ravel()
                acc["p" + tag].append(P)
                acc["w" + tag].append(W)
    nodes = np.array(acc["nodes"])
    Pf, Wf = _pad(acc["pf"], acc["wf"], nodes)
    Pc, Wc = _pad(acc["pc"], acc["wc"], nodes)
    return dict(nodes=nodes, cell_measures=np.array(acc["cell_measures"]), cell_radii=np.array(acc["cell_radii"]),
                cell_dims=np.full(len(nodes), 2), quad_fine=Pf, wfine=Wf, quad_coarse=Pc, wcoarse=Wc)


def _box(lo, hi, res):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    ext = hi - lo
    counts = np.maximum(1, np.round(res * ext / ext.max()).astype(int))
    h = ext / counts
    n = len(lo)
    grids = np.meshgrid(*[np.arange(k) for k in counts], indexing="ij")
    idx = np.column_stack([g.ravel() for g in grids])
    nodes = lo + (idx + 0.5) * h
    N = len(nodes)
    out = dict(nodes=nodes, cell_measures=np.full(N, float(np.prod(h))),
               cell_radii=np.full(N, 0.5 * float(np.linalg.norm(h))), cell_dims=np.full(N, n))
    for tag, order in (("fine", 4 if n == 2 else 3), ("coarse", 2)):
        u, w = _gauss01(order)
        sub = np.meshgrid(*([u] * n), indexing="ij")
        sub = np.column_stack([s.ravel() for s in sub]) - 0.5
        sw = np.ones(len(sub))
        for wg in np.meshgrid(*([w] * n), indexing="ij"):
            sw = sw * wg.ravel()
        out["quad_" + tag] = nodes[:, None, :] + sub[None, :, :] * h
        out["w" + tag] = np.repeat((sw / sw.sum())[None, :], N, axis=0)
    return out


def read_points_file(path, dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse ``n`` coordinates, a cell measure and a cell radius per line; ``#`` lines are comments."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read points file {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != dim + 2:
            raise ValueError(f"{path}:{lineno}: expected {dim + 2} columns, got {len(parts)}")
        rows.append([float(p) for p in parts])
    if not rows:
        raise ValueError(f"{path}: no points")
    arr = np.array(rows)
    return arr[:, :dim], arr[:, dim], arr[:, dim + 1]


def _points(spec: SetSpec):
    nodes, meas, rad = read_points_file(spec.path, spec.dim)
    N = len(nodes)
    P = nodes[:, None, :].copy()
    W = np.ones((N, 1))
    return dict(nodes=nodes, cell_measures=meas, cell_radii=rad, cell_dims=np.full(N, spec.cell_dim),
                quad_fine=P, wfine=W, quad_coarse=P.copy(), wcoarse=W.copy())


def _concat(raws: list[dict]) -> dict:
    q_f = max(r["quad_fine"].shape[1] for r in raws)
    q_c = max(r["quad_coarse"].shape[1] for r in raws)
    out = {}
    for key in ("nodes", "cell_measures", "cell_radii", "cell_dims"):
        out[key] = np.concatenate([r[key] for r in raws])
    for pk, wk, q in (("quad_fine", "wfine", q_f), ("quad_coarse", "wcoarse", q_c)):
        Ps, Ws = [], []
        for r in raws:
            P, W = r[pk], r[wk]
            extra = q - P.shape[1]
            if extra:
                # padding points sit on the node with zero weight
                P = np.concatenate([P, np.repeat(r["nodes"][:, None, :], extra, axis=1)], axis=1)
                W = np.concatenate([W, np.zeros((len(W), extra))], axis=1)
            Ps.append(P)
            Ws.append(W)
        out[pk] = np.concatenate(Ps)
        out[wk] = np.concatenate(Ws)
    return out


def _raw(spec: SetSpec, resolution: int) -> dict:
    n = spec.dim
    if spec.shape == "sphere":
        if n == 3:
            return _sphere3(spec.center, spec.radius, resolution)
        if n == 2:
            return _circle(spec.center, spec.radius, resolution)
        raise ValueError(f"sphere discretization supports dim 2 or 3, got {n}")
    if spec.shape in ("ball", "annulus"):
        central = spec.shape == "ball"
        r_in, r_out = (0.0, spec.radius) if central else (spec.r_in, spec.r_out)
        if n == 3:
            return _shell3(spec.center, r_in, r_out, resolution, central)
        if n == 2:
            return _shell2(spec.center, r_in, r_out, resolution, central)
        raise ValueError(f"{spec.shape} discretization supports dim 2 or 3, got {n}")
    if spec.shape == "segment":
        return _segment(spec.a, spec.b, resolution)
    if spec.shape == "box":
        if n > 3:
            raise ValueError("box discretization supports dim 2 or 3")
        return _box(spec.lo, spec.hi, resolution)
    if spec.shape == "points_file":
        return _points(spec)
    if spec.shape == "union":
        return _concat([_raw(p, resolution) for p in spec.parts])
    raise ValueError(f"shape {spec.shape!r} is unbounded; use exhaustion() for rays and restrict() for half-spaces")


def discretize(spec: SetSpec, resolution: int) -> DiscreteSet:
    """Panelize a bounded set.

    ``resolution`` means: panels for segments and spheres, radial layers for
    balls and annuli, cells along the longest edge for boxes.  Ignored for
    point files.
    """
    if int(resolution) < 1:
        raise ValueError("resolution must be >= 1")
    resolution = int(resolution)
    raw = _raw(spec, resolution)
    S = DiscreteSet(spec=spec, resolution=resolution, **raw)
    _check_panels(S)
    return S


def join(sets: Sequence[DiscreteSet]) -> DiscreteSet:
    """Union of separately discretized sets, e.g. parts meshed at different resolutions."""
    if not sets:
        raise ValueError("nothing to join")
    if len({S.dim for S in sets}) != 1:
        raise ValueError("sets to join live in different dimensions")
    fields = ("nodes", "cell_measures", "cell_radii", "cell_dims", "quad_fine", "wfine", "quad_coarse", "wcoarse")
    raw = _concat([{f: np.asarray(getattr(S, f)) for f in fields} for S in sets])
    spec = SetSpec.union([S.spec for S in sets])
    S = DiscreteSet(spec=spec, resolution=max(S.resolution for S in sets), **raw)
    _check_panels(S)
    return S


def _check_panels(S: DiscreteSet) -> None:
    if not np.all(np.isfinite(S.cell_measures)) or np.any(S.cell_measures <= 0):
        raise ValueError("cell measures must be positive and finite")
    if len(np.unique(S.nodes, axis=0)) != len(S):
        raise ValueError("panel nodes are not pairwise distinct")


def analytic_measure(spec: SetSpec) -> float:
    """Exact length/area/volume of a bounded spec (sum over union parts, overlaps ignored)."""
    n = spec.dim
    if spec.shape == "sphere":
        return 2 * math.pi ** (n / 2) / math.gamma(n / 2) * spec.radius ** (n - 1)
    if spec.shape == "ball":
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * spec.radius**n
    if spec.shape == "annulus":
        v = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        return v * (spec.r_out**n - spec.r_in**n)
    if spec.shape == "segment":
        return float(np.linalg.norm(np.subtract(spec.b, spec.a)))
    if spec.shape == "box":
        return float(np.prod(np.subtract(spec.hi, spec.lo)))
    if spec.shape == "union":
        return sum(analytic_measure(p) for p in spec.parts)
    raise ValueError(f"no analytic measure for {spec.shape!r}")


# ---------------------------------------------------------------------------
# membership, restriction, exhaustion


def contains(spec: SetSpec, pts: np.ndarray, tol: float = MEMBER_TOL) -> np.ndarray:
    """Boolean mask of points lying in ``spec`` (closed sets, relative tolerance ``tol``)."""
    pts = np.atleast_2d(np.asarray(pts, float))
    if pts.shape[1] != spec.dim:
        raise ValueError(f"points have dim {pts.shape[1]}, spec has dim {spec.dim}")
    if spec.shape in ("sphere", "ball", "annulus"):
        r = np.linalg.norm(pts - np.asarray(spec.center), axis=1)
        if spec.shape == "sphere":
            return np.abs(r - spec.radius) <= tol * spec.radius
        if spec.shape == "ball":
            return r <= spec.radius * (1 + tol)
        return (r >= spec.r_in * (1 - tol)) & (r <= spec.r_out * (1 + tol))
    if spec.shape in ("segment", "ray"):
        a = np.asarray(spec.a if spec.shape == "segment" else spec.start)
        d = np.asarray(spec.b) - a if spec.shape == "segment" else np.asarray(spec.direction)
        L2 = float(d @ d)
        t = (pts - a) @ d / L2
        off = np.linalg.norm(pts - a - t[:, None] * d, axis=1)
        scale = math.sqrt(L2) if spec.shape == "segment" else max(1.0, float(np.linalg.norm(a)))
        ok = (t >= -tol) & (off <= tol * scale)
        if spec.shape == "segment":
            ok &= t <= 1 + tol
        return ok
    if spec.shape == "box":
        lo, hi = np.asarray(spec.lo), np.asarray(spec.hi)
        pad = tol * (hi - lo)
        return np.all((pts >= lo - pad) & (pts <= hi + pad), axis=1)
    if spec.shape == "halfspace":
        nv = np.asarray(spec.normal)
        return pts @ nv >= spec.offset - tol * float(np.linalg.norm(nv))
    if spec.shape == "union":
        mask = np.zeros(len(pts), bool)
        for p in spec.parts:
            mask |= contains(p, pts, tol)
        return mask
    if spec.shape == "points_file":
        nodes, _, _ = read_points_file(spec.path, spec.dim)
        lookup = {tuple(p) for p in nodes}
        return np.array([tuple(p) in lookup for p in pts])
    raise ValueError(f"unknown shape {spec.shape!r}")


def restrict(S: DiscreteSet, sub: SetSpec) -> DiscreteSet:
    """Keep exactly the panels whose nodes lie in ``sub``."""
    idx = np.flatnonzero(contains(sub, S.nodes))
    if len(idx) == 0:
        raise ValueError("restriction is empty: no node lies inside the sub-set")
    if len(idx) == len(S):
        return S
    # the SetSpec only records provenance; membership is decided by the nodes
    return S.subset(idx, spec=sub if sub.bounded else S.spec)


def exhaustion(spec: SetSpec, radii: Sequence[float], resolution: int,
               origin: Sequence[float] | None = None) -> list[DiscreteSet]:
    """Nested truncations ``spec ∩ B(origin, R_j)`` sharing one panelization.

    For a ray, ``resolution`` is panels per unit length; otherwise the largest
    truncation is discretized with ``discretize`` and every stage is a
    restriction of it, so node sets are nested by construction.
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("radii must be non-empty")
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and strictly increasing")
    n = spec.dim
    o = np.zeros(n) if origin is None else np.asarray(origin, float)
    rmax = radii[-1]
    if spec.shape == "ray":
        a = np.asarray(spec.start)
        d = np.asarray(spec.direction) / np.linalg.norm(spec.direction)
        # farthest parameter t with |a + t d - o| <= rmax
        ao = a - o
        bq = float(ao @ d)
        disc = bq * bq - (float(ao @ ao) - rmax**2)
        if disc <= 0 or -bq + math.sqrt(disc) <= 0:
            raise ValueError("ray does not reach inside the largest radius")
        t_hi = -bq + math.sqrt(disc)
        t_lo = max(0.0, -bq - math.sqrt(disc))
        m = max(1, int(round((t_hi - t_lo) * resolution)))
        base = discretize(SetSpec.segment(a + t_lo * d, a + t_hi * d), m)
        base = DiscreteSet(**{**base.__dict__, "spec": spec, "resolution": int(resolution), "_key": None})
    else:
        if not spec.bounded:
            raise ValueError(f"cannot exhaust shape {spec.shape!r}")
        base = discretize(spec, resolution)
    stages = []
    for r in radii:
        idx = np.flatnonzero(np.linalg.norm(base.nodes - o, axis=1) <= r * (1 + MEMBER_TOL))
        if len(idx) == 0:
            raise ValueError(f"truncation at radius {r} is empty")
        stages.append(base if len(idx) == len(base) else base.subset(idx))
    return stages


def decreasing_family(spec: SetSpec, subs: Sequence[SetSpec], resolution: int) -> list[DiscreteSet]:
    """``restrict(discretize(spec), sub_j)`` for each sub; checks the result is nested decreasing."""
    base = discretize(spec, resolution)
    stages = [restrict(base, s) for s in subs]
    for big, small in zip(stages, stages[1:]):
        if not small.is_subset_of(big):
            raise ValueError("sub-sets do not form a decreasing sequence")
    return stages
