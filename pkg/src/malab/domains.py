"""Convex domains, uniform grids, and distance-to-boundary evaluation.

Domains follow one normalization throughout the package: the marked boundary
point sits at the origin, the body lies in the upper half-space {x_n > 0},
and an interior ball of radius ``tangent_ball_radius`` touches the boundary
at the origin.  All shape predicates and distances are vectorized over
point arrays of shape (m, n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull

from .errors import DomainError, InputError

_SHAPES = ("slab", "ball", "half_ball", "superellipse", "polytope")


@dataclass(frozen=True)
class Grid:
    """Uniform axis-aligned grid: nodes at lo + i * spacing per axis."""

    spacing: float
    lo: tuple[float, ...]
    npts: tuple[int, ...]

    def __post_init__(self):
        if self.spacing <= 0:
            raise InputError(f"grid spacing must be positive, got {self.spacing}")
        if any(n < 8 for n in self.npts):
            raise InputError(f"need at least 8 nodes per axis, got {self.npts}")

    @property
    def dimension(self) -> int:
        return len(self.npts)

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(lo + (n - 1) * self.spacing for lo, n in zip(self.lo, self.npts))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.npts

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.lo[axis] + self.spacing * np.arange(self.npts[axis])

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (prod(npts), dimension), C-order."""
        axes = [self.axis_coords(a) for a in range(self.dimension)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def index_coords(self, idx: np.ndarray) -> np.ndarray:
        """Coordinates of integer multi-indices, shape (m, dimension)."""
        idx = np.atleast_2d(idx)
        return np.asarray(self.lo) + self.spacing * idx

    @classmethod
    def from_bounds(cls, spacing: float, bounds: Sequence[Sequence[float]]) -> "Grid":
        """Grid covering the given [(lo, hi), ...] box; hi is rounded up to a node."""
        lo = tuple(float(b[0]) for b in bounds)
        npts = tuple(int(np.ceil((b[1] - b[0]) / spacing - 1e-12)) + 1 for b in bounds)
        return cls(spacing=spacing, lo=lo, npts=npts)


class ConvexDomain:
    """Convex region in dimension 2 or 3 with a marked boundary point.

    Supported shapes and parameters:
      slab          {}                         the half-space {x_n > 0}
      ball          {radius, center?}          center defaults to radius * e_n
      half_ball     {radius}                   {|x| < radius} ∩ {x_n > 0}
      superellipse  {exponent, semiaxes, center?}
      polytope      {vertices}                 convex hull of the vertex list
    """

    def __init__(self, dimension: int, shape: str, params: dict | None = None,
                 marked_point: Sequence[float] | None = None,
                 tangent_ball_radius: float = 0.5):
        if dimension not in (2, 3):
            raise InputError(f"dimension must be 2 or 3, got {dimension}")
        if shape not in _SHAPES:
            raise InputError(f"unknown shape {shape!r}; expected one of {_SHAPES}")
        if tangent_ball_radius <= 0:
            raise InputError("tangent_ball_radius must be positive")
        self.dimension = dimension
        self.shape = shape
        self.params = dict(params or {})
        self.marked_point = (np.zeros(dimension) if marked_point is None
                             else np.asarray(marked_point, dtype=float))
        self.tangent_ball_radius = float(tangent_ball_radius)
        self._setup()

    def _setup(self):
        n, p = self.dimension, self.params
        if self.shape == "ball":
            r = float(p.get("radius", 1.0))
            c = np.asarray(p.get("center", r * np.eye(n)[-1]), dtype=float)
            p["radius"], p["center"] = r, c
        elif self.shape == "half_ball":
            p["radius"] = float(p.get("radius", 1.0))
        elif self.shape == "superellipse":
            p["exponent"] = float(p.get("exponent", 2.0))
            a = np.asarray(p.get("semiaxes", np.ones(n)), dtype=float)
            c = np.asarray(p.get("center", a[-1] * np.eye(n)[-1]), dtype=float)
            p["semiaxes"], p["center"] = a, c
            if p["exponent"] < 1:
                raise InputError("superellipse exponent must be >= 1 (convexity)")
        elif self.shape == "polytope":
            verts = np.asarray(p["vertices"], dtype=float)
            verts = _dedupe_vertices(verts)
            hull = ConvexHull(verts)
            # qhull rows are unit-normal: A x + b <= 0 inside
            p["vertices"] = verts
            self._face_A = hull.equations[:, :-1]
            self._face_b = hull.equations[:, -1]

    @property
    def is_bounded(self) -> bool:
        return self.shape != "slab"

    # -- predicates ------------------------------------------------------

    def contains(self, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Strict interior test (boolean array over rows of x)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        p = self.params
        if self.shape == "slab":
            return x[:, -1] > tol
        if self.shape == "ball":
            return np.linalg.norm(x - p["center"], axis=1) < p["radius"] - tol
        if self.shape == "half_ball":
            return (np.linalg.norm(x, axis=1) < p["radius"] - tol) & (x[:, -1] > tol)
        if self.shape == "superellipse":
            t = np.abs((x - p["center"]) / p["semiaxes"]) ** p["exponent"]
            return t.sum(axis=1) < 1.0 - tol
        return (x @ self._face_A.T + self._face_b < -tol).all(axis=1)

    def distance(self, x: np.ndarray) -> np.ndarray:
        """Distance to the boundary for points in the closure."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        p = self.params
        inside = self.contains(x, tol=-1e-12)
        if not inside.all():
            bad = x[~inside][0]
            raise DomainError(f"point {bad} lies outside the domain closure")
        if self.shape == "slab":
            return x[:, -1].copy()
        if self.shape == "ball":
            return p["radius"] - np.linalg.norm(x - p["center"], axis=1)
        if self.shape == "half_ball":
            return np.minimum(x[:, -1], p["radius"] - np.linalg.norm(x, axis=1))
        if self.shape == "polytope":
            return np.maximum(-(x @ self._face_A.T + self._face_b), 0.0).min(axis=1)
        return self._superellipse_distance(x)

    def _superellipse_distance(self, x: np.ndarray) -> np.ndarray:
        bpts = self._superellipse_boundary_points()
        # coarse nearest boundary sample, then one local refinement pass
        d2 = ((x[:, None, :] - bpts[None, :, :]) ** 2).sum(axis=2)
        return np.sqrt(d2.min(axis=1))

    def _superellipse_boundary_points(self, refine: int = 4096) -> np.ndarray:
        p = self.params
        a, c, q = p["semiaxes"], p["center"], p["exponent"]
        if self.dimension == 2:
            th = np.linspace(0, 2 * np.pi, refine, endpoint=False)
            ct, st = np.cos(th), np.sin(th)
            pts = np.stack([a[0] * np.sign(ct) * np.abs(ct) ** (2 / q),
                            a[1] * np.sign(st) * np.abs(st) ** (2 / q)], axis=1)
            return pts + c
        m = int(np.sqrt(refine))
        th = np.linspace(0, np.pi, m)
        ph = np.linspace(0, 2 * np.pi, 2 * m, endpoint=False)
        T, P = np.meshgrid(th, ph, indexing="ij")
        sx = np.sin(T) * np.cos(P)
        sy = np.sin(T) * np.sin(P)
        sz = np.cos(T)
        pts = np.stack([a[0] * np.sign(sx) * np.abs(sx) ** (2 / q),
                        a[1] * np.sign(sy) * np.abs(sy) ** (2 / q),
                        a[2] * np.sign(sz) * np.abs(sz) ** (2 / q)], axis=-1)
        return pts.reshape(-1, 3) + c

    def boundary_crossing(self, start: np.ndarray, step: np.ndarray,
                          iters: int = 50) -> np.ndarray:
        """Fraction theta in (0, 1] where start + theta*step first leaves the domain.

        start must be strictly inside; start + step outside or on the boundary.
        Vectorized bisection, resolves theta to ~1e-15.
        """
        start = np.atleast_2d(start)
        step = np.atleast_2d(step)
        lo = np.zeros(len(start))
        hi = np.ones(len(start))
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            ok = self.contains(start + mid[:, None] * step)
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        return hi

    # -- diagnostics -----------------------------------------------------

    def sample_interior(self, count: int, seed: int = 0) -> np.ndarray:
        """Rejection-sample interior points from the bounding box (bounded shapes)."""
        rng = np.random.default_rng(seed)
        lo, hi = self.bounding_box()
        out = []
        need = count
        while need > 0:
            cand = rng.uniform(lo, hi, size=(4 * need, self.dimension))
            good = cand[self.contains(cand)]
            out.append(good[:need])
            need -= len(good[:need])
        return np.concatenate(out, axis=0)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        if self.shape == "ball":
            return p["center"] - p["radius"], p["center"] + p["radius"]
        if self.shape == "half_ball":
            r = p["radius"]
            lo = -r * np.ones(self.dimension)
            lo[-1] = 0.0
            return lo, r * np.ones(self.dimension)
        if self.shape == "superellipse":
            return p["center"] - p["semiaxes"], p["center"] + p["semiaxes"]
        if self.shape == "polytope":
            v = p["vertices"]
            return v.min(axis=0), v.max(axis=0)
        raise DomainError("slab is unbounded")


def _dedupe_vertices(verts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    out: list[np.ndarray] = []
    for v in verts:
        if not any(np.linalg.norm(v - w) <= tol for w in out):
            out.append(v)
    return np.asarray(out)


def boundary_distance(domain: ConvexDomain, x: Sequence[float]) -> float:
    """Euclidean distance from x to the domain boundary (x in the closure)."""
    return float(domain.distance(np.asarray(x, dtype=float)[None, :])[0])
