"""Wide-stencil direction frames and vectorized second-difference tables.

The monotone operator takes, at each node, the minimum over orthogonal
integer-direction frames of the product of positive parts of centered second
differences.  Steps that would exit the domain are shortened to the exact
boundary crossing and use the stored trace value (three-point uneven-step
formula), which keeps the scheme monotone up to the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .fields import ScalarField, _flat_strides


def primitive_directions(dimension: int, width: int) -> list[tuple[int, ...]]:
    """Primitive integer vectors with entries in [-width, width], one per +/- pair."""
    rng = range(-width, width + 1)
    out = []
    seen = set()
    if dimension == 2:
        cands = [(a, b) for a in rng for b in rng]
    else:
        cands = [(a, b, c) for a in rng for b in rng for c in rng]
    for v in cands:
        if all(c == 0 for c in v):
            continue
        g = 0
        for c in v:
            g = gcd(g, abs(c))
        v = tuple(c // g for c in v)
        if max(abs(c) for c in v) > width:
            continue
        # canonical sign: first nonzero positive
        for c in v:
            if c != 0:
                if c < 0:
                    v = tuple(-y for y in v)
                break
        if v not in seen:
            seen.add(v)
            out.append(v)
    return sorted(out)


def orthogonal_frames(dimension: int, width: int) -> list[np.ndarray]:
    """All orthogonal frames of primitive directions with offsets up to width.

    Returns a list of (dimension, dimension) integer arrays whose rows are
    pairwise orthogonal.  Frames are deduplicated up to row order and sign.
    The enumeration is done once per (dimension, width) and cached.
    """
    key = (dimension, width)
    if key in _FRAME_CACHE:
        return _FRAME_CACHE[key]
    dirs = primitive_directions(dimension, width)
    frames = []
    seen = set()
    if dimension == 2:
        for v in dirs:
            w = (-v[1], v[0])
            frame = _canonical_frame([v, _canon(w)])
            if frame not in seen:
                seen.add(frame)
                frames.append(np.array(frame))
    else:
        for i, u in enumerate(dirs):
            for v in dirs[i + 1:]:
                if np.dot(u, v) != 0:
                    continue
                w = np.cross(u, v)
                g = gcd(gcd(abs(int(w[0])), abs(int(w[1]))), abs(int(w[2])))
                w = tuple(int(c) // g for c in w)
                if max(abs(c) for c in w) > width:
                    continue
                frame = _canonical_frame([u, v, _canon(w)])
                if frame not in seen:
                    seen.add(frame)
                    frames.append(np.array(frame))
    _FRAME_CACHE[key] = frames
    return frames


_FRAME_CACHE: dict[tuple[int, int], list[np.ndarray]] = {}


def _canon(v) -> tuple[int, ...]:
    v = tuple(int(c) for c in v)
    for c in v:
        if c != 0:
            return v if c > 0 else tuple(-y for y in v)
    return v


def _canonical_frame(rows) -> tuple:
    return tuple(sorted(tuple(r) for r in rows))


@dataclass
class DirectionTable:
    """Per-direction neighbor data over the interior-node vector.

    nbr_plus/nbr_minus index into the interior vector, -1 where the step is a
    boundary cut; theta holds the step fraction (1 for regular steps); trace the
    boundary value used there.  cp/cm/q are the coefficients of the uneven-step
    second difference  D2(u0) = cp*u_plus + cm*u_minus - q*u0.
    """

    direction: np.ndarray
    nbr_plus: np.ndarray
    nbr_minus: np.ndarray
    trace_plus: np.ndarray
    trace_minus: np.ndarray
    cp: np.ndarray
    cm: np.ndarray
    q: np.ndarray

    def second_difference(self, u: np.ndarray, center: np.ndarray | None = None) -> np.ndarray:
        up = np.where(self.nbr_plus < 0, self.trace_plus, u[np.maximum(self.nbr_plus, 0)])
        um = np.where(self.nbr_minus < 0, self.trace_minus, u[np.maximum(self.nbr_minus, 0)])
        u0 = u if center is None else center
        return self.cp * up + self.cm * um - self.q * u0

    def linear_part(self, u: np.ndarray) -> np.ndarray:
        """p such that D2(c) = p - q*c at every node, for neighbor values u."""
        up = np.where(self.nbr_plus < 0, self.trace_plus, u[np.maximum(self.nbr_plus, 0)])
        um = np.where(self.nbr_minus < 0, self.trace_minus, u[np.maximum(self.nbr_minus, 0)])
        return self.cp * up + self.cm * um


class SolverTables:
    """Precomputed neighbor tables for a field's interior and a frame set."""

    def __init__(self, field: ScalarField, frames: list[np.ndarray]):
        self.field = field
        self.frames = frames
        grid = field.grid
        self.h = grid.spacing
        flat_mask = field.interior_mask.ravel()
        self.interior_flat = np.flatnonzero(flat_mask)
        self.n_interior = len(self.interior_flat)
        inv = -np.ones(flat_mask.size, dtype=np.int64)
        inv[self.interior_flat] = np.arange(self.n_interior)
        self._inv = inv
        self.points = grid.nodes()[self.interior_flat]
        # parity coloring for red-black sweeps
        idx = np.argwhere(field.interior_mask)
        self.color = (idx.sum(axis=1) % 2).astype(np.int8)

        dirset = {}
        for f in frames:
            for row in f:
                dirset[tuple(int(c) for c in row)] = None
        self.directions = [np.array(d) for d in dirset]
        self._dir_index = {tuple(d): i for i, d in enumerate(dirset)}
        self.tables = [self._build_direction(d) for d in self.directions]
        self.frame_dirs = [[self._dir_index[tuple(int(c) for c in row)] for row in f]
                           for f in frames]

    def _build_direction(self, v: np.ndarray) -> DirectionTable:
        field, grid = self.field, self.field.grid
        shape = grid.shape
        strides = _flat_strides(shape)
        stride = int((v * strides).sum())
        s = self.h * np.linalg.norm(v)
        flat_mask = field.interior_mask.ravel()

        def side(sign: int):
            nbr = np.full(self.n_interior, -1, dtype=np.int64)
            theta = np.ones(self.n_interior)
            trace = np.zeros(self.n_interior)
            ok = np.ones(self.n_interior, dtype=bool)
            for a in range(grid.dimension):
                if v[a] != 0:
                    ok &= _step_in_grid_k(self.interior_flat, a, int(v[a]) * sign, shape)
            tgt = self.interior_flat + sign * stride
            tgt_ok = np.zeros(self.n_interior, dtype=bool)
            tgt_ok[ok] = flat_mask[tgt[ok]]
            nbr[tgt_ok] = self._inv[tgt[tgt_ok]]
            cut = ~tgt_ok
            if cut.any():
                starts = self.points[cut]
                step = np.tile(sign * v * self.h, (len(starts), 1)).astype(float)
                th = field.domain.boundary_crossing(starts, step)
                pts = starts + th[:, None] * step
                theta[cut] = th
                trace[cut] = _trace_lookup(field, pts)
            return nbr, theta, trace

        nbr_p, th_p, tr_p = side(+1)
        nbr_m, th_m, tr_m = side(-1)
        denom = th_p * th_m * (th_p + th_m) * s * s
        cp = 2.0 * th_m / denom
        cm = 2.0 * th_p / denom
        q = 2.0 / (th_p * th_m * s * s)
        return DirectionTable(direction=v, nbr_plus=nbr_p, nbr_minus=nbr_m,
                              trace_plus=tr_p, trace_minus=tr_m, cp=cp, cm=cm, q=q)

    # -- operator evaluations ---------------------------------------------

    def ma_operator(self, u: np.ndarray) -> np.ndarray:
        """min over frames of prod_i max(second difference along v_i, 0)."""
        d2 = [t.second_difference(u) for t in self.tables]
        best = None
        for dirs in self.frame_dirs:
            prod = np.maximum(d2[dirs[0]], 0.0)
            for k in dirs[1:]:
                prod = prod * np.maximum(d2[k], 0.0)
            best = prod if best is None else np.minimum(best, prod)
        return best

    def second_differences(self, u: np.ndarray) -> np.ndarray:
        """Stacked second differences, shape (n_directions, n_interior)."""
        return np.stack([t.second_difference(u) for t in self.tables])

    # -- one-node updates ---------------------------------------------------

    def node_roots(self, u: np.ndarray, f: np.ndarray,
                   subset: np.ndarray | None = None) -> np.ndarray:
        """Exact root c of  min_frames prod_i max(p_i - q_i c, 0) = f  per node.

        The per-frame product is nonincreasing in c, so the root of the min is
        the minimum of the per-frame roots.  2D solves the quadratic exactly;
        3D runs a safeguarded Newton from a certified left bracket.  This is
        the same root that bisection on the monotone map converges to.
        """
        sel = slice(None) if subset is None else subset
        ps = []
        for t in self.tables:
            p = t.linear_part(u)[sel]
            ps.append((p, t.q[sel]))
        fv = f[sel]
        best = None
        for dirs in self.frame_dirs:
            if len(dirs) == 2:
                (p1, q1), (p2, q2) = ps[dirs[0]], ps[dirs[1]]
                A = q1 * q2
                B = p1 * q2 + p2 * q1
                C = p1 * p2 - fv
                disc = np.sqrt(np.maximum(B * B - 4 * A * C, 0.0))
                root = (B - disc) / (2 * A)
            else:
                root = _cubic_root(ps[dirs[0]], ps[dirs[1]], ps[dirs[2]], fv)
            best = root if best is None else np.minimum(best, root)
        return best

    def node_root_bisection(self, u: np.ndarray, f: np.ndarray, node: int,
                            rtol: float = 1e-12) -> float:
        """Reference scalar update: bisection on the monotone one-node map."""
        def op(c):
            best = None
            for dirs in self.frame_dirs:
                prod = 1.0
                for k in dirs:
                    t = self.tables[k]
                    p = t.linear_part(u)[node]
                    prod *= max(p - t.q[node] * c, 0.0)
                best = prod if best is None else min(best, prod)
            return best

        scale = max(abs(u[node]), self.h ** 2, 1e-8)
        lo = u[node]
        while op(lo) < f[node]:
            lo -= scale
            scale *= 2
        hi = lo + scale
        while op(hi) > f[node]:
            hi += scale
            scale *= 2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if op(mid) > f[node]:
                lo = mid
            else:
                hi = mid
            if hi - lo <= rtol * max(1.0, abs(mid)):
                break
        return 0.5 * (lo + hi)


def _cubic_root(pq1, pq2, pq3, f):
    (p1, q1), (p2, q2), (p3, q3) = pq1, pq2, pq3
    m1, m2, m3 = p1 / q1, p2 / q2, p3 / q3
    m = np.minimum(np.minimum(m1, m2), m3)
    F = f / (q1 * q2 * q3)
    c = m - np.cbrt(np.maximum(F, 0.0))  # certified left bracket
    for _ in range(60):
        g1 = m1 - c
        g2 = m2 - c
        g3 = m3 - c
        val = g1 * g2 * g3 - F
        der = -(g1 * g2 + g1 * g3 + g2 * g3)
        step = val / np.where(np.abs(der) < 1e-300, -1e-300, der)
        c_new = c - step
        if np.max(np.abs(c_new - c)) < 1e-15 * max(1.0, np.max(np.abs(c))):
            c = c_new
            break
        c = c_new
    return c


def _step_in_grid_k(flat_idx: np.ndarray, axis: int, k: int,
                    shape: tuple[int, ...]) -> np.ndarray:
    strides = _flat_strides(shape)
    coord = (flat_idx // strides[axis]) % shape[axis]
    if k > 0:
        return coord < shape[axis] - k
    return coord >= -k


def _trace_lookup(field: ScalarField, pts: np.ndarray) -> np.ndarray:
    """Boundary trace at arbitrary boundary points.

    The field stores traces only at axis cut points; for wide-stencil cuts we
    re-evaluate via the nearest stored cut when available, else fall back to
    the field's trace interpolant.
    """
    if getattr(field, "trace_fn", None) is not None:
        return np.asarray(field.trace_fn(pts), dtype=float)
    bpts, bvals = field.boundary_points_values()
    if not len(bpts):
        raise ValueError("field has no boundary data for wide-stencil cuts")
    d2 = ((pts[:, None, :] - bpts[None, :, :]) ** 2).sum(axis=2)
    return bvals[np.argmin(d2, axis=1)]
