"""Scalar fields on grids with cut-cell boundary traces.

Boundary data is stored at the exact points where grid lines cross the
domain boundary (one table per signed axis direction), so Dirichlet data
with quadratic separation is imposed without smearing.  Interior values
live in a dense array with NaN outside the interior mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domains import ConvexDomain, Grid
from .errors import InputError, NearBoundaryError, ResolutionError

CONVEXITY_RTOL = 1e-8  # relative to field range


@dataclass
class CutTable:
    """Boundary crossings of grid segments along one signed axis direction.

    node_flat[k] is the flat index (C-order over the full grid) of the interior
    node whose step along the direction leaves the domain; theta[k] in (0, 1]
    is the fraction of the step at which the boundary is met; point[k] the
    crossing coordinates; value[k] the boundary trace there.
    """

    node_flat: np.ndarray
    theta: np.ndarray
    point: np.ndarray
    value: np.ndarray


class ScalarField:
    """Values of a (candidate) convex function on the interior nodes of a grid."""

    def __init__(self, domain: ConvexDomain, grid: Grid, values: np.ndarray,
                 interior_mask: np.ndarray, cuts: dict[tuple[int, int], CutTable]):
        self.domain = domain
        self.grid = grid
        self.values = values
        self.interior_mask = interior_mask
        self.cuts = cuts
        self._convexity_flag: bool | None = None

    # -- basic views -----------------------------------------------------

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    def interior_indices(self) -> np.ndarray:
        return np.argwhere(self.interior_mask)

    def interior_points(self) -> np.ndarray:
        return self.grid.index_coords(self.interior_indices())

    def interior_values(self) -> np.ndarray:
        return self.values[self.interior_mask]

    def copy_with(self, values: np.ndarray) -> "ScalarField":
        out = ScalarField(self.domain, self.grid, values, self.interior_mask, self.cuts)
        return out

    def boundary_points_values(self) -> tuple[np.ndarray, np.ndarray]:
        pts = [t.point for t in self.cuts.values() if len(t.value)]
        vals = [t.value for t in self.cuts.values() if len(t.value)]
        if not pts:
            return np.zeros((0, self.dimension)), np.zeros(0)
        return np.concatenate(pts), np.concatenate(vals)

    # -- convexity -------------------------------------------------------

    @property
    def convexity_flag(self) -> bool:
        if self._convexity_flag is None:
            self._convexity_flag = self.check_convexity()
        return self._convexity_flag

    def check_convexity(self, rtol: float = CONVEXITY_RTOL) -> bool:
        """Discrete second differences along axis and diagonal directions >= -tol."""
        from .stencil import orthogonal_frames, SolverTables

        vals = self.interior_values()
        if not len(vals):
            return True
        rng = float(vals.max() - vals.min())
        # tolerance is scale-free in u; second differences carry 1/h^2
        tol = rtol * max(rng, 1e-30) / self.grid.spacing ** 2
        frames = orthogonal_frames(self.dimension, 1)
        tables = SolverTables(self, frames)
        second = tables.second_differences(vals)
        return bool(second.min() >= -tol)

    # -- interpolation and differences -----------------------------------

    def interpolate(self, pts: np.ndarray) -> np.ndarray:
        """Multilinear interpolation; NaN where the enclosing cell is not interior."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        g = self.grid
        rel = (pts - np.asarray(g.lo)) / g.spacing
        base = np.floor(rel).astype(int)
        base = np.clip(base, 0, np.asarray(g.npts) - 2)
        frac = rel - base
        out = np.zeros(len(pts))
        n = self.dimension
        for corner in range(1 << n):
            offs = np.array([(corner >> a) & 1 for a in range(n)])
            w = np.ones(len(pts))
            for a in range(n):
                w *= frac[:, a] if offs[a] else (1.0 - frac[:, a])
            idx = tuple((base + offs).T)
            out += w * self.values[idx]
        return out

    def gradient_at(self, x: np.ndarray) -> np.ndarray:
        """Centered-difference gradient at an interior point (interpolated)."""
        x = np.asarray(x, dtype=float)
        h = self.grid.spacing
        grad = np.zeros(self.dimension)
        for a in range(self.dimension):
            e = np.zeros(self.dimension)
            e[a] = h
            grad[a] = (self.interpolate(x + e)[0] - self.interpolate(x - e)[0]) / (2 * h)
        return grad


def build_field(domain: ConvexDomain, grid: Grid,
                interior_init: Callable[[np.ndarray], np.ndarray] | float,
                boundary_trace: Callable[[np.ndarray], np.ndarray]) -> ScalarField:
    """Sample a field: init on interior nodes, trace at axis cut points.

    Raises ResolutionError if the grid spacing exceeds tangent_ball_radius / 4.
    """
    if grid.spacing > domain.tangent_ball_radius / 4:
        raise ResolutionError(
            f"spacing {grid.spacing} exceeds tangent_ball_radius/4 = "
            f"{domain.tangent_ball_radius / 4}")
    if grid.dimension != domain.dimension:
        raise InputError("grid and domain dimension mismatch")

    nodes = grid.nodes()
    inside = domain.contains(nodes)
    mask = inside.reshape(grid.shape)

    values = np.full(grid.shape, np.nan)
    pts = nodes[inside]
    if callable(interior_init):
        values[mask] = np.asarray(interior_init(pts), dtype=float)
    else:
        values[mask] = float(interior_init)

    cuts = compute_axis_cuts(domain, grid, mask, boundary_trace)
    return ScalarField(domain, grid, values, mask, cuts)


def compute_axis_cuts(domain: ConvexDomain, grid: Grid, mask: np.ndarray,
                      boundary_trace: Callable[[np.ndarray], np.ndarray]
                      ) -> dict[tuple[int, int], CutTable]:
    """Boundary crossings for unit axis steps out of interior nodes."""
    cuts: dict[tuple[int, int], CutTable] = {}
    n = grid.dimension
    flat_mask = mask.ravel()
    nodes = grid.nodes()
    interior_flat = np.flatnonzero(flat_mask)
    strides = _flat_strides(grid.shape)
    for axis in range(n):
        for sign in (1, -1):
            step = np.zeros(n)
            step[axis] = sign * grid.spacing
            nbr_flat = interior_flat + sign * strides[axis]
            idx_ok = _step_in_grid(interior_flat, axis, sign, grid.shape)
            nbr_interior = np.zeros(len(interior_flat), dtype=bool)
            nbr_interior[idx_ok] = flat_mask[nbr_flat[idx_ok]]
            cut_rows = ~nbr_interior
            starts = nodes[interior_flat[cut_rows]]
            if len(starts):
                theta = domain.boundary_crossing(starts, np.tile(step, (len(starts), 1)))
                pts = starts + theta[:, None] * step
                vals = np.asarray(boundary_trace(pts), dtype=float)
            else:
                theta = np.zeros(0)
                pts = np.zeros((0, n))
                vals = np.zeros(0)
            cuts[(axis, sign)] = CutTable(node_flat=interior_flat[cut_rows],
                                          theta=theta, point=pts, value=vals)
    return cuts


def _flat_strides(shape: tuple[int, ...]) -> np.ndarray:
    strides = np.ones(len(shape), dtype=int)
    for a in range(len(shape) - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]
    return strides


def _step_in_grid(flat_idx: np.ndarray, axis: int, sign: int,
                  shape: tuple[int, ...]) -> np.ndarray:
    strides = _flat_strides(shape)
    coord = (flat_idx // strides[axis]) % shape[axis]
    if sign > 0:
        return coord < shape[axis] - 1
    return coord > 0


def numerical_hessian(field: ScalarField, x: np.ndarray,
                      allow_onesided: bool = False) -> np.ndarray:
    """Second-difference Hessian at an interior node at least 2 cells from the boundary.

    Diagonal entries use centered differences, cross terms diagonal differencing;
    O(h^2) on smooth inputs.  Raises NearBoundaryError when the stencil exits the
    interior (callers may retry with allow_onesided=True, losing an order).
    """
    x = np.asarray(x, dtype=float)
    g = field.grid
    h = g.spacing
    n = field.dimension
    idx = np.rint((x - np.asarray(g.lo)) / h).astype(int)
    if not np.allclose(g.index_coords(idx)[0], x, atol=1e-9 * h):
        raise InputError(f"{x} is not a grid node")

    def val(offset):
        j = idx + offset
        if (j < 0).any() or (j >= np.asarray(g.npts)).any() or not field.interior_mask[tuple(j)]:
            raise NearBoundaryError(f"stencil at {x} exits the interior")
        return field.values[tuple(j)]

    H = np.zeros((n, n))
    try:
        for a in range(n):
            e = np.zeros(n, dtype=int)
            e[a] = 1
            H[a, a] = (val(e) - 2 * val(e * 0) + val(-e)) / h ** 2
            for b in range(a + 1, n):
                f = np.zeros(n, dtype=int)
                f[b] = 1
                H[a, b] = (val(e + f) + val(-e - f) - val(e - f) - val(f - e)) / (4 * h ** 2)
                H[b, a] = H[a, b]
    except NearBoundaryError:
        if not allow_onesided:
            raise
        return _onesided_hessian(field, idx)
    return H


def _onesided_hessian(field: ScalarField, idx: np.ndarray) -> np.ndarray:
    """First-order fallback: shift the stencil center inward where needed."""
    g = field.grid
    shifted = idx.copy()
    for a in range(field.dimension):
        lo_ok = (shifted[a] - 2 >= 0
                 and field.interior_mask[tuple(_with(shifted, a, shifted[a] - 2))])
        hi_ok = (shifted[a] + 2 < g.npts[a]
                 and field.interior_mask[tuple(_with(shifted, a, shifted[a] + 2))])
        if not lo_ok:
            shifted[a] += 2
        elif not hi_ok:
            shifted[a] -= 2
    return numerical_hessian(field, g.index_coords(shifted)[0], allow_onesided=False)


def _with(idx: np.ndarray, axis: int, value: int) -> np.ndarray:
    out = idx.copy()
    out[axis] = value
    return out
