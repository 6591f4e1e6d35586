"""Euclidean projections onto the constraint sets of the floorplanning problem.

Every projector returns a fresh placement but touches at most four entries,
so the ``*_inplace`` scalar kernels below are what the sweeps actually use.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Instance, Placement, side_segment

DIRECTIONS = ("L", "R", "B", "A")


class EmptyCellError(ValueError):
    """The requested convex piece has no points inside the die."""


class InfeasibleRegionError(ValueError):
    """qp_oracle was given constraints with an empty feasible region."""


@dataclass(frozen=True)
class BoxConstraint:
    target: int
    x_hi: float
    y_hi: float

    @classmethod
    def for_module(cls, instance: Instance, i: int) -> "BoxConstraint":
        m = instance.modules[i]
        return cls(i, instance.die.width - m.width, instance.die.height - m.height)


@dataclass(frozen=True)
class HalfSpacePair:
    """``coord_first + separation <= coord_second`` on one axis."""

    first: int
    second: int
    axis: int  # 0 for x, 1 for y
    separation: float


@dataclass(frozen=True)
class ConstraintCell:
    """One convex piece of the non-overlap-within-die union for pair (i, j).

    ``first``/``second`` are the modules ordered along ``axis`` so that the
    half-space reads ``first + separation <= second``.
    """

    i: int
    j: int
    direction: str
    axis: int
    first: int
    second: int
    separation: float
    x_hi: tuple[float, float]  # upper box bounds of (i, j) in x
    y_hi: tuple[float, float]

    @property
    def empty(self) -> bool:
        hi = self.x_hi if self.axis == 0 else self.y_hi
        second_hi = hi[0] if self.second == self.i else hi[1]
        return self.separation > second_hi


@dataclass(frozen=True)
class BoundarySegment:
    entity: int  # coordinate index of the I/O pin in the placement
    side: str
    axis: int  # axis of the fixed coordinate
    value: float
    lo: float
    hi: float

    @classmethod
    def for_io(cls, instance: Instance, k: int) -> "BoundarySegment":
        side = instance.io_pins[k].side
        axis, value, lo, hi = side_segment(side, instance.die)
        return cls(instance.n_modules + k, side, axis, value, lo, hi)


def make_cell(instance: Instance, i: int, j: int, direction: str) -> ConstraintCell:
    W, H = instance.die.width, instance.die.height
    mi, mj = instance.modules[i], instance.modules[j]
    axis, first, second, sep = {
        "L": (0, i, j, mi.width),
        "R": (0, j, i, mj.width),
        "B": (1, i, j, mi.height),
        "A": (1, j, i, mj.height),
    }[direction]
    return ConstraintCell(i, j, direction, axis, first, second, sep,
                          (W - mi.width, W - mj.width), (H - mi.height, H - mj.height))


def pair_cells(instance: Instance, i: int, j: int) -> list[ConstraintCell]:
    return [make_cell(instance, i, j, t) for t in DIRECTIONS]


# -- scalar kernels -------------------------------------------------------------


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def project_ordered_pair(u: float, v: float, u_hi: float, v_hi: float, s: float) -> Optional[tuple[float, float]]:
    """Project (u, v) onto {0 <= u <= u_hi, 0 <= v <= v_hi, u + s <= v}.

    Returns None when the region is empty.  If clamping to the box already
    satisfies the half-space it is the answer; otherwise the half-space is
    active at the optimum and the problem reduces to a clamped 1-D
    minimisation along the line ``v = u + s``.
    """
    lo, hi = max(0.0, -s), min(u_hi, v_hi - s)
    if lo > hi:
        return None
    cu, cv = _clamp(u, 0.0, u_hi), _clamp(v, 0.0, v_hi)
    if cu + s <= cv:
        return cu, cv
    t = _clamp(0.5 * (u + v - s), lo, hi)
    return t, t + s


def cell_projection(xs: list, N: int, cell: ConstraintCell) -> Optional[tuple[float, float, float, float]]:
    """Projected (x_i, x_j, y_i, y_j) of the pair onto ``cell`` from coordinates ``xs``."""
    i, j = cell.i, cell.j
    xi, xj, yi, yj = xs[i], xs[j], xs[N + i], xs[N + j]
    if cell.axis == 0:
        on = (xi, xj) if cell.first == i else (xj, xi)
        his = cell.x_hi if cell.first == i else cell.x_hi[::-1]
        r = project_ordered_pair(on[0], on[1], his[0], his[1], cell.separation)
        if r is None:
            return None
        nxi, nxj = r if cell.first == i else (r[1], r[0])
        return nxi, nxj, _clamp(yi, 0.0, cell.y_hi[0]), _clamp(yj, 0.0, cell.y_hi[1])
    on = (yi, yj) if cell.first == i else (yj, yi)
    his = cell.y_hi if cell.first == i else cell.y_hi[::-1]
    r = project_ordered_pair(on[0], on[1], his[0], his[1], cell.separation)
    if r is None:
        return None
    nyi, nyj = r if cell.first == i else (r[1], r[0])
    return _clamp(xi, 0.0, cell.x_hi[0]), _clamp(xj, 0.0, cell.x_hi[1]), nyi, nyj


# -- public projectors -------------------------------------------------------------


def project_box(z: Placement, c: BoxConstraint, n: int) -> Placement:
    """Clamp module ``c.target`` into its box; ``n`` is the entity count N."""
    out = np.array(z, dtype=float)
    i = c.target
    out[i] = _clamp(out[i], 0.0, c.x_hi)
    out[n + i] = _clamp(out[n + i], 0.0, c.y_hi)
    return out


def project_halfspace_pair(z: Placement, h: HalfSpacePair, n: int) -> Placement:
    out = np.array(z, dtype=float)
    off = 0 if h.axis == 0 else n
    a, b = off + h.first, off + h.second
    v = out[a] + h.separation - out[b]
    if v > 0:
        out[a] -= 0.5 * v
        out[b] += 0.5 * v
    return out


def project_cell(z: Placement, cell: ConstraintCell, n: int) -> Placement:
    """Exact projection onto ``cell``; raises EmptyCellError for an empty cell."""
    xs = z.tolist() if isinstance(z, np.ndarray) else list(z)
    r = cell_projection(xs, n, cell)
    if r is None:
        raise EmptyCellError(f"cell {cell.direction} of pair ({cell.i}, {cell.j}) is empty")
    out = np.array(z, dtype=float)
    out[cell.i], out[cell.j], out[n + cell.i], out[n + cell.j] = r
    return out


def project_boundary_segment(z: Placement, seg: BoundarySegment, n: int) -> Placement:
    out = np.array(z, dtype=float)
    fixed, free = (seg.entity, n + seg.entity) if seg.axis == 0 else (n + seg.entity, seg.entity)
    out[fixed] = seg.value
    out[free] = _clamp(out[free], seg.lo, seg.hi)
    return out


def in_cell(xs, N: int, cell: ConstraintCell) -> bool:
    i, j = cell.i, cell.j
    if not (0.0 <= xs[i] <= cell.x_hi[0] and 0.0 <= xs[j] <= cell.x_hi[1]
            and 0.0 <= xs[N + i] <= cell.y_hi[0] and 0.0 <= xs[N + j] <= cell.y_hi[1]):
        return False
    off = 0 if cell.axis == 0 else N
    return xs[off + cell.first] + cell.separation <= xs[off + cell.second]


# -- test oracle ------------------------------------------------------------------


def qp_oracle(point, A, b, tol: float = 1e-10) -> np.ndarray:
    """Project ``point`` onto {x : A x <= b} by active-set enumeration.

    Meant for tiny problems only (dimension <= 4, at most 6 constraints).
    Every subset of at most ``dim`` constraints is tried as the active set;
    the first candidate satisfying primal feasibility and nonnegative
    multipliers is the unique projection.
    """
    p = np.asarray(point, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float)).reshape(-1, p.size)
    b = np.asarray(b, dtype=float).ravel()
    m, d = A.shape
    if d > 4 or m > 6:
        raise ValueError("qp_oracle supports dim <= 4 and at most 6 constraints")
    scale = 1.0 + float(np.max(np.abs(p), initial=0.0)) + float(np.max(np.abs(b), initial=0.0))
    for k in range(0, min(m, d) + 1):
        for S in itertools.combinations(range(m), k):
            if k == 0:
                x, lam = p, np.zeros(0)
            else:
                As = A[list(S)]
                G = As @ As.T
                if abs(np.linalg.det(G)) < 1e-12:
                    continue
                lam = np.linalg.solve(G, As @ p - b[list(S)])
                x = p - As.T @ lam
            if np.all(A @ x <= b + tol * scale) and np.all(lam >= -tol * scale):
                return x
    raise InfeasibleRegionError("no KKT point found; the region is empty")


def cell_inequalities(cell: ConstraintCell) -> tuple[np.ndarray, np.ndarray]:
    """The on-axis 2-D subproblem of ``cell`` in (first, second) coordinates."""
    hi = cell.x_hi if cell.axis == 0 else cell.y_hi
    first_hi = hi[0] if cell.first == cell.i else hi[1]
    second_hi = hi[1] if cell.first == cell.i else hi[0]
    A = np.array([[-1, 0], [1, 0], [0, -1], [0, 1], [1, -1]], dtype=float)
    b = np.array([0, first_hi, 0, second_hi, -cell.separation], dtype=float)
    return A, b


def distance(a, b) -> float:
    return math.sqrt(sum((p - q) ** 2 for p, q in zip(a, b)))
