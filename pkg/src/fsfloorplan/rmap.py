"""Generalized pairwise projections with preference ratios and resetting."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import Instance, Placement
from .projections import (
    DIRECTIONS,
    BoundarySegment,
    ConstraintCell,
    cell_projection,
    in_cell,
    pair_cells,
)

NEG_INF = -math.inf
EPS_PREF_SCALE = 1e-3


@dataclass
class RmapConfig:
    """Sweep parameters.

    ``eps_pref`` of None means ``EPS_PREF_SCALE`` times the die diagonal.
    ``progress`` controls when the dominant direction of a violated pair is
    counted: only if the pair's violation depth is at least ``progress``
    times the depth seen on its previous visit, i.e. the pair is not
    converging into that cell.  ``progress=None`` counts every visit that
    leaves the pair violated.
    """

    eps_pref: Optional[float] = None
    T: float = 5
    order: str = "position"  # or "index"
    progress: Optional[float] = 1.0

    def __post_init__(self):
        if self.eps_pref is not None and not self.eps_pref > 0:
            raise ValueError("eps_pref must be positive")
        if not (self.T >= 1):
            raise ValueError("T must be >= 1 (or inf)")
        if self.order not in ("position", "index"):
            raise ValueError(f"unknown order policy {self.order!r}")
        if self.progress is not None and not self.progress > 0:
            raise ValueError("progress must be positive or None")

    def resolved_eps(self, instance: Instance) -> float:
        return self.eps_pref if self.eps_pref is not None else EPS_PREF_SCALE * instance.die.diagonal


@dataclass
class PreferenceState:
    """Per-pair direction counters (L, R, B, A) plus the last violation depth seen."""

    T: float = 5
    counters: dict = field(default_factory=dict)
    last_depth: dict = field(default_factory=dict)

    def get(self, pair: tuple[int, int]) -> list[int]:
        c = self.counters.get(pair)
        if c is None:
            c = self.counters[pair] = [0, 0, 0, 0]
        return c


class PairGeometry:
    """The four cells of every module pair with empty ones dropped up front."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.n = instance.n
        self.cells: dict[tuple[int, int], list[Optional[ConstraintCell]]] = {}
        for i in range(instance.n_modules):
            for j in range(i + 1, instance.n_modules):
                cells = [c if not c.empty else None for c in pair_cells(instance, i, j)]
                if all(c is None for c in cells):
                    raise ValueError(f"modules {i} and {j} cannot both fit in the die")
                self.cells[(i, j)] = cells
        self.boxes = [(instance.die.width - m.width, instance.die.height - m.height)
                      for m in instance.modules]

    def pair_ok(self, xs, i: int, j: int) -> bool:
        return any(c is not None and in_cell(xs, self.n, c) for c in self.cells[(i, j)])


def position_order(z: Placement, n_modules: int, n: Optional[int] = None) -> list[tuple[int, int]]:
    """Pairs ranked by x + y of their modules, smaller first."""
    if n is None:
        n = len(z) // 2
    keys = [z[i] + z[n + i] for i in range(n_modules)]
    ranked = sorted(range(n_modules), key=lambda i: (keys[i], i))
    return [(ranked[a], ranked[b]) for a in range(n_modules) for b in range(a + 1, n_modules)]


def index_order(n_modules: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n_modules) for j in range(i + 1, n_modules)]


def softmax_weights(etas: Sequence[float], eps: float) -> list[float]:
    top = max(etas)
    if top == NEG_INF:
        raise ValueError("all preference ratios are -inf")
    ex = [0.0 if e == NEG_INF else math.exp((e - top) / eps) for e in etas]
    s = sum(ex)
    return [e / s for e in ex]


def _projections(geom: PairGeometry, xs, pair):
    return [None if c is None else cell_projection(xs, geom.n, c) for c in geom.cells[pair]]


def _closest_etas(xs, N, i, j, projs):
    cur = (xs[i], xs[j], xs[N + i], xs[N + j])
    return [NEG_INF if p is None else -math.dist(cur, p) for p in projs]


def preference_ratio(pair, z, state: PreferenceState, geom: PairGeometry, _xs=None, _projs=None):
    """Resetting-strategy preference ratios (eta_L, eta_R, eta_B, eta_A).

    A direction whose counter exceeds T gets -inf and its counter is reset;
    the others get minus their projection distance.  Empty cells are always
    -inf.  If every direction ends up -inf the closest-point ratios are used.
    """
    i, j = pair = (min(pair), max(pair))
    xs = _xs if _xs is not None else list(z)
    projs = _projs if _projs is not None else _projections(geom, xs, pair)
    etas = _closest_etas(xs, geom.n, i, j, projs)
    counters = state.get(pair)
    out = list(etas)
    for t in range(4):
        if projs[t] is not None and counters[t] > state.T:
            out[t] = NEG_INF
            counters[t] = 0
    if all(e == NEG_INF for e in out):
        return etas
    return out


class Sweeper:
    """Applies one pass of pairwise projections to a placement.

    ``hard=True`` is classic MAP: each violated pair jumps to its closest
    cell.  Otherwise the pair moves to the softmax-weighted average of its
    cell projections with the resetting strategy steering the weights.
    """

    def __init__(self, instance: Instance, config: Optional[RmapConfig] = None, *,
                 hard: bool = False, io_segments: Sequence[BoundarySegment] = ()):
        self.instance = instance
        self.config = config or RmapConfig()
        self.hard = hard
        self.geom = PairGeometry(instance)
        self.eps = self.config.resolved_eps(instance)
        self.state = PreferenceState(T=math.inf if hard else self.config.T)
        self.io_segments = list(io_segments)

    def order(self, z: Placement) -> list[tuple[int, int]]:
        if self.config.order == "index":
            return index_order(self.instance.n_modules)
        return position_order(z, self.instance.n_modules, self.instance.n)

    def sweep(self, z: Placement, order=None) -> Placement:
        N = self.instance.n
        if order is None:
            order = self.order(z)
        xs = z.tolist()
        geom = self.geom
        for pair in order:
            i, j = key = (min(pair), max(pair))
            if geom.pair_ok(xs, i, j):
                self.state.last_depth[key] = 0.0
                continue
            projs = _projections(geom, xs, key)
            etas0 = _closest_etas(xs, N, i, j, projs)
            if self.hard:
                best = max(range(4), key=lambda t: (etas0[t], -t))
                xs[i], xs[j], xs[N + i], xs[N + j] = projs[best]
                continue
            etas = preference_ratio(key, None, self.state, geom, xs, projs)
            w = softmax_weights(etas, self.eps)
            new = [sum(w[t] * projs[t][c] for t in range(4) if w[t] > 0) for c in range(4)]
            best = max(range(4), key=lambda t: (w[t], -t))
            xs[i], xs[j], xs[N + i], xs[N + j] = new
            depth = -max(etas0)
            prev = self.state.last_depth.get(key, 0.0)
            self.state.last_depth[key] = depth
            if self.config.progress is None:
                count = not geom.pair_ok(xs, i, j)
            else:
                count = depth >= self.config.progress * prev
            if count:
                self.state.get(key)[best] += 1
        for i, (xh, yh) in enumerate(geom.boxes):
            xs[i] = min(max(xs[i], 0.0), xh)
            xs[N + i] = min(max(xs[N + i], 0.0), yh)
        for seg in self.io_segments:
            fixed, free = (seg.entity, N + seg.entity) if seg.axis == 0 else (N + seg.entity, seg.entity)
            xs[fixed] = seg.value
            xs[free] = min(max(xs[free], seg.lo), seg.hi)
        return np.array(xs)


def rmap_sweep(z: Placement, order, state: PreferenceState, config: RmapConfig,
               io_segments: Sequence[BoundarySegment], instance: Instance) -> Placement:
    """One RMAP pass with an explicit, caller-owned preference state."""
    sw = Sweeper(instance, config, io_segments=io_segments)
    sw.state = state
    return sw.sweep(np.asarray(z, dtype=float), order)


def map_sweep(z: Placement, order, io_segments: Sequence[BoundarySegment], instance: Instance) -> Placement:
    """One classic MAP pass: every violated pair jumps to its closest cell."""
    sw = Sweeper(instance, hard=True, io_segments=io_segments)
    return sw.sweep(np.asarray(z, dtype=float), order)


class OscillationDetector:
    """Flags a run whose overlap ratio has stopped changing while still too high."""

    def __init__(self, window: int = 50, spread: float = 1e-6, threshold: float = 1e-3):
        self.history: deque = deque(maxlen=window)
        self.spread = spread
        self.threshold = threshold

    def update(self, overlap: float) -> bool:
        self.history.append(overlap)
        if len(self.history) < self.history.maxlen:
            return False
        return overlap > self.threshold and max(self.history) - min(self.history) < self.spread
