"""Problem representation, HPWL evaluation and overlap metrics.

A placement is a flat ``numpy`` vector of length ``2N`` holding all x
coordinates first and then all y coordinates.  Entries ``0..N_m-1`` of each
half are module bottom-left corners, entries ``N_m..N-1`` are I/O pin
positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

SIDES = ("L", "R", "B", "T")

Placement = np.ndarray


class InstanceError(ValueError):
    """Raised when an instance violates a structural invariant."""


@dataclass(frozen=True)
class DieRegion:
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InstanceError(f"die must have positive extent, got {self.width}x{self.height}")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)


@dataclass(frozen=True)
class ModuleSpec:
    name: str
    width: float
    height: float

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class IoPinSpec:
    """An I/O pin on the die boundary.

    ``fixed`` pins sit at ``(x, y)`` forever.  Boundary-assigned pins carry a
    ``side`` and may slide along it in I/O-assignment mode; their optional
    ``(x, y)`` is the starting point, otherwise the side midpoint is used.
    """

    name: str
    fixed: bool
    side: Optional[str] = None
    x: Optional[float] = None
    y: Optional[float] = None


@dataclass(frozen=True)
class PinSpec:
    """A net terminal.  ``owner`` indexes ``modules`` or ``io_pins`` per ``on_module``."""

    name: str
    on_module: bool
    owner: int
    dx: float = 0.0
    dy: float = 0.0


@dataclass(frozen=True)
class Net:
    name: str
    pins: tuple[int, ...]
    weight: float = 1.0


class HpwlReport(NamedTuple):
    total: float
    per_net: list[tuple[str, float]]


class Violation(NamedTuple):
    kind: str  # "Bx", "By", "O" or "D"
    index: tuple[int, ...]
    magnitude: float


def side_segment(side: str, die: DieRegion) -> tuple[int, float, float, float]:
    """Return (fixed axis, fixed value, free lo, free hi) of a die side."""
    if side == "L":
        return 0, 0.0, 0.0, die.height
    if side == "R":
        return 0, die.width, 0.0, die.height
    if side == "B":
        return 1, 0.0, 0.0, die.width
    if side == "T":
        return 1, die.height, 0.0, die.width
    raise InstanceError(f"unknown side {side!r}")


def side_midpoint(side: str, die: DieRegion) -> tuple[float, float]:
    axis, value, lo, hi = side_segment(side, die)
    mid = 0.5 * (lo + hi)
    return (value, mid) if axis == 0 else (mid, value)


@dataclass(frozen=True)
class Instance:
    die: DieRegion
    modules: tuple[ModuleSpec, ...]
    io_pins: tuple[IoPinSpec, ...] = ()
    pins: tuple[PinSpec, ...] = ()
    nets: tuple[Net, ...] = ()
    name: str = "instance"

    def __post_init__(self):
        object.__setattr__(self, "modules", tuple(self.modules))
        object.__setattr__(self, "io_pins", tuple(self.io_pins))
        object.__setattr__(self, "pins", tuple(self.pins))
        object.__setattr__(self, "nets", tuple(self.nets))
        self.validate()

    def validate(self) -> None:
        W, H = self.die.width, self.die.height
        for label, items in (("module", self.modules), ("I/O pin", self.io_pins),
                             ("pin", self.pins), ("net", self.nets)):
            seen = set()
            for item in items:
                if item.name in seen:
                    raise InstanceError(f"duplicate {label} id {item.name!r}")
                seen.add(item.name)
        for m in self.modules:
            if not (0 < m.width <= W and 0 < m.height <= H):
                raise InstanceError(
                    f"module {m.name!r} ({m.width}x{m.height}) does not fit the "
                    f"{W}x{H} die: need 0 <= x <= W - w and 0 <= y <= H - h"
                )
        for io in self.io_pins:
            if io.fixed:
                if io.x is None or io.y is None:
                    raise InstanceError(f"fixed I/O pin {io.name!r} needs coordinates")
                if not (0 <= io.x <= W and 0 <= io.y <= H):
                    raise InstanceError(f"fixed I/O pin {io.name!r} lies outside the die")
            else:
                if io.side not in SIDES:
                    raise InstanceError(f"I/O pin {io.name!r} needs a side in {SIDES}")
                if (io.x is None) != (io.y is None):
                    raise InstanceError(f"I/O pin {io.name!r} has only one coordinate")
                if io.x is not None:
                    axis, value, lo, hi = side_segment(io.side, self.die)
                    fixed, free = (io.x, io.y) if axis == 0 else (io.y, io.x)
                    if fixed != value or not lo <= free <= hi:
                        raise InstanceError(f"I/O pin {io.name!r} is not on side {io.side}")
        for p in self.pins:
            if p.on_module:
                if not 0 <= p.owner < len(self.modules):
                    raise InstanceError(f"pin {p.name!r} references a missing module")
                m = self.modules[p.owner]
                if not (0 <= p.dx <= m.width and 0 <= p.dy <= m.height):
                    raise InstanceError(f"pin {p.name!r} offset lies outside module {m.name!r}")
            else:
                if not 0 <= p.owner < len(self.io_pins):
                    raise InstanceError(f"pin {p.name!r} references a missing I/O pin")
                if p.dx != 0 or p.dy != 0:
                    raise InstanceError(f"I/O pin terminal {p.name!r} cannot have an offset")
        for net in self.nets:
            if len(net.pins) < 2:
                raise InstanceError(f"net {net.name!r} has fewer than 2 pins")
            if len(set(net.pins)) != len(net.pins):
                raise InstanceError(f"net {net.name!r} lists a pin twice")
            if any(not 0 <= p < len(self.pins) for p in net.pins):
                raise InstanceError(f"net {net.name!r} references a missing pin")
            if not net.weight >= 0:
                raise InstanceError(f"net {net.name!r} has a negative weight")

    # -- sizes -------------------------------------------------------------

    @property
    def n_modules(self) -> int:
        return len(self.modules)

    @property
    def n_io(self) -> int:
        return len(self.io_pins)

    @property
    def n(self) -> int:
        return len(self.modules) + len(self.io_pins)

    @cached_property
    def widths(self) -> np.ndarray:
        return np.array([m.width for m in self.modules], dtype=float)

    @cached_property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.modules], dtype=float)

    @cached_property
    def total_module_area(self) -> float:
        return float(np.sum(self.widths * self.heights))

    @cached_property
    def movable_io(self) -> np.ndarray:
        """Indices (into io_pins) of boundary-assigned pins."""
        return np.array([k for k, io in enumerate(self.io_pins) if not io.fixed], dtype=int)

    # -- pin tables --------------------------------------------------------

    @cached_property
    def _pin_table(self):
        # Fixed I/O pins map to the sentinel entity N, whose coordinate is 0,
        # so their offset carries the absolute position.
        N, Nm = self.n, self.n_modules
        ent = np.empty(len(self.pins), dtype=int)
        dx = np.empty(len(self.pins))
        dy = np.empty(len(self.pins))
        for k, p in enumerate(self.pins):
            if p.on_module:
                ent[k], dx[k], dy[k] = p.owner, p.dx, p.dy
            else:
                io = self.io_pins[p.owner]
                if io.fixed:
                    ent[k], dx[k], dy[k] = N, io.x, io.y
                else:
                    ent[k], dx[k], dy[k] = Nm + p.owner, 0.0, 0.0
        return ent, dx, dy

    @cached_property
    def _net_table(self):
        members = [sorted(net.pins) for net in self.nets]
        sizes = np.array([len(m) for m in members], dtype=int)
        ptr = np.zeros(len(members) + 1, dtype=int)
        np.cumsum(sizes, out=ptr[1:])
        flat = np.array([p for m in members for p in m], dtype=int)
        weights = np.array([net.weight for net in self.nets], dtype=float)
        return ptr, flat, weights

    def initial_io_positions(self) -> np.ndarray:
        """(N_io, 2) array: fixed coordinates, given starts, or side midpoints."""
        out = np.zeros((self.n_io, 2))
        for k, io in enumerate(self.io_pins):
            if io.x is not None:
                out[k] = io.x, io.y
            else:
                out[k] = side_midpoint(io.side, self.die)
        return out

    def module_index(self, name: str) -> int:
        for k, m in enumerate(self.modules):
            if m.name == name:
                return k
        raise KeyError(name)


# -- placement helpers -------------------------------------------------------


def make_placement(instance: Instance, module_xy, io_xy=None) -> Placement:
    """Stack module corners and I/O positions into the 2N coordinate vector."""
    module_xy = np.asarray(module_xy, dtype=float).reshape(instance.n_modules, 2)
    if io_xy is None:
        io_xy = instance.initial_io_positions()
    io_xy = np.asarray(io_xy, dtype=float).reshape(instance.n_io, 2)
    xy = np.vstack([module_xy, io_xy])
    return np.concatenate([xy[:, 0], xy[:, 1]])


def module_xy(instance: Instance, z: Placement) -> np.ndarray:
    N, Nm = instance.n, instance.n_modules
    return np.column_stack([z[:Nm], z[N:N + Nm]])


def check_placement(instance: Instance, z: Placement) -> None:
    if z.shape != (2 * instance.n,):
        raise ValueError(f"placement must have length {2 * instance.n}, got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("placement has non-finite entries")


def pin_positions(instance: Instance, z: Placement) -> tuple[np.ndarray, np.ndarray]:
    """Absolute (x, y) of every pin, vectorised."""
    N = instance.n
    ent, dx, dy = instance._pin_table
    xs = np.append(z[:N], 0.0)
    ys = np.append(z[N:], 0.0)
    return xs[ent] + dx, ys[ent] + dy


def pin_position(instance: Instance, z: Placement, pin: int) -> tuple[float, float]:
    if not 0 <= pin < len(instance.pins):
        raise KeyError(f"unknown pin {pin}")
    p = instance.pins[pin]
    N = instance.n
    if p.on_module:
        return float(z[p.owner] + p.dx), float(z[N + p.owner] + p.dy)
    io = instance.io_pins[p.owner]
    if io.fixed:
        return float(io.x), float(io.y)
    k = instance.n_modules + p.owner
    return float(z[k]), float(z[N + k])


# -- wirelength ----------------------------------------------------------------


def _net_spans(instance: Instance, z: Placement):
    ptr, flat, _ = instance._net_table
    px, py = pin_positions(instance, z)
    px, py = px[flat], py[flat]
    starts = ptr[:-1]
    return (px, py, starts,
            np.maximum.reduceat(px, starts), np.minimum.reduceat(px, starts),
            np.maximum.reduceat(py, starts), np.minimum.reduceat(py, starts))


def hpwl_total(instance: Instance, z: Placement) -> float:
    if not instance.nets:
        return 0.0
    _, _, _, xmax, xmin, ymax, ymin = _net_spans(instance, z)
    w = instance._net_table[2]
    return float(np.dot(w, (xmax - xmin) + (ymax - ymin)))


def hpwl(instance: Instance, z: Placement) -> HpwlReport:
    """Weighted half-perimeter wirelength with per-net spans."""
    if not instance.nets:
        return HpwlReport(0.0, [])
    _, _, _, xmax, xmin, ymax, ymin = _net_spans(instance, z)
    spans = (xmax - xmin) + (ymax - ymin)
    w = instance._net_table[2]
    per_net = [(net.name, float(s)) for net, s in zip(instance.nets, spans)]
    return HpwlReport(float(np.dot(w, spans)), per_net)


def _first_hit(values, target, seg, starts):
    # position (within the flattened net table) of the first pin attaining target
    idx = np.where(values == target[seg], np.arange(len(values)), len(values))
    return np.minimum.reduceat(idx, starts)


def hpwl_subgradient(instance: Instance, z: Placement) -> np.ndarray:
    """A subgradient of HPWL with respect to the 2N coordinate vector.

    Per net and axis, the lowest-id pin attaining the maximum receives
    ``+weight`` and the lowest-id pin attaining the minimum ``-weight``.
    Entries of fixed I/O pins are always zero.
    """
    N = instance.n
    g = np.zeros(2 * N)
    if not instance.nets:
        return g
    ptr, flat, w = instance._net_table
    ent = instance._pin_table[0][flat]
    px, py, starts, xmax, xmin, ymax, ymin = _net_spans(instance, z)
    seg = np.repeat(np.arange(len(w)), np.diff(ptr))
    for vals, hi, lo, offset in ((px, xmax, xmin, 0), (py, ymax, ymin, N)):
        e_hi = ent[_first_hit(vals, hi, seg, starts)]
        e_lo = ent[_first_hit(vals, lo, seg, starts)]
        acc = np.bincount(e_hi, weights=w, minlength=N + 1) - np.bincount(e_lo, weights=w, minlength=N + 1)
        g[offset:offset + N] = acc[:N]
    return g


# -- legality ------------------------------------------------------------------


def pairwise_overlap_area(instance: Instance, z: Placement) -> np.ndarray:
    """(N_m, N_m) matrix of pairwise intersection areas, zero diagonal."""
    N, Nm = instance.n, instance.n_modules
    x, y = z[:Nm], z[N:N + Nm]
    w, h = instance.widths, instance.heights
    ox = np.minimum.outer(x + w, x + w) - np.maximum.outer(x, x)
    oy = np.minimum.outer(y + h, y + h) - np.maximum.outer(y, y)
    area = np.clip(ox, 0, None) * np.clip(oy, 0, None)
    np.fill_diagonal(area, 0.0)
    return area


def relative_overlap_area(instance: Instance, z: Placement) -> float:
    """Total pairwise overlap area over total module area."""
    total = instance.total_module_area
    if total <= 0:
        raise ValueError("instance has no module area")
    if instance.n_modules < 2:
        return 0.0
    return float(np.sum(np.triu(pairwise_overlap_area(instance, z), 1)) / total)


def check_feasible(instance: Instance, z: Placement, tol: float = 0.0) -> tuple[bool, list[Violation]]:
    """Check boundary, pairwise non-overlap and I/O side membership within ``tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    N, Nm = instance.n, instance.n_modules
    W, H = instance.die.width, instance.die.height
    violations: list[Violation] = []
    for i, m in enumerate(instance.modules):
        for kind, c, hi in (("Bx", z[i], W - m.width), ("By", z[N + i], H - m.height)):
            excess = max(0.0 - c, c - hi, 0.0)
            if excess > tol:
                violations.append(Violation(kind, (i,), float(excess)))
    x, y = z[:Nm], z[N:N + Nm]
    w, h = instance.widths, instance.heights
    for i in range(Nm):
        for j in range(i + 1, Nm):
            ox = min(x[i] + w[i], x[j] + w[j]) - max(x[i], x[j])
            oy = min(y[i] + h[i], y[j] + h[j]) - max(y[i], y[j])
            depth = min(ox, oy)
            if depth > tol:
                violations.append(Violation("O", (i, j), float(depth)))
    for k in instance.movable_io:
        axis, value, lo, hi = side_segment(instance.io_pins[k].side, instance.die)
        e = Nm + k
        fixed = z[e] if axis == 0 else z[N + e]
        free = z[N + e] if axis == 0 else z[e]
        excess = max(abs(fixed - value), lo - free, free - hi, 0.0)
        if excess > tol:
            violations.append(Violation("D", (int(k),), float(excess)))
    return not violations, violations
