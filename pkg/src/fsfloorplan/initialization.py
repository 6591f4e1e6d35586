"""Quadratic-wirelength starting placement followed by key-module shifting."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import sparse

from .model import Instance, Placement, make_placement


class Terminal(NamedTuple):
    """An edge endpoint: a movable node (module or star) or a fixed point.

    ``node`` is the unknown's index (modules first, then star nodes) or -1 for
    a fixed terminal, in which case ``dx, dy`` hold its absolute coordinates.
    """

    node: int
    dx: float
    dy: float


@dataclass
class NetDecomposition:
    edges: list[tuple[Terminal, Terminal, float]]
    n_star: int = 0


@dataclass
class QpSystem:
    """Per-axis normal equations ``A u = b`` over modules and star nodes."""

    A: sparse.csr_matrix
    bx: np.ndarray
    by: np.ndarray
    anchored: list[int] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.A.shape[0]


class PcgResult(NamedTuple):
    x: np.ndarray
    iterations: int
    converged: bool
    residual: float


def _terminal(instance: Instance, pin: int, io_xy: np.ndarray) -> Terminal:
    p = instance.pins[pin]
    if p.on_module:
        return Terminal(p.owner, p.dx, p.dy)
    x, y = io_xy[p.owner]
    return Terminal(-1, float(x), float(y))


def hybrid_net_decompose(instance: Instance, io_xy: Optional[np.ndarray] = None) -> NetDecomposition:
    """Clique edges for nets of up to 3 pins, a star node for larger nets.

    A k-pin clique edge weighs ``w/(k-1)``; each of the k star edges weighs
    ``w*k/(k-1)``, where ``w`` is the net weight.  I/O pins are fixed
    terminals at ``io_xy`` (default: instance starting positions).
    """
    if io_xy is None:
        io_xy = instance.initial_io_positions()
    edges = []
    n_star = 0
    for net in instance.nets:
        k = len(net.pins)
        terms = [_terminal(instance, p, io_xy) for p in net.pins]
        if k <= 3:
            w = net.weight / (k - 1)
            for a in range(k):
                for b in range(a + 1, k):
                    edges.append((terms[a], terms[b], w))
        else:
            star = Terminal(instance.n_modules + n_star, 0.0, 0.0)
            n_star += 1
            w = net.weight * k / (k - 1)
            edges.extend((t, star, w) for t in terms)
    return NetDecomposition(edges, n_star)


def _components(n: int, pairs) -> np.ndarray:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return np.array([find(a) for a in range(n)])


def build_quadratic_system(instance: Instance, decomposition: NetDecomposition) -> QpSystem:
    """Assemble the weighted quadratic wirelength ``sum w (u_a - u_b)^2`` per axis.

    Components with no fixed terminal get one anchor edge (weight 1) pulling
    their lowest-index node's centre to the die centre.
    """
    n = instance.n_modules + decomposition.n_star
    rows, cols, vals = [], [], []
    bx, by = np.zeros(n), np.zeros(n)
    links, fixed_nodes = [], set()

    def diag(a, w):
        rows.append(a); cols.append(a); vals.append(w)

    for s, t, w in decomposition.edges:
        if s.node < 0 and t.node < 0:
            continue
        if s.node < 0:
            s, t = t, s
        if t.node < 0:
            # fixed terminal: w (u_s + d_s - c)^2
            diag(s.node, w)
            bx[s.node] += w * (t.dx - s.dx)
            by[s.node] += w * (t.dy - s.dy)
            fixed_nodes.add(s.node)
            continue
        if s.node == t.node:
            continue
        a, b = s.node, t.node
        diag(a, w); diag(b, w)
        rows += [a, b]; cols += [b, a]; vals += [-w, -w]
        bx[a] += w * (t.dx - s.dx); bx[b] += w * (s.dx - t.dx)
        by[a] += w * (t.dy - s.dy); by[b] += w * (s.dy - t.dy)
        links.append((a, b))

    comp = _components(n, links)
    anchored_roots = {comp[a] for a in fixed_nodes}
    anchored = []
    cx, cy = 0.5 * instance.die.width, 0.5 * instance.die.height
    for root in sorted(set(comp.tolist()) - anchored_roots):
        a = int(root)
        hw = 0.5 * instance.modules[a].width if a < instance.n_modules else 0.0
        hh = 0.5 * instance.modules[a].height if a < instance.n_modules else 0.0
        diag(a, 1.0)
        bx[a] += cx - hw
        by[a] += cy - hh
        anchored.append(a)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.sum_duplicates()
    return QpSystem(A, bx, by, anchored)


def pcg_solve(A, b, tol: float = 1e-8, max_iter: Optional[int] = None, x0=None) -> PcgResult:
    """Jacobi-preconditioned conjugate gradients for a symmetric positive definite ``A``."""
    b = np.asarray(b, dtype=float)
    n = b.size
    if max_iter is None:
        max_iter = max(10 * n, 100)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    d = np.asarray(A.diagonal(), dtype=float)
    inv_d = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 1.0)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return PcgResult(np.zeros(n), 0, True, 0.0)
    r = b - A @ x
    res = float(np.linalg.norm(r)) / bnorm
    best, best_res = x.copy(), res
    if res <= tol:
        return PcgResult(x, 0, True, res)
    zr = inv_d * r
    p = zr.copy()
    rz = float(r @ zr)
    for it in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        res = float(np.linalg.norm(r)) / bnorm
        if res < best_res:
            best, best_res = x.copy(), res
        if res <= tol:
            return PcgResult(x, it, True, res)
        zr = inv_d * r
        rz_new = float(r @ zr)
        p = zr + (rz_new / rz) * p
        rz = rz_new
    return PcgResult(best, max_iter, False, best_res)


def shift_key_modules(instance: Instance, z: Placement, area_quantile: float = 0.2) -> Placement:
    """Move modules with area strictly below the quantile onto the nearest die edge."""
    out = np.array(z, dtype=float)
    if instance.n_modules == 0 or area_quantile <= 0:
        return out
    N = instance.n
    W, H = instance.die.width, instance.die.height
    areas = instance.widths * instance.heights
    cut = np.quantile(areas, area_quantile)
    for i, m in enumerate(instance.modules):
        if not areas[i] < cut:
            continue
        x, y = out[i], out[N + i]
        gaps = [x, W - (x + m.width), y, H - (y + m.height)]  # L, R, B, T
        side = int(np.argmin(gaps))
        if side == 0:
            out[i] = 0.0
        elif side == 1:
            out[i] = W - m.width
        elif side == 2:
            out[N + i] = 0.0
        else:
            out[N + i] = H - m.height
    return out


def clamp_into_die(instance: Instance, z: Placement) -> Placement:
    out = np.array(z, dtype=float)
    N, Nm = instance.n, instance.n_modules
    out[:Nm] = np.clip(out[:Nm], 0.0, instance.die.width - instance.widths)
    out[N:N + Nm] = np.clip(out[N:N + Nm], 0.0, instance.die.height - instance.heights)
    return out


@dataclass
class InitInfo:
    pcg_iterations: tuple[int, int] = (0, 0)
    converged: bool = True
    anchored: list[int] = field(default_factory=list)


def initialize(instance: Instance, area_quantile: float = 0.2, tol: float = 1e-8,
               info: Optional[InitInfo] = None) -> Placement:
    """Wirelength-driven start: quadratic solve, clamp, then key-module shift.

    I/O pins sit at their given coordinates or side midpoints throughout.
    """
    io_xy = instance.initial_io_positions()
    dec = hybrid_net_decompose(instance, io_xy)
    sysm = build_quadratic_system(instance, dec)
    Nm = instance.n_modules
    if sysm.size:
        rx = pcg_solve(sysm.A, sysm.bx, tol=tol)
        ry = pcg_solve(sysm.A, sysm.by, tol=tol)
        xy = np.column_stack([rx.x[:Nm], ry.x[:Nm]])
        if info is not None:
            info.pcg_iterations = (rx.iterations, ry.iterations)
            info.converged = rx.converged and ry.converged
            info.anchored = sysm.anchored
    else:
        xy = np.zeros((0, 2))
    z = make_placement(instance, xy, io_xy)
    z = clamp_into_die(instance, z)
    return shift_key_modules(instance, z, area_quantile)
