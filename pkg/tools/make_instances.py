"""Regenerate the packaged instances in src/fsfloorplan/data.

    python tools/make_instances.py [--out DIR]

Families
  tile*   k x k equal squares exactly filling a k x k die.
  stall*  guillotine cuts of the die shrunk to 85% utilization; kept only if
          plain alternating projections stall above 0.5% overlap.
  wl*     equal squares on a slot grid with spare slots; the reference HPWL
          is the minimum over every assignment of modules to slots.
  io*     guillotine modules at about 60% utilization plus 24 boundary pins,
          each wired to one module.
"""
from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from fsfloorplan.driver import SolverConfig, per_rmap_solve
from fsfloorplan.formats import write_instance
from fsfloorplan.initialization import initialize
from fsfloorplan.model import DieRegion, Instance, IoPinSpec, ModuleSpec, Net, PinSpec

UNIT = 1000.0
DIE = 10000.0


def slicing(rng, W, H, n):
    """Split the largest rectangle in two until there are ``n`` pieces."""
    rects = [(0.0, 0.0, W, H)]
    while len(rects) < n:
        k = max(range(len(rects)), key=lambda a: rects[a][2] * rects[a][3])
        x, y, w, h = rects.pop(k)
        f = rng.uniform(0.35, 0.65)
        if w >= h:
            rects += [(x, y, w * f, h), (x + w * f, y, w * (1 - f), h)]
        else:
            rects += [(x, y, w, h * f), (x, y + h * f, w, h * (1 - f))]
    return rects


def center_pins(mods):
    return [PinSpec(f"{m.name}.c", True, k, m.width / 2, m.height / 2) for k, m in enumerate(mods)]


def random_nets(rng, n_pins, count, lo=2, hi=4):
    nets = []
    for e in range(count):
        k = int(rng.integers(lo, hi + 1))
        members = sorted(int(a) for a in rng.choice(n_pins, size=k, replace=False))
        nets.append(Net(f"n{e}", tuple(members)))
    return nets


def fixed_side_pins(rng, W, H):
    pts = [(0.0, H * rng.uniform()), (W, H * rng.uniform()), (W * rng.uniform(), 0.0), (W * rng.uniform(), H)]
    return [IoPinSpec(f"t{k}", True, None, round(x, 1), round(y, 1)) for k, (x, y) in enumerate(pts)]


def tiling(k, seed=0):
    rng = np.random.default_rng(seed)
    mods = [ModuleSpec(f"m{a}", UNIT, UNIT) for a in range(k * k)]
    D = k * UNIT
    ios = [IoPinSpec("t0", True, None, 0.0, D / 2), IoPinSpec("t1", True, None, D, D / 3),
           IoPinSpec("t2", True, None, D / 4, 0.0), IoPinSpec("t3", True, None, 3 * D / 4, D)]
    pins = center_pins(mods) + [PinSpec(f"{io.name}.p", False, a) for a, io in enumerate(ios)]
    nets = random_nets(rng, len(pins), 2 * k * k, 2, 3)
    return Instance(DieRegion(D, D), mods, ios, pins, nets, name=f"tile{k}x{k}")


def slicing_instance(seed, n, util, name):
    rng = np.random.default_rng(seed)
    s = math.sqrt(util)
    mods = [ModuleSpec(f"m{k}", round(r[2] * s, 1), round(r[3] * s, 1))
            for k, r in enumerate(slicing(rng, DIE, DIE, n))]
    ios = fixed_side_pins(rng, DIE, DIE)
    pins = center_pins(mods) + [PinSpec(f"{io.name}.p", False, a) for a, io in enumerate(ios)]
    return Instance(DieRegion(DIE, DIE), mods, ios, pins, random_nets(rng, len(pins), 2 * n), name=name)


def map_stalls(inst, threshold=0.005):
    cfg = SolverConfig.for_mode("basic", superiorize=False, sweep="map", max_iter=2000)
    res = per_rmap_solve(inst, initialize(inst), cfg, timings=False)
    return res.stalled and res.overlap > threshold


def stall_family(count=5):
    out, seed = [], 0
    while len(out) < count:
        n = 6 + seed % 7
        inst = slicing_instance(seed, n, 0.85, f"stall{len(out) + 1}")
        if map_stalls(inst):
            out.append(inst)
        seed += 1
    return out


# -- wirelength family -----------------------------------------------------

WL_SHAPES = [(6, 3, 3), (7, 3, 3), (8, 3, 3), (9, 4, 3), (10, 4, 3)]


def slot_instance(seed, n, cols, rows, name):
    rng = np.random.default_rng(seed)
    W, H = cols * UNIT, rows * UNIT
    mods = [ModuleSpec(f"m{k}", UNIT, UNIT) for k in range(n)]
    ios = fixed_side_pins(rng, W, H)
    pins = center_pins(mods) + [PinSpec(f"{io.name}.p", False, a) for a, io in enumerate(ios)]
    return Instance(DieRegion(W, H), mods, ios, pins, random_nets(rng, len(pins), 2 * n), name=name)


def grid_optimal_hpwl(inst: Instance, cols: int, rows: int):
    """Exact minimum HPWL over injective module-to-slot assignments.

    Depth-first branch and bound: the partial bounding boxes of the nets only
    grow as modules are assigned, so their spans are a valid lower bound.
    Every module pin is a module centre.
    """
    n = inst.n_modules
    slots = [((c + 0.5) * UNIT, (r + 0.5) * UNIT) for r in range(rows) for c in range(cols)]
    fixed = {}
    pin_mod = {}
    for p, spec in enumerate(inst.pins):
        if spec.on_module:
            pin_mod[p] = spec.owner
        else:
            io = inst.io_pins[spec.owner]
            fixed[p] = (io.x, io.y)
    net_mods = []
    base_box = []
    for net in inst.nets:
        mods = sorted({pin_mod[p] for p in net.pins if p in pin_mod})
        pts = [fixed[p] for p in net.pins if p in fixed]
        box = (min(x for x, _ in pts), max(x for x, _ in pts), min(y for _, y in pts), max(y for _, y in pts)) \
            if pts else (math.inf, -math.inf, math.inf, -math.inf)
        net_mods.append(mods)
        base_box.append(box)
    order = sorted(range(n), key=lambda m: -sum(m in ms for ms in net_mods))
    nets_of = {m: [e for e, ms in enumerate(net_mods) if m in ms] for m in range(n)}

    def span(b):
        return 0.0 if b[0] == math.inf else (b[1] - b[0]) + (b[3] - b[2])

    boxes = list(base_box)
    best = [math.inf, None]
    assign = [None] * n
    used = [False] * len(slots)

    def rec(depth, cost):
        if cost >= best[0] - 1e-9:
            return
        if depth == n:
            best[0], best[1] = cost, list(assign)
            return
        m = order[depth]
        for s, (sx, sy) in enumerate(slots):
            if used[s]:
                continue
            saved = [(e, boxes[e]) for e in nets_of[m]]
            new_cost = cost
            for e, b in saved:
                nb = (min(b[0], sx), max(b[1], sx), min(b[2], sy), max(b[3], sy))
                new_cost += span(nb) - span(b)
                boxes[e] = nb
            used[s] = True
            assign[m] = s
            rec(depth + 1, new_cost)
            used[s] = False
            for e, b in saved:
                boxes[e] = b
        assign[m] = None

    rec(0, sum(span(b) for b in base_box))
    return best[0], best[1]


# -- I/O family ------------------------------------------------------------

def io_instance(seed, n, name, n_io=24):
    """I/O-heavy instance: every boundary pin drives one module, plus ``n`` module nets."""
    rng = np.random.default_rng(1000 + seed)
    s = math.sqrt(0.6)
    mods = [ModuleSpec(f"m{k}", round(r[2] * s, 1), round(r[3] * s, 1))
            for k, r in enumerate(slicing(rng, DIE, DIE, n))]
    sides = ["L", "R", "B", "T"]
    ios = [IoPinSpec(f"b{k}", False, sides[k % 4]) for k in range(n_io)]
    pins = center_pins(mods) + [PinSpec(f"{io.name}.p", False, a) for a, io in enumerate(ios)]
    nets = [Net(f"io{k}", (n + k, int(rng.integers(n)))) for k in range(n_io)]
    nets += [Net(f"n{e}", net.pins) for e, net in enumerate(random_nets(rng, n, n))]
    return Instance(DieRegion(DIE, DIE), mods, ios, pins, nets, name=name)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src" / "fsfloorplan" / "data"))
    args = ap.parse_args()
    out = Path(args.out)
    insts = [tiling(k) for k in (2, 3, 4)]
    insts += stall_family()
    reference = {}
    for k, (n, cols, rows) in enumerate(WL_SHAPES, start=1):
        inst = slot_instance(k, n, cols, rows, f"wl{k}")
        opt, assign = grid_optimal_hpwl(inst, cols, rows)
        reference[inst.name] = {"grid_optimal_hpwl": opt, "slots": [cols, rows], "assignment": assign}
        print(inst.name, n, "modules, grid-optimal HPWL", opt)
        insts.append(inst)
    insts += [io_instance(k, 6 + k % 3, f"io{k}") for k in range(1, 6)]
    for inst in insts:
        (out / f"{inst.name}.yaml").write_text(write_instance(inst), encoding="utf-8")
    (out / "reference.json").write_text(json.dumps(reference, indent=1) + "\n", encoding="utf-8")
    print("wrote", len(insts), "instances to", out)


if __name__ == "__main__":
    main()
