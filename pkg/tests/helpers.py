import numpy as np

from fsfloorplan.model import DieRegion, Instance, IoPinSpec, ModuleSpec, Net, PinSpec


def instance(die, modules, io=(), pins=(), nets=()):
    """Compact builder.

    modules: [(w, h)], io: [(x, y)] fixed or ("L",) boundary, pins: [(owner, dx, dy)]
    where owner is ("m", k) or ("io", k), nets: [[pin indices]] or [([pins], weight)].
    """
    mods = [ModuleSpec(f"m{k}", w, h) for k, (w, h) in enumerate(modules)]
    ios = []
    for k, spec in enumerate(io):
        if isinstance(spec[0], str):
            ios.append(IoPinSpec(f"io{k}", False, spec[0], *spec[1:]))
        else:
            ios.append(IoPinSpec(f"io{k}", True, None, spec[0], spec[1]))
    ps = []
    for k, (owner, dx, dy) in enumerate(pins):
        ps.append(PinSpec(f"p{k}", owner[0] == "m", owner[1], dx, dy))
    ns = []
    for k, n in enumerate(nets):
        if isinstance(n, tuple):
            ns.append(Net(f"n{k}", tuple(n[0]), n[1]))
        else:
            ns.append(Net(f"n{k}", tuple(n)))
    return Instance(DieRegion(*die), mods, ios, ps, ns)


def random_instance(rng, n_modules=5, n_io=2, n_nets=6, die=(100.0, 100.0), movable_io=False):
    W, H = die
    modules = [(float(rng.uniform(5, 40)), float(rng.uniform(5, 40))) for _ in range(n_modules)]
    io = []
    for _ in range(n_io):
        if movable_io:
            io.append((str(rng.choice(["L", "R", "B", "T"])),))
        else:
            io.append((0.0, float(rng.uniform(0, H))))
    pins = []
    for k, (w, h) in enumerate(modules):
        for _ in range(2):
            pins.append((("m", k), float(rng.uniform(0, w)), float(rng.uniform(0, h))))
    for k in range(n_io):
        pins.append((("io", k), 0.0, 0.0))
    nets = []
    for _ in range(n_nets):
        size = int(rng.integers(2, 6))
        nets.append(sorted(rng.choice(len(pins), size=size, replace=False).tolist()))
    return instance(die, modules, io, pins, nets)


def random_placement(rng, inst, spread=1.0):
    W, H = inst.die.width, inst.die.height
    return np.concatenate([rng.uniform(-0.1 * W, spread * W, inst.n), rng.uniform(-0.1 * H, spread * H, inst.n)])


def random_cell_case(rng, allow_empty=False):
    """Two modules in a random die, a random (often violated) pair placement and one cell."""
    from fsfloorplan.projections import DIRECTIONS, make_cell

    while True:
        W, H = rng.uniform(2, 20, size=2)
        w = rng.uniform(0.1, 1.0, size=2) * W
        h = rng.uniform(0.1, 1.0, size=2) * H
        inst = instance((W, H), [(w[0], h[0]), (w[1], h[1])])
        cell = make_cell(inst, 0, 1, DIRECTIONS[rng.integers(4)])
        if allow_empty or not cell.empty:
            break
    z = np.concatenate([rng.uniform(-0.5 * W, 1.5 * W, 2), rng.uniform(-0.5 * H, 1.5 * H, 2)])
    # snap some coordinates onto bounds to exercise degenerate active sets
    for k in range(4):
        if rng.random() < 0.15:
            z[k] = 0.0
    return inst, z, cell


def oracle_cell_projection(z, cell, n):
    """Reference projection: 2-D on-axis QP plus independent 1-D clamps, all via qp_oracle."""
    from fsfloorplan.projections import cell_inequalities, qp_oracle

    out = np.array(z, dtype=float)
    on = 0 if cell.axis == 0 else n
    off = n if cell.axis == 0 else 0
    A, b = cell_inequalities(cell)
    f, s = on + cell.first, on + cell.second
    out[f], out[s] = qp_oracle([z[f], z[s]], A, b)
    off_hi = cell.y_hi if cell.axis == 0 else cell.x_hi
    for idx, hi in ((cell.i, off_hi[0]), (cell.j, off_hi[1])):
        out[off + idx] = qp_oracle([z[off + idx]], [[-1.0], [1.0]], [0.0, hi])[0]
    return out


def tie_free(inst, z, gap=1e-3):
    """True when no net has two pins within ``gap`` of its extreme coordinates."""
    from fsfloorplan.model import pin_positions

    px, py = pin_positions(inst, z)
    ptr, flat, _ = inst._net_table
    for k in range(len(ptr) - 1):
        for vals in (px[flat[ptr[k]:ptr[k + 1]]], py[flat[ptr[k]:ptr[k + 1]]]):
            s = np.sort(vals)
            if s[-1] - s[-2] < gap or s[1] - s[0] < gap:
                return False
    return True
