"""SVG rendering of a placement."""
from __future__ import annotations

from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .model import Instance, Placement

MODULE_FILL = "#9ecae1"
OVERLAP_FILL = "#de2d26"


def _f(v) -> str:
    return repr(float(v))


def overlap_rectangles(instance: Instance, placement: Placement) -> list[tuple[int, int, float, float, float, float]]:
    """Intersections ``(i, j, x, y, w, h)`` of positive area, one per overlapping pair."""
    z = np.asarray(placement, dtype=float)
    N, Nm = instance.n, instance.n_modules
    x0, y0 = z[:Nm], z[N:N + Nm]
    x1, y1 = x0 + instance.widths, y0 + instance.heights
    out = []
    for i in range(Nm):
        for j in range(i + 1, Nm):
            lx, ly = max(x0[i], x0[j]), max(y0[i], y0[j])
            hx, hy = min(x1[i], x1[j]), min(y1[i], y1[j])
            if hx > lx and hy > ly:
                out.append((i, j, lx, ly, hx - lx, hy - ly))
    return out


def render_svg(instance: Instance, placement: Placement) -> str:
    """Die outline, labelled modules, I/O pins as boundary ticks and overlap highlights.

    The viewBox equals the die; the y axis is flipped so the origin is the
    lower-left corner.
    """
    z = np.asarray(placement, dtype=float)
    W, H = instance.die.width, instance.die.height
    N, Nm = instance.n, instance.n_modules
    stroke = 0.002 * max(W, H)
    font = 0.03 * min(W, H)
    tick = 0.015 * max(W, H)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {W:g} {H:g}">',
        f'<g transform="matrix(1 0 0 -1 0 {H:g})">',
        f'<rect class="die" x="0" y="0" width="{W:g}" height="{H:g}" fill="none" '
        f'stroke="black" stroke-width="{2 * stroke:g}"/>',
    ]
    for i, m in enumerate(instance.modules):
        lines.append(
            f'<rect class="module" id={quoteattr("module-" + m.name)} x="{_f(z[i])}" y="{_f(z[N + i])}" '
            f'width="{_f(m.width)}" height="{_f(m.height)}" fill="{MODULE_FILL}" fill-opacity="0.7" '
            f'stroke="#08519c" stroke-width="{stroke:g}"/>'
        )
    for i, j, x, y, w, h in overlap_rectangles(instance, z):
        lines.append(
            f'<rect class="overlap" data-pair="{i} {j}" x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
            f'fill="{OVERLAP_FILL}" fill-opacity="0.6"/>'
        )
    for k, io in enumerate(instance.io_pins):
        px, py = z[Nm + k], z[N + Nm + k]
        if io.fixed:
            px, py = io.x, io.y
        # tick perpendicular to the nearest side
        gaps = [px, W - px, py, H - py]
        side = int(np.argmin(gaps))
        if side < 2:
            x2, y2 = px + (tick if side == 0 else -tick), py
        else:
            x2, y2 = px, py + (tick if side == 2 else -tick)
        lines.append(
            f'<line class="io" id={quoteattr("io-" + io.name)} x1="{_f(px)}" y1="{_f(py)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="#31a354" stroke-width="{2 * stroke:g}"/>'
        )
    lines.append("</g>")
    # labels are drawn unflipped so the text reads upright
    for i, m in enumerate(instance.modules):
        cx, cy = z[i] + 0.5 * m.width, H - (z[N + i] + 0.5 * m.height)
        lines.append(
            f'<text class="label" x="{_f(cx)}" y="{_f(cy)}" font-size="{font:g}" text-anchor="middle" '
            f'dominant-baseline="middle">{escape(m.name)}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"

