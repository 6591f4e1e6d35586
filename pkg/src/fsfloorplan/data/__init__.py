"""Packaged benchmark instances.

Families: ``tile*`` exact tilings, ``stall*`` tight dies where plain
alternating projections stall, ``wl*`` small instances with a known
grid-optimal HPWL, ``io*`` instances with boundary-assigned I/O pins.
"""
from __future__ import annotations

import json
from importlib import resources

from ..formats import parse_instance
from ..model import Instance

FAMILIES = {
    "tile": ("tile2x2", "tile3x3", "tile4x4"),
    "stall": tuple(f"stall{k}" for k in range(1, 6)),
    "wl": tuple(f"wl{k}" for k in range(1, 6)),
    "io": tuple(f"io{k}" for k in range(1, 6)),
}


def names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir() if p.name.endswith(".yaml"))


def text(name: str) -> str:
    res = resources.files(__name__) / f"{name}.yaml"
    if not res.is_file():
        raise KeyError(f"no packaged instance named {name!r}; available: {', '.join(names())}")
    return res.read_text(encoding="utf-8")


def load(name: str) -> Instance:
    return parse_instance(text(name), default_name=name)


def family(key: str) -> list[Instance]:
    return [load(n) for n in FAMILIES[key]]


def reference() -> dict:
    """Offline reference values, e.g. ``reference()["wl1"]["grid_optimal_hpwl"]``."""
    return json.loads((resources.files(__name__) / "reference.json").read_text(encoding="utf-8"))
