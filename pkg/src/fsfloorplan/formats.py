"""Instance and result file formats.

Instances are YAML documents::

    name: demo
    die: {width: 3000, height: 3000}
    modules:
      - {id: m0, width: 1000, height: 1000}
    io_pins:
      - {id: west, mode: fixed, x: 0, y: 1500}
      - {id: east, mode: boundary, side: R}        # optional x, y start point
    pins:
      - {id: m0.c, owner: m0, dx: 500, dy: 500}    # owner: module or I/O pin id
      - {id: west.p, owner: west}
    nets:
      - {id: n0, pins: [m0.c, west.p], weight: 1}   # weight optional

Results are JSON; floats are written with ``repr`` precision so a
write/read cycle reproduces every number exactly.
"""
from __future__ import annotations

import dataclasses
import json
import re
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .model import (
    SIDES,
    DieRegion,
    Instance,
    InstanceError,
    IoPinSpec,
    ModuleSpec,
    Net,
    PinSpec,
    side_segment,
)

RESULT_FORMAT = "fsfloorplan-result/1"


class FormatError(InstanceError):
    """A rejected input file.

    ``kind`` is one of ``syntax``, ``schema``, ``duplicate``, ``reference``,
    ``bounds``, ``net`` or ``invariant``.  ``line`` and ``column`` are 1-based
    when known.
    """

    def __init__(self, kind: str, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.kind = kind
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}{kind} error: {message}")


def _err(kind: str, message: str, node=None) -> FormatError:
    if node is None:
        return FormatError(kind, message)
    mark = node.start_mark
    return FormatError(kind, message, mark.line + 1, mark.column + 1)


# -- YAML node helpers -----------------------------------------------------

def _mapping(node, what: str, required=(), optional=()) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise _err("schema", f"{what} must be a mapping", node)
    out = {}
    for knode, vnode in node.value:
        key = knode.value
        if key in out:
            raise _err("duplicate", f"key {key!r} repeated in {what}", knode)
        if key not in required and key not in optional:
            raise _err("schema", f"unknown key {key!r} in {what}", knode)
        out[key] = vnode
    for key in required:
        if key not in out:
            raise _err("schema", f"{what} is missing {key!r}", node)
    return out


def _sequence(node, what: str) -> list:
    if isinstance(node, yaml.ScalarNode) and node.tag == "tag:yaml.org,2002:null":
        return []
    if not isinstance(node, yaml.SequenceNode):
        raise _err("schema", f"{what} must be a list", node)
    return list(node.value)


def _number(node, what: str) -> float:
    # plain scalars only: quoted strings, booleans and nulls are rejected
    if not isinstance(node, yaml.ScalarNode) or node.style is not None or node.tag in (
        "tag:yaml.org,2002:bool", "tag:yaml.org,2002:null"
    ):
        raise _err("schema", f"{what} must be a number", node)
    try:
        value = float(node.value)
    except ValueError:
        raise _err("schema", f"{what} must be a number", node) from None
    if not np.isfinite(value):
        raise _err("schema", f"{what} must be finite", node)
    return value


def _string(node, what: str) -> str:
    if not isinstance(node, yaml.ScalarNode) or node.tag not in (
        "tag:yaml.org,2002:str", "tag:yaml.org,2002:int"
    ):
        raise _err("schema", f"{what} must be a string", node)
    return node.value


# -- instance parsing ------------------------------------------------------

def parse_instance(text: str, default_name: str = "instance") -> Instance:
    """Parse and validate a YAML instance document.

    Raises :class:`FormatError` with the position of the offending node.
    """
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise FormatError("syntax", exc.problem or str(exc),
                          mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise FormatError("syntax", str(exc)) from None
    if root is None:
        raise FormatError("schema", "empty document")
    top = _mapping(root, "document", required=("die", "modules"),
                   optional=("name", "io_pins", "pins", "nets"))
    inst_name = _string(top["name"], "name") if "name" in top else default_name

    d = _mapping(top["die"], "die", required=("width", "height"))
    W, H = _number(d["width"], "die width"), _number(d["height"], "die height")
    for key, val in (("width", W), ("height", H)):
        if not val > 0:
            raise _err("bounds", f"die {key} must be positive", d[key])
    die = DieRegion(W, H)

    owners: dict[str, tuple[bool, int]] = {}

    def claim(ident: str, node, value):
        if ident in owners:
            raise _err("duplicate", f"id {ident!r} is already used by another module or I/O pin", node)
        owners[ident] = value

    modules = []
    for k, mnode in enumerate(_sequence(top["modules"], "modules")):
        m = _mapping(mnode, f"module #{k}", required=("id", "width", "height"))
        ident = _string(m["id"], "module id")
        w, h = _number(m["width"], "module width"), _number(m["height"], "module height")
        if not (w > 0 and h > 0):
            raise _err("bounds", f"module {ident!r} must have positive width and height", mnode)
        if w > W:
            raise _err("bounds", f"module {ident!r} width {w:g} exceeds die width {W:g}: "
                       f"0 <= x <= W - w = {W - w:g} has no solution", m["width"])
        if h > H:
            raise _err("bounds", f"module {ident!r} height {h:g} exceeds die height {H:g}: "
                       f"0 <= y <= H - h = {H - h:g} has no solution", m["height"])
        claim(ident, m["id"], (True, len(modules)))
        modules.append(ModuleSpec(ident, w, h))

    io_pins = []
    for k, inode in enumerate(_sequence(top.get("io_pins"), "io_pins") if "io_pins" in top else []):
        m = _mapping(inode, f"I/O pin #{k}", required=("id", "mode"), optional=("side", "x", "y"))
        ident = _string(m["id"], "I/O pin id")
        mode = _string(m["mode"], "I/O pin mode")
        x = _number(m["x"], "x") if "x" in m else None
        y = _number(m["y"], "y") if "y" in m else None
        if mode == "fixed":
            if x is None or y is None or "side" in m:
                raise _err("schema", f"fixed I/O pin {ident!r} needs x and y and no side", inode)
            if not (0 <= x <= W and 0 <= y <= H):
                raise _err("bounds", f"fixed I/O pin {ident!r} at ({x:g}, {y:g}) lies outside the die", inode)
            spec = IoPinSpec(ident, True, None, x, y)
        elif mode == "boundary":
            if "side" not in m:
                raise _err("schema", f"boundary I/O pin {ident!r} needs a side", inode)
            side = _string(m["side"], "side")
            if side not in SIDES:
                raise _err("schema", f"side must be one of {', '.join(SIDES)}", m["side"])
            if (x is None) != (y is None):
                raise _err("schema", f"I/O pin {ident!r} gives only one start coordinate", inode)
            if x is not None:
                axis, value, lo, hi = side_segment(side, die)
                fixed, free = (x, y) if axis == 0 else (y, x)
                if fixed != value or not lo <= free <= hi:
                    raise _err("bounds", f"start point of I/O pin {ident!r} is not on side {side}", inode)
            spec = IoPinSpec(ident, False, side, x, y)
        else:
            raise _err("schema", "mode must be 'fixed' or 'boundary'", m["mode"])
        claim(ident, m["id"], (False, len(io_pins)))
        io_pins.append(spec)

    pins = []
    pin_ids: dict[str, int] = {}
    for k, pnode in enumerate(_sequence(top["pins"], "pins") if "pins" in top else []):
        m = _mapping(pnode, f"pin #{k}", required=("id", "owner"), optional=("dx", "dy"))
        ident = _string(m["id"], "pin id")
        if ident in pin_ids:
            raise _err("duplicate", f"pin id {ident!r} repeated", m["id"])
        owner = _string(m["owner"], "pin owner")
        if owner not in owners:
            raise _err("reference", f"pin {ident!r} refers to unknown owner {owner!r}", m["owner"])
        on_module, idx = owners[owner]
        dx = _number(m["dx"], "dx") if "dx" in m else 0.0
        dy = _number(m["dy"], "dy") if "dy" in m else 0.0
        if on_module:
            mod = modules[idx]
            if not (0 <= dx <= mod.width and 0 <= dy <= mod.height):
                raise _err("bounds", f"pin {ident!r} offset ({dx:g}, {dy:g}) lies outside module "
                           f"{owner!r} ({mod.width:g}x{mod.height:g})", pnode)
        elif dx != 0 or dy != 0:
            raise _err("schema", f"pin {ident!r} on I/O pin {owner!r} cannot have an offset", pnode)
        pin_ids[ident] = len(pins)
        pins.append(PinSpec(ident, on_module, idx, dx, dy))

    nets = []
    net_ids = set()
    for k, nnode in enumerate(_sequence(top["nets"], "nets") if "nets" in top else []):
        m = _mapping(nnode, f"net #{k}", required=("id", "pins"), optional=("weight",))
        ident = _string(m["id"], "net id")
        if ident in net_ids:
            raise _err("duplicate", f"net id {ident!r} repeated", m["id"])
        net_ids.add(ident)
        members = []
        for pn in _sequence(m["pins"], f"pins of net {ident!r}"):
            pid = _string(pn, "pin id")
            if pid not in pin_ids:
                raise _err("reference", f"net {ident!r} refers to unknown pin {pid!r}", pn)
            if pin_ids[pid] in members:
                raise _err("net", f"net {ident!r} lists pin {pid!r} twice", pn)
            members.append(pin_ids[pid])
        if len(members) < 2:
            raise _err("net", f"net {ident!r} has {len(members)} pin(s); at least 2 are required", nnode)
        weight = _number(m["weight"], "weight") if "weight" in m else 1.0
        if weight < 0:
            raise _err("bounds", f"net {ident!r} has a negative weight", m["weight"])
        nets.append(Net(ident, tuple(members), weight))

    try:
        return Instance(die, modules, io_pins, pins, nets, name=inst_name)
    except InstanceError as exc:
        raise FormatError("invariant", str(exc)) from None


def load_instance(path) -> Instance:
    """Read an instance file; ``.yal`` files go through the YAL adapter."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stem = Path(path).stem
    if Path(path).suffix.lower() == ".yal":
        return parse_yal(text, name=stem)
    return parse_instance(text, default_name=stem)


def _num(v: float):
    f = float(v)
    return int(f) if f.is_integer() and abs(f) < 2**53 else f


def instance_to_dict(instance: Instance) -> dict:
    doc: dict[str, Any] = {
        "name": instance.name,
        "die": {"width": _num(instance.die.width), "height": _num(instance.die.height)},
        "modules": [{"id": m.name, "width": _num(m.width), "height": _num(m.height)} for m in instance.modules],
    }
    ios = []
    for io in instance.io_pins:
        if io.fixed:
            ios.append({"id": io.name, "mode": "fixed", "x": _num(io.x), "y": _num(io.y)})
        else:
            d = {"id": io.name, "mode": "boundary", "side": io.side}
            if io.x is not None:
                d.update(x=_num(io.x), y=_num(io.y))
            ios.append(d)
    doc["io_pins"] = ios
    pins = []
    for p in instance.pins:
        owner = instance.modules[p.owner].name if p.on_module else instance.io_pins[p.owner].name
        d = {"id": p.name, "owner": owner}
        if p.on_module:
            d.update(dx=_num(p.dx), dy=_num(p.dy))
        pins.append(d)
    doc["pins"] = pins
    nets = []
    for n in instance.nets:
        d = {"id": n.name, "pins": [instance.pins[k].name for k in n.pins]}
        if n.weight != 1.0:
            d["weight"] = _num(n.weight)
        nets.append(d)
    doc["nets"] = nets
    return doc


def write_instance(instance: Instance) -> str:
    return yaml.safe_dump(instance_to_dict(instance), sort_keys=False, default_flow_style=None, width=120)


# -- results ---------------------------------------------------------------

def result_to_dict(result, instance: Optional[Instance] = None, include_timings: bool = True) -> dict:
    z = np.asarray(result.placement, dtype=float)
    doc: dict[str, Any] = {"format": RESULT_FORMAT}
    if instance is not None:
        doc["instance"] = instance.name
        doc["n_modules"] = instance.n_modules
        doc["n_io"] = instance.n_io
    doc.update(
        seed=int(result.seed),
        config=result.config,
        hpwl=float(result.hpwl),
        overlap=float(result.overlap),
        feasible=bool(result.feasible),
        converged=bool(result.converged),
        post_converged=result.post_converged,
        stalled=bool(result.stalled),
        iterations=int(result.iterations),
        post_iterations=int(result.post_iterations),
        timings=dict(result.timings) if include_timings else {},
        placement=[float(v) for v in z],
        trace=[_record_dict(r, include_timings) for r in result.trace],
    )
    return doc


def _record_dict(rec, include_timings: bool) -> dict:
    d = dataclasses.asdict(rec)
    if not include_timings:
        d["sweep_time"] = 0.0
    return d


def write_result(result, instance: Optional[Instance] = None, include_timings: bool = True) -> str:
    """Serialize a solve result as JSON text.

    Wall-clock fields are zeroed when ``include_timings`` is False so that
    equal-seed runs produce byte-identical files.
    """
    return json.dumps(result_to_dict(result, instance, include_timings), indent=1) + "\n"


def read_result(text: str):
    """Inverse of :func:`write_result`; returns a ``SolveResult``."""
    from .driver import IterationRecord, SolveResult

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("syntax", exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict) or doc.get("format") != RESULT_FORMAT:
        raise FormatError("schema", f"not a {RESULT_FORMAT} document")
    try:
        trace = [IterationRecord(**r) for r in doc["trace"]]
        return SolveResult(
            placement=np.array(doc["placement"], dtype=float),
            hpwl=doc["hpwl"],
            overlap=doc["overlap"],
            iterations=doc["iterations"],
            trace=trace,
            config=doc["config"],
            seed=doc["seed"],
            feasible=doc["feasible"],
            converged=doc["converged"],
            post_iterations=doc["post_iterations"],
            timings=doc["timings"],
            stalled=doc["stalled"],
            post_converged=doc["post_converged"],
        )
    except (KeyError, TypeError) as exc:
        raise FormatError("schema", f"malformed result document ({exc})") from None


# -- YAL adapter -----------------------------------------------------------

def _yal_statements(text: str):
    text = re.sub(r"/\*.*?\*/", " ", text, flags=re.S)
    line = 1
    for raw in text.split(";"):
        tokens = raw.split()
        start = line + raw[: len(raw) - len(raw.lstrip())].count("\n")
        line += raw.count("\n")
        if tokens:
            yield start, tokens


def _bbox(coords: list[float]):
    xs, ys = coords[0::2], coords[1::2]
    return min(xs), min(ys), max(xs), max(ys)


def parse_yal(text: str, die: Optional[tuple[float, float]] = None, name: str = "yal",
              io_mode: str = "fixed") -> Instance:
    """Import the block-level subset of the YAL netlist format.

    Supported: ``MODULE``/``ENDMODULE`` with ``TYPE``, ``DIMENSIONS`` (the
    bounding box of the outline is used), ``IOLIST`` entries ``name type x y
    ...`` and a ``PARENT`` module whose ``IOLIST`` gives the die terminals and
    whose ``NETWORK`` lists ``instance module signal...``.  Module pin offsets
    are taken relative to the outline's lower-left corner.  Signals with
    fewer than two terminals are dropped.  ``die`` overrides the parent
    outline; terminals are then projected onto the die boundary.  With
    ``io_mode="boundary"`` every terminal becomes a boundary pin on its
    nearest side, starting at its given position.
    """
    modules: dict[str, dict] = {}
    cur = None
    section = None
    for line, tok in _yal_statements(text):
        head = tok[0].upper()
        if head == "MODULE":
            if len(tok) != 2:
                raise FormatError("syntax", "MODULE takes one name", line)
            cur = {"name": tok[1], "type": None, "dims": None, "io": [], "network": [], "line": line}
            modules[tok[1]] = cur
            section = None
        elif cur is None:
            raise FormatError("syntax", f"statement {tok[0]!r} outside a MODULE", line)
        elif head == "ENDMODULE":
            cur = None
        elif head == "TYPE":
            cur["type"] = tok[1].upper()
        elif head == "DIMENSIONS":
            try:
                coords = [float(t) for t in tok[1:]]
            except ValueError:
                raise FormatError("syntax", "DIMENSIONS needs numbers", line) from None
            if len(coords) < 4 or len(coords) % 2:
                raise FormatError("syntax", "DIMENSIONS needs x y pairs", line)
            cur["dims"] = _bbox(coords)
        elif head == "IOLIST":
            section = "io"
        elif head == "ENDIOLIST":
            section = None
        elif head == "NETWORK":
            section = "net"
        elif head == "ENDNETWORK":
            section = None
        elif section == "io":
            if len(tok) < 4:
                raise FormatError("syntax", f"I/O entry {tok[0]!r} needs name, type, x and y", line)
            try:
                x, y = float(tok[2]), float(tok[3])
            except ValueError:
                raise FormatError("syntax", f"I/O entry {tok[0]!r} has non-numeric position", line) from None
            cur["io"].append((tok[0], x, y, line))
        elif section == "net":
            if len(tok) < 2:
                raise FormatError("syntax", "NETWORK entry needs instance and module names", line)
            cur["network"].append((tok[0], tok[1], tok[2:], line))
        else:
            pass  # unsupported statements (CURRENT, VOLTAGE, PLACEMENT, ...) are ignored

    parents = [m for m in modules.values() if m["type"] == "PARENT"]
    if len(parents) != 1:
        raise FormatError("schema", f"expected exactly one PARENT module, found {len(parents)}")
    parent = parents[0]
    if die is None:
        if parent["dims"] is None:
            raise FormatError("schema", "PARENT module has no DIMENSIONS and no die was given", parent["line"])
        x0, y0, x1, y1 = parent["dims"]
    else:
        x0, y0, x1, y1 = 0.0, 0.0, float(die[0]), float(die[1])
    W, H = x1 - x0, y1 - y0
    die_region = DieRegion(W, H)

    mods, pins, io_specs = [], [], []
    signal_pins: dict[str, list[int]] = {}
    for tname, x, y, line in parent["io"]:
        px, py = min(max(x - x0, 0.0), W), min(max(y - y0, 0.0), H)
        gaps = {"L": px, "R": W - px, "B": py, "T": H - py}
        side = min(SIDES, key=lambda s: gaps[s])
        axis, value, lo, hi = side_segment(side, die_region)
        if die is not None or io_mode == "boundary":
            px, py = (value, py) if axis == 0 else (px, value)
        if io_mode == "boundary":
            io_specs.append(IoPinSpec(tname, False, side, px, py))
        else:
            io_specs.append(IoPinSpec(tname, True, None, px, py))
        signal_pins.setdefault(tname, []).append(len(pins))
        pins.append(PinSpec(f"{tname}.io", False, len(io_specs) - 1))

    for inst_name, mod_name, signals, line in parent["network"]:
        proto = modules.get(mod_name)
        if proto is None:
            raise FormatError("reference", f"instance {inst_name!r} uses unknown module {mod_name!r}", line)
        if proto["dims"] is None:
            raise FormatError("schema", f"module {mod_name!r} has no DIMENSIONS", proto["line"])
        bx0, by0, bx1, by1 = proto["dims"]
        w, h = bx1 - bx0, by1 - by0
        if w > W or h > H:
            raise FormatError("bounds", f"module {inst_name!r} ({w:g}x{h:g}) exceeds the {W:g}x{H:g} die: "
                              f"0 <= x <= W - w has no solution", line)
        if len(signals) > len(proto["io"]):
            raise FormatError("reference", f"instance {inst_name!r} connects {len(signals)} signals "
                              f"but {mod_name!r} has {len(proto['io'])} pins", line)
        mods.append(ModuleSpec(inst_name, w, h))
        for sig, (pname, x, y, _) in zip(signals, proto["io"]):
            dx, dy = min(max(x - bx0, 0.0), w), min(max(y - by0, 0.0), h)
            signal_pins.setdefault(sig, []).append(len(pins))
            pins.append(PinSpec(f"{inst_name}.{pname}.{len(pins)}", True, len(mods) - 1, dx, dy))

    nets = [Net(sig, tuple(members)) for sig, members in signal_pins.items() if len(members) >= 2]
    try:
        return Instance(die_region, mods, io_specs, pins, nets, name=name)
    except InstanceError as exc:
        raise FormatError("invariant", str(exc)) from None
