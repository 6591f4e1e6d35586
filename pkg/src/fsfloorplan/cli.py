"""Command-line front end.

Exit codes: 0 success (feasible placement), 1 usage or input error,
2 solve did not converge, 3 ``check`` found a mismatch.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import data
from .driver import MODE_DEFAULTS, SolveResult, SolverConfig, feasible_tolerance, per_rmap_solve, solve
from .formats import load_instance, read_result, write_result
from .initialization import initialize
from .model import Instance, InstanceError, check_feasible, hpwl_total, relative_overlap_area
from .svg import render_svg

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_MISMATCH = 0, 1, 2, 3

# flag -> SolverConfig (or nested) field name
SOLVER_FLAGS = {
    "seed": "seed",
    "lambda_min": "lambda_min",
    "lambda_init": "lambda_init",
    "Lambda": "decay",
    "gamma_init": "gamma_init",
    "Gamma": "Gamma",
    "eps_post": "eps_post",
    "eps_pref": "eps_pref",
    "T": "T",
    "num_perturb": "num",
    "stop_threshold": "stop_threshold",
    "max_iter": "max_iter",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _per_mode(key: str) -> str:
    return ", ".join(f"{m} {MODE_DEFAULTS[m][key]:g}" for m in MODE_DEFAULTS)


def _add_instance(p):
    p.add_argument("instance", help="instance file (.yaml or .yal), or pkg:NAME for a packaged instance")


def _add_solver_flags(p):
    g = p.add_argument_group("solver parameters")
    g.add_argument("--mode", choices=("basic", "io"), default="basic",
                   help="basic keeps I/O pins fixed; io moves boundary pins along their sides (default: basic)")
    g.add_argument("--seed", type=int, default=0, help="random seed for the perturbation schedule (default: 0)")
    g.add_argument("--lambda-min", type=float, help="perturbation step floor (default: 0.1)")
    g.add_argument("--lambda-init", type=float, help=f"initial perturbation step (default: {_per_mode('lambda_init')})")
    g.add_argument("--Lambda", type=float, help="perturbation decay factor in (0,1) (default: 0.99)")
    g.add_argument("--gamma-init", type=float, help=f"initial relaxation (default: {_per_mode('gamma_init')})")
    g.add_argument("--Gamma", type=float, help=f"relaxation growth factor > 1 (default: {_per_mode('Gamma')})")
    g.add_argument("--eps-post", type=float, help="decay-index reset fraction for post-processing (default: 0.35)")
    g.add_argument("--eps-pref", type=float, help="softmax temperature in length units (default: 0.001 x die diagonal)")
    g.add_argument("--T", type=float, help="reset threshold of the direction counters, inf for none (default: 5)")
    g.add_argument("--num-perturb", type=int, help="perturbation attempts per iteration (default: 1)")
    g.add_argument("--stop-threshold", type=float, help="relative overlap area that ends the global loop (default: 0.001)")
    g.add_argument("--max-iter", type=int, help="cap on global iterations (default: 10000)")


def _add_output(p, svg=True):
    p.add_argument("--out", help="write the result file here")
    if svg:
        p.add_argument("--svg", help="write an SVG rendering here")
    p.add_argument("--no-timings", action="store_true", help="zero wall-clock fields so equal runs give equal files")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fsfloorplan", description="Fixed-outline floorplanning by feasibility seeking.",
                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("solve", help="initialize, run the global loop and post-process", allow_abbrev=False)
    _add_instance(p)
    _add_solver_flags(p)
    _add_output(p)

    p = sub.add_parser("compare", help="plain alternating projections versus the resetting variant",
                       allow_abbrev=False)
    _add_instance(p)
    _add_solver_flags(p)

    p = sub.add_parser("init", help="emit the starting placement only", allow_abbrev=False)
    _add_instance(p)
    p.add_argument("--mode", choices=("basic", "io"), default="basic")
    p.add_argument("--key-quantile", type=float, default=0.2,
                   help="modules below this area quantile start on the die boundary (default: 0.2)")
    _add_output(p)

    p = sub.add_parser("check", help="recompute HPWL, overlap and feasibility of a result file", allow_abbrev=False)
    _add_instance(p)
    p.add_argument("result")

    p = sub.add_parser("render", help="draw a result file as SVG", allow_abbrev=False)
    _add_instance(p)
    p.add_argument("result")
    p.add_argument("--out", required=True)
    return parser


def config_from_args(args) -> SolverConfig:
    overrides = {field: getattr(args, flag) for flag, field in SOLVER_FLAGS.items()
                 if getattr(args, flag, None) is not None}
    return SolverConfig.for_mode(args.mode, **overrides)


def _load(spec: str) -> Instance:
    if spec.startswith("pkg:"):
        return data.load(spec[4:])
    return load_instance(spec)


def _write(path: Optional[str], text: str):
    if path:
        Path(path).write_text(text, encoding="utf-8")


def _summary(name: str, res: SolveResult) -> str:
    return (f"{name}: hpwl={res.hpwl:.6g} overlap={res.overlap:.3e} iterations={res.iterations}"
            f"+{res.post_iterations} feasible={res.feasible}")


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    cfg = config_from_args(args)
    res = solve(inst, cfg, timings=not args.no_timings)
    _write(args.out, write_result(res, inst, include_timings=not args.no_timings))
    _write(args.svg, render_svg(inst, res.placement))
    print(_summary(inst.name, res))
    return EXIT_OK if res.feasible else EXIT_NOT_CONVERGED


def cmd_compare(args) -> int:
    inst = _load(args.instance)
    z0 = initialize(inst)
    rows = []
    rmap_ok = False
    for method in ("MAP", "RMAP"):
        cfg = config_from_args(args)
        cfg.sweep = method.lower()
        cfg.superiorize = False
        t0 = time.perf_counter()
        res = per_rmap_solve(inst, z0, cfg, timings=False)
        dt = time.perf_counter() - t0
        rows.append((method, f"{dt:.3f}", str(res.iterations), f"{100 * res.overlap:.3f}%"))
        if method == "RMAP":
            rmap_ok = res.converged
    header = ("method", "runtime_s", "iterations", "relative_overlap")
    widths = [max(len(r[c]) for r in rows + [header]) for c in range(4)]
    for r in [header] + rows:
        print("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return EXIT_OK if rmap_ok else EXIT_NOT_CONVERGED


def cmd_init(args) -> int:
    inst = _load(args.instance)
    z = initialize(inst, args.key_quantile)
    cfg = SolverConfig.for_mode(args.mode)
    ok, _ = check_feasible(inst, z, feasible_tolerance(inst))
    res = SolveResult(placement=z, hpwl=hpwl_total(inst, z), overlap=relative_overlap_area(inst, z),
                      iterations=0, trace=[], config=cfg.to_dict(), seed=cfg.sm.seed, feasible=ok,
                      converged=False)
    _write(args.out, write_result(res, inst, include_timings=not args.no_timings))
    _write(args.svg, render_svg(inst, z))
    print(_summary(inst.name, res))
    return EXIT_OK


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def cmd_check(args) -> int:
    inst = _load(args.instance)
    res = read_result(Path(args.result).read_text(encoding="utf-8"))
    z = np.asarray(res.placement, dtype=float)
    if z.shape != (2 * inst.n,) or not np.all(np.isfinite(z)):
        print(f"placement has {z.size} entries, expected {2 * inst.n}", file=sys.stderr)
        return EXIT_MISMATCH
    recomputed = {
        "hpwl": hpwl_total(inst, z),
        "overlap": relative_overlap_area(inst, z),
        "feasible": check_feasible(inst, z, feasible_tolerance(inst))[0],
    }
    diffs = []
    for key, value in recomputed.items():
        stored = getattr(res, key)
        same = stored == value if key == "feasible" else _close(float(stored), float(value))
        if not same:
            diffs.append(f"{key}: stored {stored!r}, recomputed {value!r}")
    if diffs:
        print("\n".join(diffs), file=sys.stderr)
        return EXIT_MISMATCH
    print(f"{inst.name}: result consistent")
    return EXIT_OK


def cmd_render(args) -> int:
    inst = _load(args.instance)
    res = read_result(Path(args.result).read_text(encoding="utf-8"))
    if np.asarray(res.placement).shape != (2 * inst.n,):
        print("result does not match the instance", file=sys.stderr)
        return EXIT_USAGE
    _write(args.out, render_svg(inst, res.placement))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "compare": cmd_compare, "init": cmd_init, "check": cmd_check, "render": cmd_render}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, InstanceError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"fsfloorplan: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
