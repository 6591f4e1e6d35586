"""Global floorplanning loop, post-processing and the end-to-end solve."""
from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import initialization
from .model import Instance, Placement, check_feasible, hpwl_total, relative_overlap_area
from .projections import BoundarySegment
from .rmap import OscillationDetector, RmapConfig, Sweeper
from .superiorization import SmConfig, sm_perturb

MODES = ("basic", "io")

# Default hyperparameters per mode.
MODE_DEFAULTS = {
    "basic": dict(lambda_init=321.0, gamma_init=0.7804, Gamma=1.1),
    "io": dict(lambda_init=488.0, gamma_init=0.7761, Gamma=1.0001),
}


@dataclass
class SolverConfig:
    sm: SmConfig = field(default_factory=SmConfig)
    rmap: RmapConfig = field(default_factory=RmapConfig)
    gamma_init: float = 0.7804
    Gamma: float = 1.1
    eps_post: float = 0.35
    stop_threshold: float = 1e-3
    max_iter: int = 10_000
    post_max_iter: int = 200
    legalize_max_iter: int = 2_000
    mode: str = "basic"
    sweep: str = "rmap"  # or "map"
    superiorize: bool = True
    key_module_quantile: float = 0.2
    post_process: bool = True

    def __post_init__(self):
        if not 0 < self.gamma_init < 1:
            raise ValueError("gamma_init must lie in (0, 1)")
        if not self.Gamma > 1:
            raise ValueError("Gamma must exceed 1")
        if not 0 < self.eps_post < 1:
            raise ValueError("eps_post must lie in (0, 1)")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.sweep not in ("rmap", "map"):
            raise ValueError("sweep must be 'rmap' or 'map'")

    @classmethod
    def for_mode(cls, mode: str = "basic", **overrides) -> "SolverConfig":
        d = MODE_DEFAULTS[mode]
        sm_keys = {f.name for f in dataclasses.fields(SmConfig)}
        rmap_keys = {f.name for f in dataclasses.fields(RmapConfig)}
        sm_kw = {"lambda_init": d["lambda_init"]}
        sm_kw.update((k, v) for k, v in overrides.items() if k in sm_keys)
        sm = SmConfig(**sm_kw)
        rm = RmapConfig(**{k: v for k, v in overrides.items() if k in rmap_keys})
        rest = {k: v for k, v in overrides.items() if k not in sm_keys | rmap_keys}
        rest.setdefault("gamma_init", d["gamma_init"])
        rest.setdefault("Gamma", d["Gamma"])
        return cls(sm=sm, rmap=rm, mode=mode, **rest)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        sm = SmConfig(**d.pop("sm"))
        rm = RmapConfig(**d.pop("rmap"))
        return cls(sm=sm, rmap=rm, **d)


@dataclass
class IterationRecord:
    phase: str
    k: int
    hpwl_before_sm: float
    hpwl_after_sm: float
    hpwl: float
    overlap: float
    gamma: float
    ell: int
    sweep_time: float = 0.0


@dataclass
class SolveResult:
    placement: np.ndarray
    hpwl: float
    overlap: float
    iterations: int
    trace: list[IterationRecord]
    config: dict
    seed: int
    feasible: bool
    converged: bool
    post_iterations: int = 0
    timings: dict = field(default_factory=dict)
    stalled: bool = False
    post_converged: Optional[bool] = None


def relaxation(k: int, gamma_init: float, Gamma: float) -> float:
    if k * math.log(Gamma) >= -math.log(gamma_init):
        return 1.0
    return gamma_init * Gamma ** k


def io_segments(instance: Instance, mode: str) -> list[BoundarySegment]:
    if mode != "io":
        return []
    return [BoundarySegment.for_io(instance, int(k)) for k in instance.movable_io]


def movable_mask(instance: Instance, mode: str) -> np.ndarray:
    N, Nm = instance.n, instance.n_modules
    mask = np.zeros(2 * N, dtype=bool)
    mask[:Nm] = True
    mask[N:N + Nm] = True
    if mode == "io":
        idx = Nm + instance.movable_io
        mask[idx] = True
        mask[N + idx] = True
    return mask


def feasible_tolerance(instance: Instance) -> float:
    return 1e-6 * instance.die.diagonal


class _Run:
    """State shared by the global and post-processing loops of one solve."""

    def __init__(self, instance: Instance, config: SolverConfig, timings: bool):
        self.instance = instance
        self.config = config
        self.rng = np.random.default_rng(config.sm.seed)
        self.sweeper = Sweeper(instance, config.rmap, hard=config.sweep == "map",
                               io_segments=io_segments(instance, config.mode))
        self.movable = movable_mask(instance, config.mode)
        self.timings = timings
        self.sm_log: list = []

    def iterate(self, z, k, ell, gamma, phase, superiorize=True):
        inst = self.instance
        before = hpwl_total(inst, z)
        if superiorize:
            z, ell = sm_perturb(z, inst, k, ell, self.config.sm, self.rng, self.movable, self.sm_log)
        after = hpwl_total(inst, z)
        t0 = time.perf_counter()
        swept = self.sweeper.sweep(z)
        z = swept if gamma == 1.0 else z + gamma * (swept - z)
        dt = time.perf_counter() - t0 if self.timings else 0.0
        ov = relative_overlap_area(inst, z)
        rec = IterationRecord(phase, k, before, after, hpwl_total(inst, z), ov, gamma, int(ell), dt)
        return z, ell, rec


def per_rmap_solve(instance: Instance, init: Placement, config: SolverConfig,
                   timings: bool = True, _run: Optional[_Run] = None) -> SolveResult:
    """Interleave perturbations and relaxed projection sweeps until overlap is small."""
    run = _run or _Run(instance, config, timings)
    z = np.array(init, dtype=float)
    ell = 0
    trace: list[IterationRecord] = []
    detector = OscillationDetector(threshold=config.stop_threshold) if config.sweep == "map" else None
    converged = stalled = False
    ov = relative_overlap_area(instance, z)
    if not config.superiorize and ov < config.stop_threshold and _in_die(instance, z):
        converged = True
    k = 0
    while not converged and k < config.max_iter:
        gamma = relaxation(k, config.gamma_init, config.Gamma)
        z, ell, rec = run.iterate(z, k, ell, gamma, "global", config.superiorize)
        trace.append(rec)
        k += 1
        if rec.overlap < config.stop_threshold:
            converged = True
        elif detector is not None and detector.update(rec.overlap):
            stalled = True
            break
    return _result(instance, z, config, trace, k, converged, stalled)


def _in_die(instance, z) -> bool:
    ok, viol = check_feasible(instance, z, feasible_tolerance(instance))
    return ok or all(v.kind == "O" for v in viol)


def _result(instance, z, config, trace, iterations, converged, stalled) -> SolveResult:
    ok, _ = check_feasible(instance, z, feasible_tolerance(instance))
    return SolveResult(
        placement=z, hpwl=hpwl_total(instance, z), overlap=relative_overlap_area(instance, z),
        iterations=iterations, trace=trace, config=config.to_dict(), seed=config.sm.seed,
        feasible=ok, converged=converged, stalled=stalled,
    )


def post_process(instance: Instance, result: SolveResult, config: SolverConfig,
                 timings: bool = True, _run: Optional[_Run] = None, tol: float = 1e-9) -> SolveResult:
    """Clear the residual overlap left by the global loop.

    First the global loop is rerun with full-strength sweeps and the decay
    index reset to ``floor(k * eps_post)``.  If that stage ends with overlap
    above ``tol``, plain sweeps without perturbation continue from the best
    placement seen.  The best placement (by overlap, then HPWL) is returned,
    so overlap never increases; ``post_converged`` tells whether it reached
    ``tol``.
    """
    z0 = np.array(result.placement, dtype=float)
    if relative_overlap_area(instance, z0) <= tol and check_feasible(instance, z0, feasible_tolerance(instance))[0]:
        return dataclasses.replace(result, post_converged=True)
    run = _run or _Run(instance, config, timings)
    ell = int(math.floor(result.iterations * config.eps_post))
    best = (relative_overlap_area(instance, z0), hpwl_total(instance, z0), z0)
    trace = list(result.trace)
    done = False
    k = 0
    stages = [("post", config.post_max_iter, config.superiorize), ("legalize", config.legalize_max_iter, False)]
    for phase, cap, superiorize in stages:
        z = best[2]
        for _ in range(cap):
            z, ell, rec = run.iterate(z, k, ell, 1.0, phase, superiorize)
            trace.append(rec)
            k += 1
            if (rec.overlap, rec.hpwl) < best[:2] or rec.overlap <= tol:
                best = (rec.overlap, rec.hpwl, z)
            if rec.overlap <= tol:
                done = True
                break
        if done:
            break
    out = _result(instance, best[2], config, trace, result.iterations, result.converged, result.stalled)
    out.post_iterations = k
    out.post_converged = done
    out.timings = dict(result.timings)
    return out


def solve(instance: Instance, config: Optional[SolverConfig] = None, timings: bool = True) -> SolveResult:
    """Initialization, global floorplanning, then post-processing."""
    config = config or SolverConfig()
    t0 = time.perf_counter()
    z = initialization.initialize(instance, config.key_module_quantile)
    t1 = time.perf_counter()
    run = _Run(instance, config, timings)
    res = per_rmap_solve(instance, z, config, timings, run)
    t2 = time.perf_counter()
    if config.post_process and res.converged:
        res = post_process(instance, res, config, timings, run)
    t3 = time.perf_counter()
    res.timings = {"init": t1 - t0, "global": t2 - t1, "post": t3 - t2} if timings else {}
    return res
