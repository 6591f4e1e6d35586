"""Wirelength-reducing perturbations with a decaying, summable step size."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Instance, Placement, hpwl_subgradient, hpwl_total

MAX_TRIALS = 10


@dataclass
class SmConfig:
    num: int = 1
    lambda_min: float = 0.1
    lambda_init: float = 321.0
    decay: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.decay < 1:
            raise ValueError("decay factor must lie in (0, 1)")
        if not 0 <= self.lambda_min <= self.lambda_init:
            raise ValueError("need 0 <= lambda_min <= lambda_init")
        if self.num < 1:
            raise ValueError("num must be >= 1")


def decay_index_start(k: int, ell_prev: int, rng: np.random.Generator) -> int:
    if k < ell_prev:
        return int(rng.integers(k, ell_prev + 1))
    return k


def perturbation_step(ell: int, config: SmConfig) -> float:
    return max(config.lambda_min, config.lambda_init * config.decay ** ell)


def sm_perturb(z: Placement, instance: Instance, k: int, ell_prev: int, config: SmConfig,
               rng: np.random.Generator, movable: Optional[np.ndarray] = None, log: Optional[list] = None):
    """Apply ``config.num`` HPWL-descending perturbation attempts to ``z``.

    ``movable`` masks the 2N entries allowed to move (fixed I/O pins and, in
    basic mode, every I/O pin are masked out).  Accepted steps are appended
    to ``log`` as ``(ell, step)`` when given.  Returns ``(z, ell)``.
    """
    z = np.array(z, dtype=float)
    ell = ell_prev
    current = hpwl_total(instance, z)
    for _ in range(config.num):
        ell = decay_index_start(k, ell, rng)
        v = hpwl_subgradient(instance, z)
        if movable is not None:
            v[~movable] = 0.0
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            continue
        direction = v / norm
        for _ in range(MAX_TRIALS):
            step = perturbation_step(ell, config)
            trial = z - step * direction
            value = hpwl_total(instance, trial)
            if value < current:
                z, current = trial, value
                if log is not None:
                    log.append((ell, step))
                break
            ell += 1
    return z, ell
