"""Derivative-free minimization over measurement-parameter cubes.

Two stages: a global pre-scan (a full cartesian angle grid when that is
affordable, otherwise a seeded random scan), then Nelder-Mead descents from
the best scan point, any caller-supplied structural starts, and random
restarts. All angles are periodic, so the simplex is free to wrap. Results
are deterministic for a fixed config: restarts run in a fixed order and the
reduction prefers lower values, breaking ties by restart index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _nelder_mead

GRID_CAP = 4000  # full grid only when points**dim stays below this


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 24
    grid_points_per_angle: int = 13
    max_iters: int = 2000
    f_tol: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.f_tol <= 0:
            raise ValueError("f_tol must be positive")


@dataclass(frozen=True)
class OptResult:
    value: float
    params: np.ndarray
    iterations: int
    restart_index: int
    spread: float
    grid_certified: bool = False

    def __post_init__(self):
        p = np.array(self.params, dtype=float)
        p.flags.writeable = False
        object.__setattr__(self, "params", p)


BAD_VALUE = 1e100  # stands in for +inf; keeps simplex arithmetic finite


def _safe(objective):
    def f(x):
        v = objective(x)
        return v if math.isfinite(v) else BAD_VALUE

    return f


def minimize(objective, dim_params, cfg, extra_starts=()):
    """Minimize a periodic objective over `dim_params` angles.

    extra_starts: optional structural candidate vectors evaluated as
    additional descent starts inside the restart budget.
    """
    f = _safe(objective)
    if dim_params == 0:
        v = f(np.zeros(0))
        return OptResult(v, np.zeros(0), 0, 0, 0.0, True)

    rng = np.random.default_rng(cfg.seed)
    g = cfg.grid_points_per_angle

    # stage 1: global scan
    certified = g >= 2 and g**dim_params <= GRID_CAP
    if certified:
        axes = [np.linspace(0.0, 2.0 * np.pi, g, endpoint=False)] * dim_params
        mesh = np.meshgrid(*axes, indexing="ij")
        scan = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        n_scan = min(GRID_CAP, max(300, 120 * dim_params))
        scan = rng.uniform(0.0, 2.0 * np.pi, (n_scan, dim_params))
    scan_vals = np.array([f(x) for x in scan])
    best_scan = int(np.argmin(scan_vals))

    # stage 2: local descents
    starts = [scan[best_scan]]
    starts.extend(np.asarray(s, dtype=float) for s in extra_starts)
    while len(starts) < max(cfg.restarts, len(starts)):
        starts.append(rng.uniform(0.0, 2.0 * np.pi, dim_params))

    best = None
    optima = []
    for i, x0 in enumerate(starts):
        res = _nelder_mead(
            f,
            x0,
            method="Nelder-Mead",
            options=dict(
                maxiter=cfg.max_iters,
                maxfev=4 * cfg.max_iters,
                fatol=0.1 * cfg.f_tol,
                xatol=1e-6,
            ),
        )
        val = f(np.asarray(res.x))
        optima.append(val)
        if best is None or val < best[0]:
            best = (val, np.asarray(res.x), int(res.nit), i)

    value, params, iters, idx = best
    if scan_vals[best_scan] < value:  # descent never beat its own start; keep the scan point
        value, params, iters, idx = scan_vals[best_scan], scan[best_scan], 0, 0
    spread = float(max(optima) - min(optima)) if optima else 0.0
    return OptResult(float(value), params, iters, idx, spread, certified)
