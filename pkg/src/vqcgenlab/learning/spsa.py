"""SPSA with a shot-frugal schedule."""
from dataclasses import dataclass
import inspect
import time

import numpy as np

from ..errors import ConvergenceError
from .result import TrainResult


@dataclass
class SPSAConfig:
    a: float = 0.2
    c: float = 0.1
    A: float = 100.0
    alpha: float = 0.602
    gamma: float = 0.101
    max_iter: int = 1000
    shots0: int = None          # None: risk_fn is called without a shot count
    shot_growth: int = 4
    patience: int = 50
    rel_improve: float = 0.01
    max_shots: int = None
    snapshot_every: int = 0

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: v for k, v in (d or {}).items() if k in cls.__dataclass_fields__})


def _takes_shots(fn):
    try:
        return len(inspect.signature(fn).parameters) >= 2
    except (TypeError, ValueError):
        return False


def spsa_minimize(risk_fn, theta0, config=None, rng=None, callback=None):
    """Minimize ``risk_fn(theta[, shots])``.

    theta_{k+1} = theta_k - a_k g_k with a_k = a / (k + 1 + A)^alpha,
    c_k = c / (k + 1)^gamma and g_k = (f(theta + c_k D) - f(theta - c_k D)) / (2 c_k) * D
    for Rademacher D.  When ``shots0`` is set, the shot count is multiplied by
    ``shot_growth`` whenever the best seen risk has not improved by
    ``rel_improve`` (relative) within ``patience`` iterations.

    The risk trace records the mean of the two evaluations per iteration.
    ``callback(k, theta, shots)`` may return a snapshot object that is stored
    in ``TrainResult.snapshots`` every ``snapshot_every`` iterations.
    """
    cfg = config or SPSAConfig()
    t0 = time.perf_counter()
    theta = np.array(theta0, dtype=float)
    shots = cfg.shots0
    with_shots = shots is not None and _takes_shots(risk_fn)

    def f(x):
        return risk_fn(x, shots) if with_shots else risk_fn(x)

    res = TrainResult()
    best, best_iter = np.inf, 0
    for k in range(cfg.max_iter):
        ak = cfg.a / (k + 1 + cfg.A) ** cfg.alpha
        ck = cfg.c / (k + 1) ** cfg.gamma
        delta = rng.choice([-1.0, 1.0], size=theta.shape)
        fp, fm = f(theta + ck * delta), f(theta - ck * delta)
        res.n_evals += 2
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ConvergenceError("non-finite risk encountered", trace=list(res.risk_trace))
        theta = theta - ak * (fp - fm) / (2 * ck) * delta
        val = 0.5 * (fp + fm)
        res.risk_trace.append(float(val))
        if val < best * (1 - cfg.rel_improve) or not np.isfinite(best):
            best, best_iter = val, k
        elif shots is not None and k - best_iter >= cfg.patience:
            new = shots * cfg.shot_growth
            shots = min(new, cfg.max_shots) if cfg.max_shots else new
            best, best_iter = val, k
        if callback is not None and cfg.snapshot_every and (k + 1) % cfg.snapshot_every == 0:
            snap = callback(k, theta.copy(), shots)
            if snap is not None:
                res.snapshots.append(snap)
    res.theta = theta
    res.wall_ms = 1e3 * (time.perf_counter() - t0)
    return res
