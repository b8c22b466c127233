"""Bounded global minimization with a particle swarm.

Used both for picking informative samples over the standard-normal box and
for Kriging hyperparameter search. The swarm maximizes a fitness
``1 / (objective + delta0)``; since that is strictly decreasing in the
objective (for non-negative objectives), the implementation compares raw
objective values directly and ``delta0`` never enters the hot path.

Objectives are evaluated vectorized: ``objective(X)`` receives the whole
swarm as an ``(n_swarm, d)`` array and returns ``(n_swarm,)`` values.
Non-finite values are treated as +inf. All random draws happen on the
control thread, so vectorized or parallel objective evaluation can never
change the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class SwarmConfig:
    """Swarm control parameters.

    ``v_max`` is a fraction of each dimension's box width: the per-component
    speed cap is ``v_max * (hi - lo)``.
    """

    n_swarm: int = 50
    n_iter: int = 50
    omega: float = 0.729
    c1: float = 2.0
    c2: float = 2.0
    v_max: float = 0.3
    delta0: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.n_swarm < 2:
            raise ConfigError(f"n_swarm must be >= 2, got {self.n_swarm}")
        if self.n_iter < 1:
            raise ConfigError(f"n_iter must be >= 1, got {self.n_iter}")
        if not 0.0 < self.omega < 1.0:
            raise ConfigError(f"omega must be in (0, 1), got {self.omega}")
        if self.v_max <= 0.0:
            raise ConfigError(f"v_max must be positive, got {self.v_max}")


@dataclass
class PsoResult:
    x: np.ndarray
    f: float
    trace: np.ndarray  # best-so-far objective after init and each iteration


def _sanitize(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.where(np.isfinite(values), values, np.inf)


def minimize(
    objective: Callable[[np.ndarray], np.ndarray],
    bounds: np.ndarray,
    config: SwarmConfig,
    iteration_hook: Callable[[dict], None] | None = None,
) -> PsoResult:
    """Minimize ``objective`` over an axis-aligned box.

    ``bounds`` has shape ``(d, 2)`` with ``lo < hi`` rows. Runs exactly
    ``config.n_iter`` iterations and returns the best position ever visited.
    Deterministic given ``config.seed``.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ConfigError(f"bounds must have shape (d, 2), got {bounds.shape}")
    lo, hi = bounds[:, 0], bounds[:, 1]
    if not np.all(np.isfinite(bounds)) or not np.all(lo < hi):
        raise ConfigError("bounds must be finite with lo < hi per dimension")

    d = bounds.shape[0]
    n = config.n_swarm
    width = hi - lo
    v_cap = config.v_max * width

    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed) & 0xFFFFFFFF]))
    x = lo + rng.uniform(size=(n, d)) * width
    v = rng.uniform(-1.0, 1.0, size=(n, d)) * v_cap

    fx = _sanitize(objective(x))
    pbest = x.copy()
    pbest_f = fx.copy()
    g_idx = int(np.argmin(pbest_f))
    gbest = pbest[g_idx].copy()
    gbest_f = float(pbest_f[g_idx])

    trace = np.empty(config.n_iter + 1)
    trace[0] = gbest_f

    for it in range(config.n_iter):
        r1 = rng.uniform(size=(n, d))
        r2 = rng.uniform(size=(n, d))
        v = (
            config.omega * v
            + config.c1 * r1 * (pbest - x)
            + config.c2 * r2 * (gbest[None, :] - x)
        )
        np.clip(v, -v_cap, v_cap, out=v)
        x = x + v
        below = x < lo
        above = x > hi
        if below.any() or above.any():
            x = np.clip(x, lo, hi)
            v[below | above] = 0.0

        fx = _sanitize(objective(x))
        improved = fx < pbest_f
        pbest[improved] = x[improved]
        pbest_f[improved] = fx[improved]
        g_idx = int(np.argmin(pbest_f))
        if pbest_f[g_idx] < gbest_f:
            gbest = pbest[g_idx].copy()
            gbest_f = float(pbest_f[g_idx])
        trace[it + 1] = gbest_f
        if iteration_hook is not None:
            iteration_hook(
                {
                    "iteration": it,
                    "positions": x.copy(),
                    "pbest_f": pbest_f.copy(),
                    "gbest_f": gbest_f,
                    "gbest": gbest.copy(),
                }
            )

    return PsoResult(x=gbest, f=gbest_f, trace=trace)
