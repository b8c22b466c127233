"""Marginal input models and the standard-normal <-> physical space map.

All surrogate construction and sampling happens in independent standard
normal space (U). Physical inputs (X) are recovered component-wise through
the marginal transform of each variable, so the map is monotone and exactly
invertible per component.

Random number generation is PCG64 seeded through ``numpy.random.SeedSequence``.
The sampling substrate is organized as a deterministic stream of rows split
into fixed blocks of ``CANONICAL_BLOCK`` rows; block ``k`` of stream ``seed``
is always generated by ``default_rng(SeedSequence([seed, k]))``, so any
slicing of the stream into evaluation batches yields identical samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

NORMAL = "normal"
LOGNORMAL = "lognormal"

#: Rows per canonical sampling block. Batch sizes never change the stream.
CANONICAL_BLOCK = 100_000


@dataclass(frozen=True)
class Distribution:
    """Marginal model of one random variable, parameterized in physical units.

    ``mean`` and ``std`` are the physical-space moments even for the
    lognormal case; log-space parameters are derived internally.
    """

    kind: str
    mean: float
    std: float

    def __post_init__(self):
        if self.kind not in (NORMAL, LOGNORMAL):
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        if not np.isfinite(self.mean) or not np.isfinite(self.std):
            raise ConfigError("distribution parameters must be finite")
        if self.std <= 0.0:
            raise ConfigError(f"std must be positive, got {self.std}")
        if self.kind == LOGNORMAL and self.mean <= 0.0:
            raise ConfigError(f"lognormal mean must be positive, got {self.mean}")

    def log_params(self) -> tuple[float, float]:
        """(mu_L, sigma_L) of the underlying normal for a lognormal marginal."""
        cv2 = (self.std / self.mean) ** 2
        sigma_l = float(np.sqrt(np.log1p(cv2)))
        mu_l = float(np.log(self.mean) - 0.5 * sigma_l**2)
        return mu_l, sigma_l


def _check_dims(n_cols: int, dists: list[Distribution]) -> None:
    if n_cols != len(dists):
        raise ConfigError(
            f"dimension mismatch: {n_cols} coordinates vs {len(dists)} distributions"
        )


def to_physical(u: np.ndarray, dists: list[Distribution]) -> np.ndarray:
    """Map U-space coordinates to physical space, component-wise.

    Accepts a single point of shape ``(d,)`` or a batch ``(n, d)``.
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    ub = u[None, :] if single else u
    _check_dims(ub.shape[1], dists)
    x = np.empty_like(ub)
    for j, dist in enumerate(dists):
        if dist.kind == NORMAL:
            x[:, j] = dist.mean + dist.std * ub[:, j]
        else:
            mu_l, sigma_l = dist.log_params()
            x[:, j] = np.exp(mu_l + sigma_l * ub[:, j])
    return x[0] if single else x


def to_standard(x: np.ndarray, dists: list[Distribution]) -> np.ndarray:
    """Exact inverse of :func:`to_physical`."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    _check_dims(xb.shape[1], dists)
    u = np.empty_like(xb)
    for j, dist in enumerate(dists):
        if dist.kind == NORMAL:
            u[:, j] = (xb[:, j] - dist.mean) / dist.std
        else:
            mu_l, sigma_l = dist.log_params()
            u[:, j] = (np.log(xb[:, j]) - mu_l) / sigma_l
    return u[0] if single else u


def derive_seed(*keys: int) -> int:
    """Deterministically derive a child seed from integer keys.

    Used to partition the seed space between stages, sub-models and runs so
    that parallel execution order can never change any stream.
    """
    ss = np.random.SeedSequence([int(k) & 0xFFFFFFFF for k in keys])
    return int(ss.generate_state(1, np.uint64)[0])


def _block(seed: int, index: int, dim: int, rows: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))
    return rng.standard_normal((rows, dim))


def standard_normal_stream(seed: int, start: int, count: int, dim: int) -> np.ndarray:
    """Rows ``[start, start+count)`` of the canonical sampling stream.

    The stream is identical however it is sliced: callers may batch at any
    size without changing the values drawn.
    """
    if count < 0 or start < 0 or dim < 1:
        raise ConfigError("invalid stream slice request")
    out = np.empty((count, dim))
    filled = 0
    while filled < count:
        row = start + filled
        block_idx = row // CANONICAL_BLOCK
        offset = row % CANONICAL_BLOCK
        take = min(CANONICAL_BLOCK - offset, count - filled)
        rows = min(CANONICAL_BLOCK, offset + take)
        block = _block(seed, block_idx, dim, rows)
        out[filled : filled + take] = block[offset : offset + take]
        filled += take
    return out


def sample_standard_normal(n: int, dim: int, seed: int) -> np.ndarray:
    """Deterministic i.i.d. standard normal matrix of shape ``(n, dim)``."""
    if n < 1 or dim < 1:
        raise ConfigError(f"sample shape must be positive, got ({n}, {dim})")
    return standard_normal_stream(seed, 0, n, dim)


def parse_distribution(entry: dict, key: str = "variables") -> Distribution:
    """Build a :class:`Distribution` from its JSON form."""
    if not isinstance(entry, dict):
        raise ConfigError("expected an object with kind/mean/std", key=key)
    try:
        kind = str(entry["kind"]).lower()
        mean = float(entry["mean"])
        std = float(entry["std"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad distribution entry: {exc}", key=key) from exc
    return Distribution(kind=kind, mean=mean, std=std)
