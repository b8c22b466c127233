"""Monte Carlo failure-probability estimation and multi-run statistics.

Failure is strictly ``G < 0``; a zero response counts as safe. Samples come
from the canonical seeded stream in :mod:`relhdmr.distributions`, so the
estimate is identical for any evaluation batch size and for any number of
worker threads (the reduction is a sum of integer counts).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import standard_normal_stream
from .errors import ConfigError, EvaluationError

THREADS_ENV = "RELHDMR_THREADS"
DEFAULT_BATCH = 100_000


@dataclass(frozen=True)
class McsResult:
    """Failure-probability estimate with its coefficient of variation.

    ``cov`` is ``sqrt((1 - pf) / (n_mc * pf))``; it is ``None`` when no
    failures were observed (undefined). ``insufficient`` flags estimates
    whose population did not reach the ``cov < max_cov`` criterion.
    """

    pf: float
    n_mc: int
    n_fail: int
    cov: float | None
    seed: int
    insufficient: bool = False

    def __post_init__(self):
        if self.n_mc < 1:
            raise ConfigError(f"n_mc must be >= 1, got {self.n_mc}")
        if not 0 <= self.n_fail <= self.n_mc:
            raise ConfigError("n_fail must lie in [0, n_mc]")
        if abs(self.pf - self.n_fail / self.n_mc) > 1e-15:
            raise ConfigError("pf must equal n_fail / n_mc")


def cov_of(pf: float, n_mc: int) -> float | None:
    """Coefficient of variation of a Monte Carlo pf estimate."""
    if pf <= 0.0:
        return None
    return float(np.sqrt((1.0 - pf) / (n_mc * pf)))


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return max(n, 1)


def _count_batch(predictor, dists, seed, start, rows):
    u = standard_normal_stream(seed, start, rows, len(dists))
    values = np.asarray(predictor(u), dtype=float).ravel()
    if values.shape[0] != rows:
        raise EvaluationError(
            f"predictor returned {values.shape[0]} values for {rows} samples"
        )
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.argmax(bad))
        return None, start + idx, u[idx]
    return int(np.count_nonzero(values < 0.0)), None, None


def _count_failures(predictor, dists, start, stop, seed, batch) -> int:
    jobs = []
    row = start
    while row < stop:
        rows = min(batch, stop - row)
        jobs.append((row, rows))
        row += rows
    workers = _worker_count()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    lambda job: _count_batch(predictor, dists, seed, job[0], job[1]),
                    jobs,
                )
            )
    else:
        results = [_count_batch(predictor, dists, seed, s, r) for s, r in jobs]

    bad = [(idx, sample) for count, idx, sample in results if count is None]
    if bad:
        idx, sample = min(bad, key=lambda b: b[0])
        raise EvaluationError(
            f"predictor returned a non-finite value at sample {idx}: u={sample.tolist()}"
        )
    return sum(count for count, _, _ in results)


def estimate_pf(
    predictor,
    dists,
    n_mc: int,
    seed: int,
    batch: int = DEFAULT_BATCH,
    max_cov: float = 0.05,
    auto_grow: bool = False,
    cap: int | None = None,
) -> McsResult:
    """Estimate the failure probability of a U-space predictor.

    ``predictor`` maps an ``(n, d)`` standard-normal array to ``(n,)``
    responses. With ``auto_grow`` the population doubles (extending the
    same sample stream, so earlier samples are reused unchanged) until
    ``cov < max_cov`` or ``cap`` is reached.
    """
    if n_mc < 1:
        raise ConfigError(f"n_mc must be >= 1, got {n_mc}")
    if batch < 1:
        raise ConfigError(f"batch must be >= 1, got {batch}")

    n_total = int(n_mc)
    n_fail = _count_failures(predictor, dists, 0, n_total, seed, batch)
    cov = cov_of(n_fail / n_total, n_total)
    while auto_grow and (cov is None or cov >= max_cov):
        target = n_total * 2
        if cap is not None and target > cap:
            break
        n_fail += _count_failures(predictor, dists, n_total, target, seed, batch)
        n_total = target
        cov = cov_of(n_fail / n_total, n_total)

    pf = n_fail / n_total
    return McsResult(
        pf=pf,
        n_mc=n_total,
        n_fail=n_fail,
        cov=cov,
        seed=seed,
        insufficient=(cov is None or cov >= max_cov),
    )


@dataclass(frozen=True)
class RunAggregates:
    pf_mean: float
    rel_error_mean_abs_pct: float | None
    rel_error_mean_signed_pct: float | None
    n_call_mean: float | None
    cov_mean: float | None
    n_runs: int


def aggregate_runs(
    pfs,
    refs=None,
    n_calls=None,
    covs=None,
) -> RunAggregates:
    """Multi-run summary statistics.

    The mean relative error takes absolute values per run (published
    summaries report non-negative errors); the signed mean is also
    returned for transparency. ``refs`` may be a scalar shared reference
    or one value per run.
    """
    pfs = np.asarray(list(pfs), dtype=float)
    n = pfs.shape[0]
    if n == 0:
        raise ConfigError("cannot aggregate zero runs")

    abs_err = signed_err = None
    if refs is not None:
        refs_arr = np.asarray(refs, dtype=float)
        if refs_arr.ndim == 0:
            refs_arr = np.full(n, float(refs_arr))
        if refs_arr.shape[0] != n:
            raise ConfigError(
                f"expected {n} reference values, got {refs_arr.shape[0]}"
            )
        if np.any(refs_arr == 0.0):
            raise ConfigError("reference failure probability of zero is not usable")
        rel = (pfs - refs_arr) / refs_arr * 100.0
        abs_err = float(np.mean(np.abs(rel)))
        signed_err = float(np.mean(rel))

    n_call_mean = None
    if n_calls is not None:
        n_calls = np.asarray(list(n_calls), dtype=float)
        if n_calls.shape[0] != n:
            raise ConfigError(f"expected {n} call counts, got {n_calls.shape[0]}")
        n_call_mean = float(np.mean(n_calls))

    cov_mean = None
    if covs is not None:
        vals = [c for c in covs if c is not None]
        if vals:
            cov_mean = float(np.mean(vals))

    return RunAggregates(
        pf_mean=float(np.mean(pfs)),
        rel_error_mean_abs_pct=abs_err,
        rel_error_mean_signed_pct=signed_err,
        n_call_mean=n_call_mean,
        cov_mean=cov_mean,
        n_runs=n,
    )
