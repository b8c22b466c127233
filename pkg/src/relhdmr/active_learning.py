"""Adaptive construction of the composite surrogate.

Three learning stages followed by Monte Carlo estimation:

1. one-variable sub-models for every input, refined where their own
   prediction variance is largest until the variance falls below a
   fraction of the observed response range;
2. ranking of all variable pairs by a coupling significance index, with
   the selected pairs' two-variable models initialized for free from the
   stage-1 data (the embedded points coincide, so responses are reused);
3. refinement of the composite near the limit state surface, choosing at
   each step the point minimizing ``|mean - delta| / sigma_bar`` plus a
   radial penalty, and updating whichever sub-model is least certain
   there, until the composite's sign prediction at the selected point is
   trusted at the 2-sigma level.

Every limit-state call goes through :class:`LsfHandle`, whose counter is
the single source of truth for evaluation budgets.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .distributions import Distribution, derive_seed, to_physical
from .errors import ConfigError, DegenerateProbeError, EvaluationError
from .hdmr import (
    SIGMA_FLOOR,
    CompositeSurrogate,
    SubSurrogate,
    _kriging_eval,
    coupling_index,
    embed_point,
    sigma_bar,
    sigma_bar_sub,
)
from .hdmr import predict as composite_predict
from .kriging import DoeSet, fit
from .kriging import predict as kriging_predict
from .mcs import McsResult, estimate_pf
from .pso import SwarmConfig, minimize

U_THRESHOLD = 2.0
STAGE1_GRID = 1001
SUMMARY_GRID_2D = 41

# seed-space domains, one per independent random decision
_T_STAGE1 = 1
_T_STAGE2 = 2
_T_STAGE3 = 3
_T_MCS = 5
_T_FIT = 7
_T_SELECT = 8


@dataclass(frozen=True)
class AlParams:
    """Active-learning control parameters.

    ``pairs`` (0-based, i < j) predetermines the second-order sub-models
    and skips coupling identification entirely; otherwise ``n_coupling``
    pairs with the largest index magnitude are selected.
    """

    delta: float = 0.001
    alpha: float = 0.05
    r_s: float = 2.8
    r_c: float = 3.5
    u_lim: float = 6.0
    du_init: float = 6.0
    du_coupling: float = 2.0
    n_coupling: int = 0
    pairs: tuple[tuple[int, int], ...] | None = None
    max_updates: int = 500
    min_updates: int = 0
    stage1_min_added: int = 1
    stage3_min_per_pair: int = 2
    first_order_only: bool = False
    stop_mu_composite: bool = True
    coupling_literal_sign: bool = False

    def __post_init__(self):
        if not 0.0 < self.r_s <= self.r_c <= self.u_lim:
            raise ConfigError(
                f"radii must satisfy 0 < r_s <= r_c <= u_lim, got "
                f"r_s={self.r_s}, r_c={self.r_c}, u_lim={self.u_lim}"
            )
        if self.alpha <= 0.0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.du_init <= 6.0:
            raise ConfigError(f"du_init must be in (0, 6], got {self.du_init}")
        if self.du_coupling <= 0.0:
            raise ConfigError(f"du_coupling must be positive, got {self.du_coupling}")
        if self.n_coupling < 0:
            raise ConfigError(f"n_coupling must be >= 0, got {self.n_coupling}")
        if (
            self.max_updates < 0
            or self.min_updates < 0
            or self.stage1_min_added < 0
            or self.stage3_min_per_pair < 0
        ):
            raise ConfigError("update limits must be >= 0")
        if not math.isfinite(self.delta):
            raise ConfigError("delta must be finite")
        if self.pairs is not None:
            pairs = tuple(tuple(int(v) for v in p) for p in self.pairs)
            object.__setattr__(self, "pairs", pairs)
            for p in pairs:
                if len(p) != 2 or not 0 <= p[0] < p[1]:
                    raise ConfigError(f"invalid pair {p}; need 0 <= i < j")
            if len(set(pairs)) != len(pairs):
                raise ConfigError("duplicate entries in pairs")


class LsfHandle:
    """Counted access to the limit state function.

    ``evaluator`` works in physical space on ``(n, d)`` batches; callers
    pass standard-normal coordinates and the marginal transform is applied
    here. The counter increases by exactly one per evaluated sample.
    """

    def __init__(self, evaluator: Callable, dists: list[Distribution]):
        self.evaluator = evaluator
        self.dists = list(dists)
        self.n_calls = 0

    @property
    def n_dim(self) -> int:
        return len(self.dists)

    def eval_u(self, u: np.ndarray) -> float | np.ndarray:
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        ub = u[None, :] if single else u
        x = to_physical(ub, self.dists)
        values = np.asarray(self.evaluator(x), dtype=float).ravel()
        if values.shape[0] != ub.shape[0]:
            raise EvaluationError(
                f"LSF returned {values.shape[0]} values for {ub.shape[0]} samples"
            )
        if not np.all(np.isfinite(values)):
            idx = int(np.argmax(~np.isfinite(values)))
            raise EvaluationError(
                f"LSF returned a non-finite value at u={ub[idx].tolist()}"
            )
        self.n_calls += ub.shape[0]
        return float(values[0]) if single else values


@dataclass
class RunRecord:
    """Bookkeeping for one full analysis run."""

    seed: int
    n_call_total: int = 0
    n_call_probe: int = 0
    stage1_added: dict = field(default_factory=dict)
    coupling_indices: list = field(default_factory=list)
    selected_pairs: list = field(default_factory=list)
    stage3_updates: int = 0
    stage3_stop: str = ""
    truncated: bool = False
    submodels: list = field(default_factory=list)

    @property
    def n_call_doe(self) -> int:
        return self.n_call_total - self.n_call_probe

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_call_total": self.n_call_total,
            "n_call_doe": self.n_call_doe,
            "n_call_probe": self.n_call_probe,
            "stage1_added": dict(self.stage1_added),
            "coupling_indices": [
                {"pair": [i + 1, j + 1], "value": v} for (i, j), v in self.coupling_indices
            ],
            "selected_pairs": [[i + 1, j + 1] for i, j in self.selected_pairs],
            "stage3_updates": self.stage3_updates,
            "stage3_stop": self.stage3_stop,
            "truncated": self.truncated,
            "submodels": list(self.submodels),
        }


def _emit(recorder, event: dict, cs=None) -> None:
    if recorder is not None:
        recorder(event, cs)


def _max_sigma2_1d(model, u_lim: float, pso_cfg: SwarmConfig, seed: int):
    """Largest prediction variance of a 1-D model over [-u_lim, u_lim].

    PSO drives the search; a fixed verification grid backs it up so the
    stage-1 stopping contract holds on the grid by construction.
    """

    def objective(x: np.ndarray) -> np.ndarray:
        _, var = kriging_predict(model, x)
        return -var

    cfg = replace(pso_cfg, n_swarm=min(pso_cfg.n_swarm, 20), seed=seed)
    result = minimize(objective, np.array([[-u_lim, u_lim]]), cfg)
    best_u = float(result.x[0])
    best_var = -result.f

    grid = np.linspace(-u_lim, u_lim, STAGE1_GRID)[:, None]
    _, var_grid = kriging_predict(model, grid)
    g_idx = int(np.argmax(var_grid))
    if var_grid[g_idx] > best_var:
        best_var = float(var_grid[g_idx])
        best_u = float(grid[g_idx, 0])
    return best_var, best_u


def build_first_order(
    lsf: LsfHandle,
    params: AlParams,
    pso_cfg: SwarmConfig = SwarmConfig(),
    seed: int = 0,
    cut_point: np.ndarray | None = None,
    recorder=None,
    record: RunRecord | None = None,
) -> CompositeSurrogate:
    """Stage 1: train one-variable sub-models for every input.

    Each variable starts from three points ``(cut - du, cut, cut + du)``;
    the cut-point response is evaluated once and shared by every variable
    and by the composite constant.
    """
    nd = lsf.n_dim
    if nd < 1:
        raise ConfigError("need at least one random variable")
    cut = np.zeros(nd) if cut_point is None else np.asarray(cut_point, dtype=float).ravel()
    if cut.shape[0] != nd:
        raise ConfigError(f"cut point dimension {cut.shape[0]} != {nd}")

    g0 = float(lsf.eval_u(cut))
    firsts = []
    for i in range(nd):
        var_seed = derive_seed(seed, _T_STAGE1, i)
        lo = np.array([cut[i] - params.du_init])
        hi = np.array([cut[i] + params.du_init])
        full_lo = cut.copy()
        full_lo[i] -= params.du_init
        full_hi = cut.copy()
        full_hi[i] += params.du_init
        responses = np.array([lsf.eval_u(full_lo), g0, lsf.eval_u(full_hi)])
        doe = DoeSet(
            points=np.array([lo, [cut[i]], hi]),
            responses=responses,
        )

        added = 0
        while True:
            model = fit(doe, seed=derive_seed(var_seed, _T_FIT, added))
            var_max, u_star = _max_sigma2_1d(
                model, params.u_lim, pso_cfg, derive_seed(var_seed, _T_SELECT, added)
            )
            sigma_max = math.sqrt(max(var_max, 0.0))
            y_range = float(doe.responses.max() - doe.responses.min())
            threshold = params.alpha * y_range if y_range > 0.0 else params.alpha
            # the three symmetric starting points cannot distinguish a true
            # line from an odd nonlinearity sampled at its collinear nodes,
            # so the stopping test is only trusted after a minimum number of
            # adaptive samples (unless the model is already exact)
            settled = added >= params.stage1_min_added or sigma_max < 1e-9
            if sigma_max < threshold and settled:
                break
            if added >= params.max_updates:
                warnings.warn(
                    f"stage 1 hit the update cap for variable {i + 1}", stacklevel=2
                )
                break
            if doe.contains(np.array([u_star])):
                break
            full = cut.copy()
            full[i] = u_star
            y_new = float(lsf.eval_u(full))
            doe = doe.appended(np.array([u_star]), y_new)
            added += 1
            _emit(
                recorder,
                {
                    "event": "stage1_update",
                    "variable": i + 1,
                    "u": u_star,
                    "sigma_max": sigma_max,
                    "threshold": threshold,
                    "n_call": lsf.n_calls,
                },
            )

        firsts.append(SubSurrogate(var_indices=(i,), model=model))
        if record is not None:
            record.stage1_added[f"G{i + 1}"] = added

    cs = CompositeSurrogate(cut_point=cut, g0=g0, first_order=tuple(firsts))
    _emit(recorder, {"event": "stage1_done", "n_call": lsf.n_calls}, cs)
    return cs


def _cross_embedded_doe(cs: CompositeSurrogate, i: int, j: int) -> DoeSet:
    """Initial 2-D DoE for pair (i, j) reusing all stage-1 responses.

    Variable i's samples become ``(u, cut_j)`` and variable j's become
    ``(cut_i, v)``; the embedded full-space points coincide with the
    stage-1 ones, so the stored responses transfer without new calls. The
    shared cut point appears in both sets and is kept once.
    """
    di = cs.first_for(i).doe
    dj = cs.first_for(j).doe
    ci, cj = cs.cut_point[i], cs.cut_point[j]
    points = [np.array([u, cj]) for u in di.points[:, 0]]
    responses = list(di.responses)
    for v, y in zip(dj.points[:, 0], dj.responses):
        candidate = np.array([ci, v])
        gaps = np.sqrt(((np.array(points) - candidate) ** 2).sum(axis=1))
        if gaps.min() < 1e-6:
            continue
        points.append(candidate)
        responses.append(y)
    return DoeSet(points=np.array(points), responses=np.array(responses))


def identify_couplings(
    lsf: LsfHandle,
    cs: CompositeSurrogate,
    params: AlParams,
    seed: int = 0,
    recorder=None,
    record: RunRecord | None = None,
) -> tuple[CompositeSurrogate, list]:
    """Stage 2: rank pair couplings and initialize the selected sub-models.

    With an explicit ``params.pairs`` list no probes are evaluated at all.
    Probe evaluations are limit-state calls but never enter any DoE.
    """
    nd = cs.n_dim
    ranked: list[tuple[tuple[int, int], float]] = []

    if params.pairs is not None:
        selected = [tuple(p) for p in params.pairs]
        for i, j in selected:
            if not 0 <= i < j < nd:
                raise ConfigError(f"pair ({i + 1}, {j + 1}) out of range")
    elif params.n_coupling == 0:
        return cs, ranked
    else:
        for i in range(nd):
            for j in range(i + 1, nd):
                try:
                    value = coupling_index(
                        lsf, cs, i, j, params.du_coupling, params.coupling_literal_sign
                    )
                except DegenerateProbeError:
                    warnings.warn(
                        f"skipping pair ({i + 1}, {j + 1}): probe response is "
                        "numerically zero",
                        stacklevel=2,
                    )
                    continue
                ranked.append(((i, j), value))
                _emit(
                    recorder,
                    {
                        "event": "stage2_index",
                        "pair": (i + 1, j + 1),
                        "value": value,
                        "n_call": lsf.n_calls,
                    },
                )
        ranked.sort(key=lambda item: (-abs(item[1]), item[0]))
        selected = [pair for pair, _ in ranked[: params.n_coupling]]

    seconds = []
    for i, j in selected:
        doe = _cross_embedded_doe(cs, i, j)
        model = fit(doe, seed=derive_seed(seed, _T_STAGE2, _T_FIT, i, j))
        seconds.append(SubSurrogate(var_indices=(i, j), model=model))

    if record is not None:
        record.coupling_indices = list(ranked)
        record.selected_pairs = list(selected)
    cs = replace(cs, second_order=tuple(seconds))
    _emit(recorder, {"event": "stage2_done", "pairs": selected, "n_call": lsf.n_calls}, cs)
    return cs, ranked


def penalty_coefficient(y_min: float, y_max: float, n_dim: int) -> float:
    """Radial penalty scale from the current global response range."""
    return math.sqrt(2.0 / n_dim) * (y_max - y_min) / 4.0


def refinement_objective(
    cs: CompositeSurrogate, delta: float, penalty: float, r_s: float, r_c: float
):
    """Stage-3 sample selection objective (vectorized over candidates).

    Inside the inner radius the value is exactly the U-learning term
    ``|mean - delta| / sigma_bar``; the radial penalty only activates
    beyond ``r_s`` and doubles beyond ``r_c``.
    """

    def objective(u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        mean = np.atleast_1d(composite_predict(cs, u))
        sig, _ = sigma_bar(cs, u)
        sig = np.maximum(np.atleast_1d(sig), SIGMA_FLOOR)
        radius = np.sqrt((u**2).sum(axis=1))
        pen = np.maximum(radius - r_c, 0.0) + np.maximum(radius - r_s, 0.0)
        return np.abs(mean - delta) / sig + penalty * pen

    return objective


def _global_response_range(cs: CompositeSurrogate) -> tuple[float, float]:
    values = np.concatenate([sub.doe.responses for sub in cs.submodels()])
    return float(values.min()), float(values.max())


def _pair_completion_point(
    cs: CompositeSurrogate,
    sub: SubSurrogate,
    params: AlParams,
    penalty: float,
    pso_cfg: SwarmConfig,
    seed: int,
) -> np.ndarray:
    """Most informative sample as judged by one pair model's uncertainty.

    Same shape as the stage-3 objective, but with the uncertainty of the
    single sub-model being verified, so the chosen point sits where that
    pair matters for the limit state.
    """
    idx = list(sub.var_indices)

    def objective(u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        mean = np.atleast_1d(composite_predict(cs, u))
        _, var = _kriging_eval(sub, u[:, idx])
        sig = np.maximum(np.sqrt(var), SIGMA_FLOOR)
        radius = np.sqrt((u**2).sum(axis=1))
        pen = np.maximum(radius - params.r_c, 0.0) + np.maximum(radius - params.r_s, 0.0)
        return np.abs(mean - params.delta) / sig + penalty * pen

    bounds = np.tile((-params.u_lim, params.u_lim), (cs.n_dim, 1))
    cfg = replace(pso_cfg, seed=seed)
    result = minimize(objective, bounds, cfg)
    return result.x[idx]


def refine_composite(
    lsf: LsfHandle,
    cs: CompositeSurrogate,
    params: AlParams,
    pso_cfg: SwarmConfig = SwarmConfig(),
    seed: int = 0,
    recorder=None,
    record: RunRecord | None = None,
) -> CompositeSurrogate:
    """Stage 3: refine sub-models near the limit state surface.

    Each update adds exactly one point to exactly one sub-model (the one
    with the largest uncertainty at the selected sample) and refits it.
    Pair models identified by probing start from axis-only data that says
    nothing about their off-axis behavior, so each owes a minimum number
    of adaptive samples before the stop test is trusted; predetermined
    pairs (explicit problem structure) are exempt.
    """
    nd = cs.n_dim
    bounds = np.tile((-params.u_lim, params.u_lim), (nd, 1))
    updates = 0
    stop = "converged"
    truncated = False
    if params.pairs is None:
        owed = {sub.var_indices: params.stage3_min_per_pair for sub in cs.second_order}
    else:
        owed = {}

    while True:
        if updates >= params.max_updates:
            stop = "update cap reached"
            truncated = True
            warnings.warn("stage 3 stopped at the update cap", stacklevel=2)
            break
        y_min, y_max = _global_response_range(cs)
        p = penalty_coefficient(y_min, y_max, nd)
        objective = refinement_objective(cs, params.delta, p, params.r_s, params.r_c)
        cfg = replace(pso_cfg, seed=derive_seed(seed, _T_STAGE3, _T_SELECT, updates))
        result = minimize(objective, bounds, cfg)
        u_star = result.x

        _, sub = sigma_bar_sub(cs, u_star)
        proj = u_star[list(sub.var_indices)]
        if params.stop_mu_composite:
            mu = float(composite_predict(cs, u_star))
        else:
            mu = float(np.atleast_1d(sub.model.predict_mean(proj[None, :]))[0])
        sigma = float(np.atleast_1d(sub.model.predict_std(proj[None, :]))[0])
        u_learn = abs(mu) / max(sigma, SIGMA_FLOOR)
        if u_learn >= U_THRESHOLD and updates >= params.min_updates:
            still_owed = [pair for pair, owe in sorted(owed.items()) if owe > 0]
            if not still_owed:
                break
            # divert the update to a pair model that still owes samples
            target = still_owed[0]
            sub = next(s for s in cs.second_order if s.var_indices == target)
            proj = _pair_completion_point(
                cs, sub, params, p, pso_cfg,
                derive_seed(seed, _T_STAGE3, _T_SELECT, updates, 1),
            )
            if sub.doe.contains(proj):
                owed[target] = 0
                continue
        if sub.doe.contains(proj):
            stop = "duplicate sample"
            break

        y_new = float(lsf.eval_u(embed_point(sub, proj, cs.cut_point)))
        new_doe = sub.doe.appended(proj, y_new)
        new_model = fit(new_doe, seed=derive_seed(seed, _T_STAGE3, _T_FIT, updates))
        cs = cs.with_replaced(SubSurrogate(var_indices=sub.var_indices, model=new_model))
        if owed.get(sub.var_indices, 0) > 0:
            owed[sub.var_indices] -= 1
        updates += 1
        _emit(
            recorder,
            {
                "event": "stage3_update",
                "submodel": sub.label,
                "u_learning": u_learn,
                "objective": result.f,
                "n_call": lsf.n_calls,
            },
            cs,
        )

    if record is not None:
        record.stage3_updates = updates
        record.stage3_stop = stop
        record.truncated = record.truncated or truncated
    _emit(recorder, {"event": "stage3_done", "stop": stop, "n_call": lsf.n_calls}, cs)
    return cs


def _submodel_summaries(cs: CompositeSurrogate, u_lim: float) -> list[dict]:
    out = []
    for sub in sorted(cs.submodels(), key=lambda s: s.sort_key()):
        if sub.order == 1:
            grid = np.linspace(-u_lim, u_lim, STAGE1_GRID)[:, None]
        else:
            axis = np.linspace(-u_lim, u_lim, SUMMARY_GRID_2D)
            gx, gy = np.meshgrid(axis, axis)
            grid = np.column_stack([gx.ravel(), gy.ravel()])
        _, var = _kriging_eval(sub, grid)
        out.append(
            {
                "label": sub.label,
                "order": sub.order,
                "variables": [v + 1 for v in sub.var_indices],
                "doe_size": sub.doe.m,
                "sigma_max": float(np.sqrt(var.max())),
            }
        )
    return out


def run_analysis(problem, seed: int, recorder=None) -> tuple[CompositeSurrogate, McsResult, RunRecord]:
    """Full pipeline: stages 1-3 then Monte Carlo on the composite.

    ``problem`` carries distributions, the physical-space evaluator and
    all stage parameters (see :class:`relhdmr.config.ProblemDefinition`).
    Deterministic given ``seed``, regardless of worker thread count.
    """
    lsf = LsfHandle(problem.lsf, problem.dists)
    params = problem.al
    record = RunRecord(seed=seed)

    cs = build_first_order(
        lsf,
        params,
        pso_cfg=problem.pso,
        seed=derive_seed(seed, _T_STAGE1),
        recorder=recorder,
        record=record,
    )

    before_stage2 = lsf.n_calls
    cs, _ = identify_couplings(
        lsf,
        cs,
        params,
        seed=derive_seed(seed, _T_STAGE2),
        recorder=recorder,
        record=record,
    )
    record.n_call_probe = lsf.n_calls - before_stage2

    if cs.second_order or not params.first_order_only:
        cs = refine_composite(
            lsf,
            cs,
            params,
            pso_cfg=problem.pso,
            seed=derive_seed(seed, _T_STAGE3),
            recorder=recorder,
            record=record,
        )
    else:
        record.stage3_stop = "skipped (first-order only)"

    record.n_call_total = lsf.n_calls
    record.submodels = _submodel_summaries(cs, params.u_lim)
    _emit(recorder, {"event": "analysis_done", "n_call": lsf.n_calls}, cs)

    def predictor(u: np.ndarray) -> np.ndarray:
        return composite_predict(cs, u)

    mcs_cfg = problem.mcs
    result = estimate_pf(
        predictor,
        problem.dists,
        n_mc=mcs_cfg.n,
        seed=derive_seed(seed, _T_MCS),
        batch=mcs_cfg.batch,
        max_cov=mcs_cfg.max_cov,
        auto_grow=mcs_cfg.auto_grow,
        cap=mcs_cfg.cap,
    )
    return cs, result, record
