"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete. The full suite performs the multi-run benchmark
protocols and takes several minutes.
"""

import time

import numpy as np
import pytest
from scipy.stats import norm

from relhdmr.active_learning import (
    AlParams,
    LsfHandle,
    RunRecord,
    build_first_order,
    identify_couplings,
    run_analysis,
)
from relhdmr.benchmarks import (
    builtin_config,
    bundled_truss,
    lsf_coupled,
    lsf_example1,
)
from relhdmr.config import parse_problem
from relhdmr.distributions import Distribution, to_physical
from relhdmr.errors import ConfigError
from relhdmr.hdmr import CompositeSurrogate, SubSurrogate, predict as composite_predict
from relhdmr.hdmr import sigma_bar
from relhdmr.kriging import DoeSet, fit
from relhdmr.kriging import predict as kriging_predict
from relhdmr.mcs import cov_of, estimate_pf
from relhdmr.pso import SwarmConfig, minimize
from relhdmr.report import RunRow, build_report, strip_volatile
from relhdmr.truss import lsf_truss

PHI_M35 = float(norm.cdf(-3.5))  # 2.3263e-4


_CAPTURE = None


@pytest.fixture(autouse=True)
def _passthrough(capfd):
    # allow _announce to bypass pytest's capture so the per-criterion
    # lines are visible in any invocation, teed logs included
    global _CAPTURE
    _CAPTURE = capfd
    yield
    _CAPTURE = None


def _announce(n, text, ok=True):
    status = "PASS" if ok else "FAIL"
    line = f"\nACCEPTANCE {n}: {text} ... {status}"
    if _CAPTURE is not None:
        with _CAPTURE.disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)


def _protocol_runs(example, runs, seeds=None, nd=None, mcs_n=None, **al_overrides):
    cfg = builtin_config(example, nd=nd)
    if mcs_n is not None:
        cfg["mcs"] = {"n": mcs_n}
    cfg["al"].update(al_overrides)
    problem = parse_problem(cfg)
    seeds = seeds if seeds is not None else range(runs)
    results = []
    for k in seeds:
        results.append(run_analysis(problem, seed=problem.base_seed + k))
    return problem, results


def test_criterion_1_linear_nd20():
    """Linear benchmark, 20 variables, 10 runs at 2e6 Monte Carlo samples."""
    t0 = time.time()
    problem, results = _protocol_runs("linear", runs=10, nd=20)
    pf_mean = np.mean([res.pf for _, res, _ in results])
    n_call_mean = np.mean([rec.n_call_total for _, _, rec in results])
    elapsed = time.time() - t0

    ok_pf = abs(pf_mean - PHI_M35) / PHI_M35 <= 0.10
    ok_calls = n_call_mean <= 90.0
    _announce(
        1,
        f"linear nd=20: pf_mean={pf_mean:.4e} (ref {PHI_M35:.4e}, "
        f"err {100 * abs(pf_mean - PHI_M35) / PHI_M35:.2f}%), "
        f"n_call_mean={n_call_mean:.1f} (<=90), {elapsed:.0f}s",
        ok_pf and ok_calls,
    )
    assert ok_pf
    assert ok_calls


def test_criterion_2_linear_scaling():
    """Call budget grows linearly across 20/40/60 variables."""
    means = {}
    for nd in (20, 40, 60):
        _, results = _protocol_runs("linear", runs=3, nd=nd, mcs_n=10_000)
        means[nd] = np.mean([rec.n_call_total for _, _, rec in results])

    published = {20: 61.6, 40: 121.1, 60: 181.3}
    ok = True
    for nd in (40, 60):
        ratio = means[nd] / means[20]
        ref_ratio = published[nd] / published[20]
        ok &= abs(ratio - ref_ratio) / ref_ratio <= 0.35
    per_dim = {nd: means[nd] / nd for nd in means}
    ok &= all(1.95 <= v <= 4.455 for v in per_dim.values())  # 3..3.3 +-35%

    _announce(
        2,
        "linear scaling: n_call means "
        + ", ".join(f"nd={nd}: {means[nd]:.1f}" for nd in sorted(means)),
        ok,
    )
    assert ok


def test_criterion_3_coupled_nd20():
    """Coupled benchmark, 20 variables: accuracy against an own direct reference."""
    cfg = builtin_config("coupled", nd=20)
    problem = parse_problem(cfg)

    def direct(u):
        return lsf_coupled(to_physical(u, problem.dists), 95_000.0)

    ref = estimate_pf(direct, problem.dists, n_mc=1_000_000, seed=913)
    ok_ref = abs(ref.pf - 3.414e-2) / 3.414e-2 <= 0.03

    _, results = _protocol_runs("coupled", runs=10, nd=20)
    pf_mean = np.mean([res.pf for _, res, _ in results])
    n_call_mean = np.mean([rec.n_call_total for _, _, rec in results])
    ok_pf = abs(pf_mean - ref.pf) / ref.pf <= 0.05
    ok_calls = n_call_mean <= 120.0

    _announce(
        3,
        f"coupled nd=20: direct={ref.pf:.4e} (published 3.414e-2), "
        f"pf_mean={pf_mean:.4e} (err {100 * abs(pf_mean - ref.pf) / ref.pf:.2f}%), "
        f"n_call_mean={n_call_mean:.1f} (<=120)",
        ok_ref and ok_pf and ok_calls,
    )
    assert ok_ref
    assert ok_pf
    assert ok_calls


def test_criterion_4_example1():
    """3-variable benchmark: coupling selection, index values, accuracy."""
    std = Distribution("normal", 0, 1)
    lsf = LsfHandle(lsf_example1, [std] * 3)
    params = AlParams(alpha=0.01, n_coupling=2)
    record = RunRecord(seed=0)
    cs = build_first_order(lsf, params, seed=1, record=record)
    cs, ranked = identify_couplings(lsf, cs, params, seed=2, record=record)
    values = {pair: value for pair, value in ranked}

    ok_pairs = set(record.selected_pairs) == {(0, 1), (1, 2)}
    ok_c23 = abs(values[(1, 2)] - 0.2638) / 0.2638 <= 0.20
    ok_c13 = abs(values[(0, 2)]) < 1e-3

    ref = estimate_pf(
        lambda u: lsf_example1(u), [std] * 3, n_mc=1_000_000, seed=914
    )
    _, results = _protocol_runs("example1", runs=10)
    pf_mean = np.mean([res.pf for _, res, _ in results])
    ok_pf = abs(pf_mean - ref.pf) / ref.pf <= 0.05

    # soft check only: the published estimate printed as "0.6834%" matches
    # the observed value as a fraction, so it is reported, not asserted
    soft = abs(pf_mean - 0.6834) / 0.6834

    _announce(
        4,
        f"example1: pairs={sorted(record.selected_pairs)}, "
        f"C23={values[(1, 2)]:.4f} (0.2638 +-20%), C13={values[(0, 2)]:.2e} (<1e-3), "
        f"pf_mean={pf_mean:.5f} vs direct {ref.pf:.5f} "
        f"(err {100 * abs(pf_mean - ref.pf) / ref.pf:.2f}%); "
        f"soft check vs published 0.6834 (as fraction): {100 * soft:.2f}%",
        ok_pairs and ok_c23 and ok_c13 and ok_pf,
    )
    assert ok_pairs
    assert ok_c23
    assert ok_c13
    assert ok_pf


@pytest.mark.parametrize("example,runs", [("truss10", 3), ("truss30", 2)])
def test_criterion_5_truss(example, runs):
    """Implicit truss benchmark: accuracy against direct simulation."""
    model = bundled_truss(example)
    evaluator = lsf_truss(model)
    cfg = builtin_config(example)
    problem = parse_problem(cfg)

    def direct(u):
        return evaluator(to_physical(u, problem.dists))

    ref = estimate_pf(direct, problem.dists, n_mc=1_000_000, seed=915, batch=20_000)

    _, results = _protocol_runs(example, runs=runs)
    pf_mean = np.mean([res.pf for _, res, _ in results])
    n_call_mean = np.mean([rec.n_call_total for _, _, rec in results])

    ok_pf = abs(pf_mean - ref.pf) / ref.pf <= 0.10
    ok_budget = n_call_mean < 0.15 * ref.n_mc

    _announce(
        5,
        f"{example}: direct={ref.pf:.4e}, pf_mean={pf_mean:.4e} "
        f"(err {100 * abs(pf_mean - ref.pf) / ref.pf:.2f}%, runs={runs}), "
        f"n_call_mean={n_call_mean:.1f} (<15% of {ref.n_mc})",
        ok_pf and ok_budget,
    )
    assert ok_pf
    assert ok_budget


def test_criterion_6_property_suites():
    """Randomized property sweeps across all numeric kernels."""
    rng = np.random.default_rng(2024)

    # Kriging interpolation exactness and variance non-negativity
    fits = 0
    for trial in range(1000):
        m = int(rng.integers(3, 8))
        d = int(rng.integers(1, 3))
        pts = rng.uniform(-6, 6, size=(m, d))
        resp = rng.normal(size=m) * rng.uniform(0.5, 20)
        try:
            doe = DoeSet(points=pts, responses=resp)
        except ConfigError:
            continue
        model = fit(doe, seed=trial)
        mean, var = kriging_predict(model, pts)
        scale = max(1.0, np.abs(resp).max())
        assert np.all(np.abs(mean - resp) <= 1e-8 * scale)
        assert np.all(var >= 0.0)
        fits += 1
    assert fits > 950

    # HDMR cut-point identity and additive-function exactness
    m0 = fit(DoeSet(points=np.linspace(-6, 6, 12)[:, None],
                    responses=0.8 * np.linspace(-6, 6, 12) + 3.0), seed=0)
    m1 = fit(DoeSet(points=np.linspace(-6, 6, 12)[:, None],
                    responses=-1.5 * np.linspace(-6, 6, 12) + 3.0), seed=1)
    cs = CompositeSurrogate(
        cut_point=np.zeros(2),
        g0=3.0,
        first_order=(
            SubSurrogate(var_indices=(0,), model=m0),
            SubSurrogate(var_indices=(1,), model=m1),
        ),
    )
    assert composite_predict(cs, np.zeros(2)) == pytest.approx(3.0, abs=1e-8)
    pts2 = rng.uniform(-6, 6, size=(200, 2))
    truth = 0.8 * pts2[:, 0] - 1.5 * pts2[:, 1] + 3.0
    assert np.abs(composite_predict(cs, pts2) - truth).max() < 5e-3

    # sigma_bar equals the enumerated maximum
    for _ in range(50):
        u = rng.uniform(-6, 6, size=2)
        value, _ = sigma_bar(cs, u)
        brute = max(
            float(np.sqrt(kriging_predict(sub.model, u[list(sub.var_indices)][None, :])[1][0]))
            for sub in cs.submodels()
        )
        assert value == pytest.approx(brute, rel=1e-12)

    # PSO: monotone trace, feasibility, determinism, sphere convergence
    box = np.array([[-6.0, 6.0], [-6.0, 6.0]])
    sphere = lambda x: (x**2).sum(axis=1)  # noqa: E731
    passing = 0
    for seed in range(100):
        res = minimize(sphere, box, SwarmConfig(seed=seed))
        assert np.all(np.diff(res.trace) <= 0)
        assert np.all((res.x >= -6.0) & (res.x <= 6.0))
        if res.f < 1e-3:
            passing += 1
    assert passing >= 99
    again = minimize(sphere, box, SwarmConfig(seed=42))
    assert again.f == minimize(sphere, box, SwarmConfig(seed=42)).f

    # MCS batch invariance
    dists = [Distribution("normal", 0, 1)] * 2
    pred = lambda u: u[:, 0] + 1.0  # noqa: E731
    pfs = {
        batch: estimate_pf(pred, dists, n_mc=200_000, seed=5, batch=batch).pf
        for batch in (1_000, 7_919, 200_000)
    }
    assert len(set(pfs.values())) == 1

    # Coefficient-of-variation arithmetic against the published column
    # The nd=40 row's printed pair (pf, cov) is internally inconsistent
    # under the formula itself, so exact arithmetic is the oracle there.
    published = {2.307e-4: 4.658, 2.326e-4: 4.638, 2.345e-4: 4.620}
    for pf, cov_pct in published.items():
        assert 100 * cov_of(pf, 2_000_000) == pytest.approx(cov_pct, abs=0.01)
    inconsistent_row = 100 * cov_of(2.339e-4, 2_000_000)
    assert inconsistent_row == pytest.approx(4.623, abs=0.01)  # not the printed 4.606

    _announce(
        6,
        f"property suites: {fits} randomized fits interpolate, sphere "
        f"convergence {passing}/100, batch-invariant MCS, cov column checked "
        f"(nd=40 printed value 4.606 is formula-inconsistent; exact {inconsistent_row:.3f})",
    )


def test_criterion_7_determinism(monkeypatch):
    """Identical reports for repeated seeds and any worker thread count."""
    cfg = builtin_config("example1")
    cfg["mcs"] = {"n": 100_000}
    problem = parse_problem(cfg)

    def one_report():
        rows = []
        for k in range(2):
            _, mcs_result, record = run_analysis(problem, seed=problem.base_seed + k)
            rows.append(RunRow(index=k, record=record, mcs=mcs_result, reference_pf=None))
        return strip_volatile(build_report(problem.config_echo, rows))

    monkeypatch.setenv("RELHDMR_THREADS", "1")
    first = one_report()
    second = one_report()
    monkeypatch.setenv("RELHDMR_THREADS", "4")
    threaded = one_report()

    ok = first == second == threaded
    _announce(7, "determinism across repeats and thread counts", ok)
    assert ok
