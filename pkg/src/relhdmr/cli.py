"""Batch front-end: run configured analyses and emit reports and traces.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.
Worker-thread parallelism for Monte Carlo batches is capped by the
``RELHDMR_THREADS`` environment variable; results are identical for any
thread count.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .active_learning import run_analysis
from .benchmarks import BENCHMARK_EXAMPLES, PUBLISHED_ROWS, builtin_config
from .config import ProblemDefinition, load_problem, parse_problem
from .distributions import derive_seed, to_physical
from .errors import ConfigError, RelhdmrError
from .hdmr import predict as composite_predict
from .mcs import estimate_pf
from .plotting import plot_doe_growth, plot_pf_trace, plot_runs_summary
from .report import RunRow, TraceRecorder, build_report, write_report, write_traces

_T_REFERENCE = 91
_T_TRACE = 92
TRACE_MCS_N = 100_000


def _reference_pfs(problem: ProblemDefinition, runs: int) -> tuple[list, dict | None]:
    """Resolve the per-run reference failure probabilities.

    A configured constant is shared; a direct-MCS reference is evaluated
    once on the raw limit state (or once per run when ``per_run`` is set,
    matching the strict per-run error convention).
    """
    ref = problem.reference
    if ref is None:
        return [None] * runs, None

    if ref.pf is not None:
        info = {"source": "configured", "pf": ref.pf}
        return [ref.pf] * runs, info

    def predictor(u: np.ndarray) -> np.ndarray:
        return problem.lsf(to_physical(u, problem.dists))

    if not ref.per_run:
        result = estimate_pf(
            predictor,
            problem.dists,
            n_mc=ref.direct_mcs_n,
            seed=ref.direct_mcs_seed,
            batch=problem.mcs.batch,
        )
        info = {
            "source": "direct_mcs",
            "pf": result.pf,
            "n_mc": result.n_mc,
            "seed": ref.direct_mcs_seed,
            "cov": result.cov,
        }
        return [result.pf] * runs, info

    pfs = []
    for k in range(runs):
        result = estimate_pf(
            predictor,
            problem.dists,
            n_mc=ref.direct_mcs_n,
            seed=derive_seed(ref.direct_mcs_seed, _T_REFERENCE, k),
            batch=problem.mcs.batch,
        )
        pfs.append(result.pf)
    info = {
        "source": "direct_mcs_per_run",
        "pf": float(np.mean(pfs)),
        "n_mc": ref.direct_mcs_n,
        "seed": ref.direct_mcs_seed,
    }
    return pfs, info


def execute_runs(
    problem: ProblemDefinition,
    runs: int,
    base_seed: int,
    trace_dir=None,
    plots: bool = True,
    out_path=None,
) -> dict:
    """Run the full multi-run protocol and assemble the report dict."""
    t_start = time.time()
    ref_pfs, ref_info = _reference_pfs(problem, runs)

    rows = []
    trace_csvs = []
    for k in range(runs):
        seed = base_seed + k
        recorder = None
        if trace_dir is not None:
            trace_seed = derive_seed(seed, _T_TRACE)

            def checkpoint(cs):
                return estimate_pf(
                    lambda u: composite_predict(cs, u),
                    problem.dists,
                    n_mc=min(problem.mcs.n, TRACE_MCS_N),
                    seed=trace_seed,
                    batch=problem.mcs.batch,
                ).pf

            recorder = TraceRecorder(pf_checkpoint=checkpoint)
        _, mcs_result, record = run_analysis(problem, seed=seed, recorder=recorder)
        rows.append(
            RunRow(index=k, record=record, mcs=mcs_result, reference_pf=ref_pfs[k])
        )
        if recorder is not None:
            written = write_traces(recorder, trace_dir, k)
            trace_csvs.extend(written)
        print(
            f"run {k}: pf={mcs_result.pf:.6e} cov={mcs_result.cov if mcs_result.cov is not None else float('nan'):.4f} "
            f"n_call={record.n_call_total}",
            file=sys.stderr,
        )

    timing = {"wall_seconds": time.time() - t_start}
    report = build_report(problem.config_echo, rows, reference=ref_info, timing=timing)

    if out_path is not None:
        write_report(report, out_path)
    if plots:
        _render_figures(report, out_path, trace_dir, trace_csvs, ref_info)
    return report


def _render_figures(report, out_path, trace_dir, trace_csvs, ref_info) -> None:
    if out_path is not None:
        stem = Path(out_path)
        plot_runs_summary(report, stem.with_name(stem.stem + "_pf_runs.png"))
    if trace_dir is not None:
        trace_dir = Path(trace_dir)
        pf_csvs = sorted(p for p in trace_csvs if p.name.endswith("_pf_trace.csv"))
        ref_pf = (ref_info or {}).get("pf")
        if pf_csvs:
            plot_pf_trace(pf_csvs, ref_pf, trace_dir / "pf_trace.png")
        for growth in sorted(p for p in trace_csvs if p.name.endswith("_doe_growth.csv")):
            plot_doe_growth(growth, growth.with_suffix(".png"))


def _print_summary(report: dict) -> None:
    agg = report["aggregates"]
    parts = [
        f"runs={agg['n_runs']}",
        f"pf_mean={agg['pf_mean']:.6e}",
        f"n_call_mean={agg['n_call_mean']:.1f}" if agg["n_call_mean"] is not None else "",
    ]
    if agg["rel_error_mean_abs_pct"] is not None:
        parts.append(f"rel_err_mean={agg['rel_error_mean_abs_pct']:.2f}%")
    if agg["cov_mean"] is not None:
        parts.append(f"cov_mean={100 * agg['cov_mean']:.3f}%")
    print("  ".join(p for p in parts if p))


def cmd_run(args) -> int:
    problem = load_problem(args.config)
    runs = args.runs if args.runs is not None else problem.runs
    base_seed = args.seed if args.seed is not None else problem.base_seed
    report = execute_runs(
        problem,
        runs=runs,
        base_seed=base_seed,
        trace_dir=args.trace_dir,
        plots=not args.no_plots,
        out_path=args.out,
    )
    _print_summary(report)
    return 0


def cmd_benchmark(args) -> int:
    config = builtin_config(args.example, nd=args.nd)
    problem = parse_problem(config)
    runs = args.runs if args.runs is not None else problem.runs
    base_seed = args.seed if args.seed is not None else problem.base_seed
    report = execute_runs(
        problem,
        runs=runs,
        base_seed=base_seed,
        trace_dir=args.trace_dir,
        plots=not args.no_plots,
        out_path=args.out,
    )
    agg = report["aggregates"]
    nd = problem.n_dim
    published = PUBLISHED_ROWS.get(args.example, {}).get(nd)

    def fmt(n_call, pf, err, cov):
        cov_txt = f"{cov:.3f}" if cov is not None else "-"
        err_txt = f"{err:.2f}" if err is not None else "-"
        return f"{n_call:>10.1f}  {pf:>12.4e}  {err_txt:>8}  {cov_txt:>8}"

    print(f"\nbenchmark {args.example} (nd={nd}, runs={agg['n_runs']})")
    print(f"{'':12}{'N_call':>10}  {'pf_mean':>12}  {'err %':>8}  {'cov %':>8}")
    cov_pct = 100 * agg["cov_mean"] if agg["cov_mean"] is not None else None
    print(f"{'this run':12}" + fmt(agg["n_call_mean"], agg["pf_mean"],
                                   agg["rel_error_mean_abs_pct"], cov_pct))
    if published is not None:
        print(f"{'published':12}" + fmt(*published))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relhdmr",
        description="Active-learning Kriging-HDMR reliability analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run analyses from a JSON problem config")
    run_p.add_argument("--config", required=True, help="problem definition JSON")
    run_p.add_argument("--runs", type=int, default=None, help="override run count")
    run_p.add_argument("--seed", type=int, default=None, help="override base seed")
    run_p.add_argument("--out", default=None, help="report JSON output path")
    run_p.add_argument("--trace-dir", default=None, help="write per-run CSV traces here")
    run_p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    run_p.set_defaults(func=cmd_run)

    bench_p = sub.add_parser("benchmark", help="run a built-in benchmark protocol")
    bench_p.add_argument("--example", required=True, choices=BENCHMARK_EXAMPLES)
    bench_p.add_argument("--nd", type=int, default=None, help="problem dimension")
    bench_p.add_argument("--runs", type=int, default=None)
    bench_p.add_argument("--seed", type=int, default=None)
    bench_p.add_argument("--out", default=None)
    bench_p.add_argument("--trace-dir", default=None)
    bench_p.add_argument("--no-plots", action="store_true")
    bench_p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except RelhdmrError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
