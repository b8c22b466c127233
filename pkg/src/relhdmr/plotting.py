"""Figure rendering for reports and convergence traces.

Figures are written to files next to the delimited outputs (never shown
interactively); matplotlib is imported lazily with the Agg backend so
headless runs and test environments need no display.
"""

from __future__ import annotations

import csv
from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_runs_summary(report: dict, path) -> Path:
    """Per-run failure probabilities with the mean and reference lines."""
    plt = _pyplot()
    rows = report["runs"]
    pfs = [r["pf"] for r in rows]
    agg = report["aggregates"]

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(range(1, len(pfs) + 1), pfs, "o", ms=5, label="per-run estimate")
    ax.axhline(agg["pf_mean"], color="tab:red", ls="--", lw=1.2, label="mean")
    ref = report.get("reference") or {}
    if ref.get("pf"):
        ax.axhline(ref["pf"], color="tab:green", ls="-", lw=1.2, label="reference")
    ax.set_xlabel("run")
    ax.set_ylabel("failure probability")
    ax.set_yscale("log" if min(pfs, default=1) > 0 else "linear")
    ax.legend(loc="best", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_pf_trace(csv_paths: list, reference_pf: float | None, path) -> Path | None:
    """Failure probability versus number of limit-state calls, per run."""
    plt = _pyplot()
    series = []
    for csv_path in csv_paths:
        calls, pfs = [], []
        with open(csv_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                calls.append(int(row["n_call"]))
                pfs.append(float(row["pf"]))
        if calls:
            series.append((Path(csv_path).stem, calls, pfs))
    if not series:
        return None

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, calls, pfs in series:
        ax.plot(calls, pfs, "-o", ms=3, lw=1.0, label=name.split("_")[0])
    if reference_pf:
        ax.axhline(reference_pf, color="tab:green", ls="--", lw=1.2, label="reference")
    ax.set_xlabel("limit state calls")
    ax.set_ylabel("predicted failure probability")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_doe_growth(csv_path, path) -> Path:
    """Cumulative sub-model updates over the learning history of one run."""
    plt = _pyplot()
    counts: dict[str, list[tuple[int, int]]] = {}
    with open(csv_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["event"] not in ("stage1_update", "stage3_update"):
                continue
            label = row["submodel"] or f"G{row['variable']}"
            counts.setdefault(label, [])
            n_call = int(row["n_call"]) if row["n_call"] else 0
            counts[label].append((n_call, len(counts[label]) + 1))

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, points in sorted(counts.items()):
        ax.step([p[0] for p in points], [p[1] for p in points], where="post", label=label)
    ax.set_xlabel("limit state calls")
    ax.set_ylabel("adaptive samples added")
    if counts:
        ax.legend(loc="best", fontsize=8, ncol=2)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
