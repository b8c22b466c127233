"""Report assembly, JSON serialization and CSV trace writing.

A report carries per-run rows, aggregate statistics recomputable from the
rows, the default-filled configuration echo and a schema version. Floats
are serialized with Python's shortest round-trip representation, which
preserves full double precision (up to 17 significant digits). The
``generated_at`` timestamp and the ``timing`` block are the only fields
excluded from determinism comparisons.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .active_learning import RunRecord
from .mcs import McsResult, RunAggregates, aggregate_runs

SCHEMA_VERSION = 1


@dataclass
class RunRow:
    index: int
    record: RunRecord
    mcs: McsResult
    reference_pf: float | None = None

    def to_dict(self) -> dict:
        rel = None
        if self.reference_pf:
            rel = (self.mcs.pf - self.reference_pf) / self.reference_pf * 100.0
        row = {
            "run": self.index,
            "pf": self.mcs.pf,
            "cov": self.mcs.cov,
            "n_mc": self.mcs.n_mc,
            "n_fail": self.mcs.n_fail,
            "insufficient_population": self.mcs.insufficient,
            "reference_pf": self.reference_pf,
            "rel_error_pct": rel,
        }
        row.update(self.record.to_dict())
        return row


def aggregates_of(rows: list[RunRow]) -> RunAggregates:
    refs = [r.reference_pf for r in rows]
    have_refs = all(r is not None for r in refs) and len(refs) > 0
    return aggregate_runs(
        pfs=[r.mcs.pf for r in rows],
        refs=refs if have_refs else None,
        n_calls=[r.record.n_call_total for r in rows],
        covs=[r.mcs.cov for r in rows],
    )


def build_report(
    config_echo: dict,
    rows: list[RunRow],
    reference: dict | None = None,
    timing: dict | None = None,
) -> dict:
    agg = aggregates_of(rows)
    return {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": config_echo,
        "reference": reference,
        "runs": [r.to_dict() for r in rows],
        "aggregates": {
            "pf_mean": agg.pf_mean,
            "rel_error_mean_abs_pct": agg.rel_error_mean_abs_pct,
            "rel_error_mean_signed_pct": agg.rel_error_mean_signed_pct,
            "n_call_mean": agg.n_call_mean,
            "cov_mean": agg.cov_mean,
            "n_runs": agg.n_runs,
        },
        "timing": timing or {},
    }


def strip_volatile(report: dict) -> dict:
    """Copy of a report without timestamps/timings, for equality checks."""
    out = dict(report)
    out.pop("generated_at", None)
    out.pop("timing", None)
    return out


def write_report(report: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")


class TraceRecorder:
    """Collects per-run learning events and optional pf checkpoints.

    Passed to :func:`relhdmr.active_learning.run_analysis` as the recorder
    callback. When a checkpoint estimator is supplied, the failure
    probability of the current composite is re-estimated after every
    sub-model update (surrogate evaluations only, no limit-state calls).
    """

    def __init__(self, pf_checkpoint=None):
        self.events: list[dict] = []
        self.pf_trace: list[tuple[int, float]] = []
        self._pf_checkpoint = pf_checkpoint

    def __call__(self, event: dict, cs=None) -> None:
        self.events.append(dict(event))
        interesting = event.get("event") in (
            "stage3_update",
            "stage3_done",
            "analysis_done",
        )
        if self._pf_checkpoint is not None and cs is not None and interesting:
            pf = self._pf_checkpoint(cs)
            self.pf_trace.append((int(event.get("n_call", 0)), float(pf)))


def write_traces(recorder: TraceRecorder, out_dir, run_index: int) -> list[Path]:
    """Write a run's DoE-growth and pf-trace CSV files, returning the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    events_path = out_dir / f"run{run_index:03d}_doe_growth.csv"
    with open(events_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event", "submodel", "variable", "n_call", "detail"])
        for ev in recorder.events:
            kind = ev.get("event", "")
            writer.writerow(
                [
                    kind,
                    ev.get("submodel", ""),
                    ev.get("variable", ""),
                    ev.get("n_call", ""),
                    ev.get("u_learning", ev.get("sigma_max", "")),
                ]
            )
    written.append(events_path)

    if recorder.pf_trace:
        pf_path = out_dir / f"run{run_index:03d}_pf_trace.csv"
        with open(pf_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n_call", "pf"])
            writer.writerows(recorder.pf_trace)
        written.append(pf_path)
    return written
