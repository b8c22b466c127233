"""Problem configuration: JSON schema, validation and assembly.

A problem file looks like::

    {
      "variables": [{"kind": "normal", "mean": 0, "std": 1, "count": 20}],
      "lsf": {"name": "linear"},
      "al": {"alpha": 0.05, "r_s": 2.8, "r_c": 3.5, "n_coupling": 0},
      "mcs": {"n": 2000000, "batch": 100000},
      "pso": {"n_swarm": 50, "n_iter": 50},
      "runs": 30,
      "base_seed": 1,
      "reference": {"pf": 2.326e-4}
    }

``count`` repeats a marginal. Variable indices anywhere in a config
(coupling ``pairs``, truss ``var`` sources) are 1-based, matching how
sub-models are reported. Validation errors carry the dotted path of the
offending key.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from .active_learning import AlParams
from .benchmarks import COUPLED_A, bundled_truss, lsf_coupled, lsf_example1, lsf_linear
from .distributions import Distribution, parse_distribution
from .errors import ConfigError
from .pso import SwarmConfig
from .truss import load_truss, lsf_truss


@dataclass(frozen=True)
class McsSettings:
    n: int = 1_000_000
    batch: int = 100_000
    max_cov: float = 0.05
    auto_grow: bool = False
    cap: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("must be >= 1", key="mcs.n")
        if self.batch < 1:
            raise ConfigError("must be >= 1", key="mcs.batch")
        if not 0.0 < self.max_cov:
            raise ConfigError("must be positive", key="mcs.max_cov")
        if self.cap is not None and self.cap < self.n:
            raise ConfigError("cap must be >= n", key="mcs.cap")


@dataclass(frozen=True)
class Reference:
    """Where the reference failure probability for error statistics comes from."""

    pf: float | None = None
    direct_mcs_n: int | None = None
    direct_mcs_seed: int = 0
    per_run: bool = False


@dataclass
class ProblemDefinition:
    dists: list[Distribution]
    lsf_name: str
    lsf: callable  # physical-space batch evaluator (n, d) -> (n,)
    al: AlParams
    mcs: McsSettings
    pso: SwarmConfig
    runs: int = 1
    base_seed: int = 0
    reference: Reference | None = None
    config_echo: dict = field(default_factory=dict)

    @property
    def n_dim(self) -> int:
        return len(self.dists)


def _parse_variables(raw) -> list[Distribution]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("expected a non-empty list", key="variables")
    dists = []
    for k, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ConfigError("expected an object", key=f"variables[{k}]")
        count = entry.get("count", 1)
        if not isinstance(count, int) or count < 1:
            raise ConfigError("count must be a positive integer", key=f"variables[{k}].count")
        if "correlation" in entry or "corr" in entry:
            raise ConfigError(
                "correlated inputs are not supported; only independent marginals",
                key=f"variables[{k}]",
            )
        base = {kk: v for kk, v in entry.items() if kk != "count"}
        dist = parse_distribution(base, key=f"variables[{k}]")
        dists.extend([dist] * count)
    return dists


def _parse_al(raw: dict) -> AlParams:
    raw = dict(raw or {})
    pairs = raw.pop("pairs", None)
    if pairs is not None:
        try:
            pairs0 = tuple(tuple(sorted((int(i) - 1, int(j) - 1))) for i, j in pairs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"expected [[i, j], ...] with 1-based indices: {exc}",
                              key="al.pairs") from exc
        for p, q in pairs0:
            if p < 0:
                raise ConfigError("variable indices are 1-based", key="al.pairs")
            if p == q:
                raise ConfigError("pair members must differ", key="al.pairs")
        raw["pairs"] = pairs0
    known = set(AlParams.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", key="al")
    try:
        return AlParams(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc), key="al") from exc
    except ConfigError as exc:
        if exc.key is None:
            raise ConfigError(str(exc), key="al") from exc
        raise


def _parse_section(raw, cls, key: str):
    raw = dict(raw or {})
    known = set(cls.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", key=key)
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc), key=key) from exc
    except ConfigError as exc:
        if exc.key is None:
            raise ConfigError(str(exc), key=key) from exc
        raise


def _resolve_lsf(raw, n_dim: int, base_dir=None):
    """Returns (name, evaluator, expected_dim or None, truss model or None)."""
    if not isinstance(raw, dict) or "name" not in raw:
        raise ConfigError('expected {"name": ...}', key="lsf")
    name = str(raw["name"])
    if name == "example1":
        return name, lsf_example1, 3, None
    if name == "linear":
        return name, lsf_linear, None, None
    if name == "coupled":
        if "a" in raw:
            a = float(raw["a"])
        elif n_dim in COUPLED_A:
            a = COUPLED_A[n_dim]
        else:
            raise ConfigError(
                f"constant 'a' required for {n_dim} variables", key="lsf.a"
            )
        return name, (lambda x: lsf_coupled(x, a)), None, None
    if name in ("truss10", "truss30"):
        model = bundled_truss(name)
    elif name == "truss":
        if "file" not in raw:
            raise ConfigError("truss needs a geometry 'file' path", key="lsf.file")
        path = raw["file"]
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        model = load_truss(path)
    else:
        raise ConfigError(
            f"unknown limit state {name!r}; builtins: example1, linear, coupled, "
            "truss, truss10, truss30",
            key="lsf.name",
        )
    needed = model.max_var_index() + 1
    if needed > n_dim:
        raise ConfigError(
            f"truss references variable {needed} but only {n_dim} are defined",
            key="lsf",
        )
    return name, lsf_truss(model), None, model


def _parse_reference(raw) -> Reference | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError("expected an object", key="reference")
    per_run = bool(raw.get("per_run", False))
    if "pf" in raw:
        pf = float(raw["pf"])
        if pf <= 0.0:
            raise ConfigError("reference pf must be positive", key="reference.pf")
        return Reference(pf=pf, per_run=per_run)
    if "direct_mcs" in raw:
        block = raw["direct_mcs"]
        if not isinstance(block, dict) or "n" not in block:
            raise ConfigError('expected {"n": ..., "seed": ...}', key="reference.direct_mcs")
        return Reference(
            direct_mcs_n=int(block["n"]),
            direct_mcs_seed=int(block.get("seed", 0)),
            per_run=per_run,
        )
    raise ConfigError("needs either 'pf' or 'direct_mcs'", key="reference")


def parse_problem(raw: dict, base_dir=None) -> ProblemDefinition:
    """Validate a config dict and assemble the problem definition."""
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be an object")
    known = {
        "variables", "lsf", "al", "mcs", "pso", "runs", "base_seed", "reference",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")

    dists = _parse_variables(raw.get("variables"))
    al = _parse_al(raw.get("al"))
    mcs = _parse_section(raw.get("mcs"), McsSettings, "mcs")
    pso = _parse_section(raw.get("pso"), SwarmConfig, "pso")
    name, evaluator, expected_dim, _ = _resolve_lsf(raw.get("lsf"), len(dists), base_dir)

    if expected_dim is not None and expected_dim != len(dists):
        raise ConfigError(
            f"{name} expects {expected_dim} variables, config defines {len(dists)}",
            key="variables",
        )
    if al.pairs is not None:
        for i, j in al.pairs:
            if j >= len(dists):
                raise ConfigError(
                    f"pair ({i + 1}, {j + 1}) exceeds dimension {len(dists)}",
                    key="al.pairs",
                )

    runs = int(raw.get("runs", 1))
    if runs < 1:
        raise ConfigError("must be >= 1", key="runs")
    base_seed = int(raw.get("base_seed", 0))
    if base_seed < 0:
        raise ConfigError("must be >= 0", key="base_seed")
    reference = _parse_reference(raw.get("reference"))

    echo = effective_config(raw, dists, al, mcs, pso, runs, base_seed, reference)
    return ProblemDefinition(
        dists=dists,
        lsf_name=name,
        lsf=evaluator,
        al=al,
        mcs=mcs,
        pso=pso,
        runs=runs,
        base_seed=base_seed,
        reference=reference,
        config_echo=echo,
    )


def effective_config(raw, dists, al, mcs, pso, runs, base_seed, reference) -> dict:
    """Default-filled configuration as echoed into reports."""
    al_dict = asdict(al)
    if al_dict["pairs"] is not None:
        al_dict["pairs"] = [[i + 1, j + 1] for i, j in al_dict["pairs"]]
    ref_dict = None
    if reference is not None:
        ref_dict = {
            "pf": reference.pf,
            "direct_mcs_n": reference.direct_mcs_n,
            "direct_mcs_seed": reference.direct_mcs_seed,
            "per_run": reference.per_run,
        }
    return {
        "variables": [
            {"kind": d.kind, "mean": d.mean, "std": d.std} for d in dists
        ],
        "lsf": dict(raw.get("lsf") or {}),
        "al": al_dict,
        "mcs": asdict(mcs),
        "pso": asdict(pso),
        "runs": runs,
        "base_seed": base_seed,
        "reference": ref_dict,
    }


def load_problem(path) -> ProblemDefinition:
    """Load and validate a problem definition from a JSON file."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return parse_problem(raw, base_dir=os.path.dirname(os.path.abspath(path)))
