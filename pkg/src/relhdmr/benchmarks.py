"""Ready-to-run benchmark limit states and their standard configurations.

Four problems: a 3-variable function with two pairwise coupling terms, a
linear high-dimensional function with known exact failure probability
``Phi(-3.5)``, a high-dimensional function with chained quadratic coupling
terms, and a 23-member planar truss with an implicit displacement limit
state. All evaluators accept ``(n, d)`` batches.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .errors import ConfigError
from .truss import TrussModel, truss_from_dict

BUILTIN_NAMES = ("example1", "linear", "coupled", "truss")
BENCHMARK_EXAMPLES = ("example1", "linear", "coupled", "truss10", "truss30")

COUPLED_A = {20: 95_000.0, 60: 830_000.0}


def lsf_example1(x: np.ndarray) -> np.ndarray | float:
    """Three-variable limit state with (1,2) and (2,3) coupling terms."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.shape[1] != 3:
        raise ConfigError(f"example1 expects 3 variables, got {xb.shape[1]}")
    x1, x2, x3 = xb[:, 0], xb[:, 1], xb[:, 2]
    g = (
        0.75 * x2
        - 3.0 * np.sin(x1)
        + 0.2 * x1
        - 0.1 * (x3 - 3.0) ** 2
        - 0.005 * x1 * x2
        + 0.1 * x2 * x3
        - 0.2
    )
    return float(g[0]) if single else g


def lsf_linear(x: np.ndarray) -> np.ndarray | float:
    """Linear limit state ``3.5 * sqrt(d) - sum(x)``; pf = Phi(-3.5)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    g = 3.5 * np.sqrt(xb.shape[1]) - xb.sum(axis=1)
    return float(g[0]) if single else g


def lsf_coupled(x: np.ndarray, a: float) -> np.ndarray | float:
    """Chained quadratic coupling: ``a - (x1-1)^2 - sum_i i(2xi^2 - x_{i-1})^2``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.shape[1] < 2:
        raise ConfigError("coupled limit state needs at least 2 variables")
    idx = np.arange(2, xb.shape[1] + 1)
    terms = idx[None, :] * (2.0 * xb[:, 1:] ** 2 - xb[:, :-1]) ** 2
    g = a - (xb[:, 0] - 1.0) ** 2 - terms.sum(axis=1)
    return float(g[0]) if single else g


def bundled_truss(name: str) -> TrussModel:
    """Load one of the packaged truss variable mappings (truss10/truss30)."""
    if name not in ("truss10", "truss30"):
        raise ConfigError(f"no bundled truss named {name!r}")
    ref = resources.files("relhdmr.data").joinpath(f"{name}.json")
    return truss_from_dict(json.loads(ref.read_text(encoding="utf-8")))


def _standard_normals(n: int) -> list[dict]:
    return [{"kind": "normal", "mean": 0.0, "std": 1.0, "count": n}]


def _truss_variables(name: str) -> list[dict]:
    area_chord = {"kind": "lognormal", "mean": 2.0e-3, "std": 2.0e-4}
    area_diag = {"kind": "lognormal", "mean": 1.0e-3, "std": 1.0e-4}
    modulus = {"kind": "lognormal", "mean": 2.1e11, "std": 2.1e10}
    load = {"kind": "lognormal", "mean": 5.0e4, "std": 7.5e3, "count": 6}
    if name == "truss10":
        return [area_chord, area_diag, modulus, dict(modulus), load]
    return [
        dict(area_chord, count=11),
        dict(area_diag, count=12),
        modulus,
        load,
    ]


def builtin_config(example: str, nd: int | None = None) -> dict:
    """Standard multi-run configuration for a named benchmark.

    Returns a plain config dict; pass it through
    :func:`relhdmr.config.parse_problem` for validation.
    """
    if example == "example1":
        return {
            "variables": _standard_normals(3),
            "lsf": {"name": "example1"},
            "al": {
                "delta": 0.001,
                "alpha": 0.01,
                "r_s": 2.8,
                "r_c": 3.5,
                "n_coupling": 2,
                "du_init": 6.0,
                "du_coupling": 2.0,
            },
            "mcs": {"n": 1_000_000},
            "runs": 10,
            "base_seed": 20_000,
            "reference": {"direct_mcs": {"n": 1_000_000, "seed": 901}},
        }
    if example == "linear":
        nd = 20 if nd is None else nd
        return {
            "variables": _standard_normals(nd),
            "lsf": {"name": "linear"},
            "al": {
                "delta": 0.001,
                "alpha": 0.05,
                "r_s": 2.8,
                "r_c": 3.5,
                "n_coupling": 0,
                "du_init": 6.0,
                "first_order_only": True,
            },
            "mcs": {"n": 2_000_000},
            "runs": 30,
            "base_seed": 30_000,
            "reference": {"pf": 2.326290790563555e-4},  # Phi(-3.5)
        }
    if example == "coupled":
        nd = 20 if nd is None else nd
        if nd not in COUPLED_A:
            raise ConfigError(
                f"coupled benchmark is defined for nd in {sorted(COUPLED_A)}, got {nd}"
            )
        pairs = [[i, i + 1] for i in range(1, nd)]  # 1-based adjacent pairs
        return {
            "variables": [
                {"kind": "normal", "mean": 3.41, "std": 0.2, "count": nd}
            ],
            "lsf": {"name": "coupled", "a": COUPLED_A[nd]},
            "al": {
                "delta": 0.001,
                "alpha": 0.05,
                "r_s": 2.8,
                "r_c": 3.5,
                "pairs": pairs,
                "du_init": 6.0,
            },
            "mcs": {"n": 1_000_000},
            "runs": 50,
            "base_seed": 40_000,
            "reference": {"direct_mcs": {"n": 1_000_000, "seed": 902}},
        }
    if example in ("truss10", "truss30"):
        n_pairs = 10 if example == "truss10" else 30
        return {
            "variables": _truss_variables(example),
            "lsf": {"name": example},
            "al": {
                "delta": 0.01 if example == "truss10" else 0.05,
                "alpha": 0.01,
                "r_s": 2.8,
                "r_c": 3.2,
                "n_coupling": n_pairs,
                "du_init": 3.0,
                "du_coupling": 2.0,
                # implicit response: every pair model earns its published
                # share of adaptive samples before the stop test is trusted
                "stage3_min_per_pair": 7,
            },
            "mcs": {"n": 1_000_000},
            "runs": 50,
            "base_seed": 50_000,
            "reference": {"direct_mcs": {"n": 1_000_000, "seed": 903}},
        }
    raise ConfigError(
        f"unknown benchmark {example!r}; expected one of {BENCHMARK_EXAMPLES}"
    )


#: Published reference rows for side-by-side display:
#: example -> nd -> (n_call_mean, pf_mean, rel_err_pct, cov_pct)
PUBLISHED_ROWS = {
    "linear": {
        20: (61.6, 2.307e-4, 0.56, 4.658),
        40: (121.1, 2.339e-4, 0.82, 4.606),
        60: (181.3, 2.326e-4, 0.26, 4.638),
        100: (301.1, 2.345e-4, 1.08, 4.620),
    },
    "coupled": {
        20: (90.3, 3.418e-2, 0.18, 0.53),
        60: (270.7, 9.80e-4, 1.81, 3.19),
    },
    "example1": {3: (32.0, 6.834e-3, 0.0132, None)},
    "truss10": {10: (101.3 + 45, 8.836e-3, 1.51, 1.06)},
    "truss30": {30: (298.1 + 435, 4.910e-3, 1.91, 1.42)},
}
