"""Composite surrogate assembled from low-dimensional Kriging sub-models.

The full-space predictor anchors all component functions at a fixed cut
point ``u0``. With ``g0 = G(u0)``, first-order components contribute
``G_i(u_i) - g0`` and each selected second-order component contributes
``G_ij(u_i, u_j) - G_i(u_i) - G_j(u_j) + g0``, so the composite prediction
reduces to ``g0`` exactly at the cut point and reproduces any additive
function with first-order sub-models alone.

The decomposition stops at pairwise components: three-variable and higher
terms follow the same telescoping pattern but are out of scope here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DegenerateProbeError
from .kriging import DoeSet, KrigingModel
from .kriging import predict as kriging_predict
from .kriging import predict_mean as kriging_predict_mean

SIGMA_FLOOR = 1e-12
PROBE_GUARD = 1e-12


@dataclass(frozen=True)
class SubSurrogate:
    """A 1- or 2-variable Kriging model over a cut line or cut plane.

    ``var_indices`` are 0-based internally; labels report them 1-based.
    """

    var_indices: tuple[int, ...]
    model: KrigingModel

    def __post_init__(self):
        object.__setattr__(self, "var_indices", tuple(int(i) for i in self.var_indices))
        if self.order not in (1, 2):
            raise ConfigError(f"sub-surrogate order must be 1 or 2, got {self.order}")
        if self.order == 2 and not self.var_indices[0] < self.var_indices[1]:
            raise ConfigError("second-order variable indices must be strictly increasing")
        dim = getattr(getattr(self.model, "doe", None), "dim", self.order)
        if dim != self.order:
            raise ConfigError(f"model dimension {dim} does not match order {self.order}")

    @property
    def order(self) -> int:
        return len(self.var_indices)

    @property
    def doe(self) -> DoeSet:
        return self.model.doe

    @property
    def label(self) -> str:
        # pair labels keep a separator so e.g. (1,2) cannot collide with
        # variable 12 in higher-dimensional problems
        if self.order == 1:
            return f"G{self.var_indices[0] + 1}"
        return f"G{self.var_indices[0] + 1}_{self.var_indices[1] + 1}"

    def sort_key(self) -> tuple:
        return (self.order, self.var_indices)


@dataclass(frozen=True)
class CompositeSurrogate:
    cut_point: np.ndarray  # (N_D,)
    g0: float
    first_order: tuple[SubSurrogate, ...]
    second_order: tuple[SubSurrogate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        cut = np.asarray(self.cut_point, dtype=float).ravel()
        object.__setattr__(self, "cut_point", cut)
        object.__setattr__(self, "first_order", tuple(self.first_order))
        object.__setattr__(self, "second_order", tuple(self.second_order))
        nd = cut.shape[0]
        firsts = sorted(s.var_indices[0] for s in self.first_order)
        if firsts != list(range(nd)):
            raise ConfigError("need exactly one first-order sub-model per variable")
        pairs = [s.var_indices for s in self.second_order]
        if len(set(pairs)) != len(pairs):
            raise ConfigError("duplicate second-order pairs")
        for i, j in pairs:
            if not (0 <= i < j < nd):
                raise ConfigError(f"pair ({i}, {j}) out of range for dimension {nd}")

    @property
    def n_dim(self) -> int:
        return self.cut_point.shape[0]

    def submodels(self) -> tuple[SubSurrogate, ...]:
        return self.first_order + self.second_order

    def first_for(self, i: int) -> SubSurrogate:
        for sub in self.first_order:
            if sub.var_indices[0] == i:
                return sub
        raise ConfigError(f"no first-order sub-model for variable {i}")

    def with_replaced(self, updated: SubSurrogate) -> "CompositeSurrogate":
        """Copy with one sub-model swapped for its refitted version."""
        if updated.order == 1:
            firsts = tuple(
                updated if s.var_indices == updated.var_indices else s
                for s in self.first_order
            )
            return replace(self, first_order=firsts)
        seconds = tuple(
            updated if s.var_indices == updated.var_indices else s
            for s in self.second_order
        )
        return replace(self, second_order=seconds)


def embed_point(sub: SubSurrogate, coords: np.ndarray, cut_point: np.ndarray) -> np.ndarray:
    """Place sub-model coordinates into the full-space cut point."""
    coords = np.asarray(coords, dtype=float).ravel()
    cut_point = np.asarray(cut_point, dtype=float).ravel()
    if coords.shape[0] != sub.order:
        raise ConfigError(f"expected {sub.order} coordinates, got {coords.shape[0]}")
    full = cut_point.copy()
    full[list(sub.var_indices)] = coords
    return full


def embed_batch(sub: SubSurrogate, coords: np.ndarray, cut_point: np.ndarray) -> np.ndarray:
    """Batch version of :func:`embed_point`; coords shape (n, order)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    cut_point = np.asarray(cut_point, dtype=float).ravel()
    full = np.tile(cut_point, (coords.shape[0], 1))
    full[:, list(sub.var_indices)] = coords
    return full


def _project(sub: SubSurrogate, u: np.ndarray) -> np.ndarray:
    return u[:, list(sub.var_indices)]


def predict(cs: CompositeSurrogate, u: np.ndarray) -> np.ndarray | float:
    """Composite mean prediction at ``(N_D,)`` or a batch ``(n, N_D)``."""
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    ub = u[None, :] if single else u
    if ub.shape[1] != cs.n_dim:
        raise ConfigError(f"expected {cs.n_dim} coordinates, got {ub.shape[1]}")

    first_means = {}
    total = np.full(ub.shape[0], cs.g0)
    for sub in cs.first_order:
        mean = _mean_eval(sub, _project(sub, ub))
        first_means[sub.var_indices[0]] = mean
        total += mean - cs.g0
    for sub in cs.second_order:
        i, j = sub.var_indices
        mean = _mean_eval(sub, _project(sub, ub))
        total += mean - first_means[i] - first_means[j] + cs.g0
    return float(total[0]) if single else total


def _mean_eval(sub: SubSurrogate, coords: np.ndarray) -> np.ndarray:
    model = sub.model
    if isinstance(model, KrigingModel):
        mean = kriging_predict_mean(model, coords)
    else:
        mean = model.predict(coords)[0]
    return np.atleast_1d(np.asarray(mean, dtype=float))


def _kriging_eval(sub: SubSurrogate, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    model = sub.model
    if isinstance(model, KrigingModel):
        mean, var = kriging_predict(model, coords)
    else:
        # any object exposing predict(coords) -> (mean, variance) works,
        # e.g. exact component functions in verification studies
        mean, var = model.predict(coords)
    return np.atleast_1d(np.asarray(mean, dtype=float)), np.atleast_1d(
        np.asarray(var, dtype=float)
    )


def sigma_bar(cs: CompositeSurrogate, u: np.ndarray) -> tuple:
    """Largest sub-model prediction standard deviation at ``u``.

    Returns ``(value, label)`` for a single point or ``(values, labels)``
    for a batch. Ties resolve to the lowest order, then the smallest
    variable indices.
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    ub = u[None, :] if single else u
    subs = sorted(cs.submodels(), key=lambda s: s.sort_key())
    sigmas = np.empty((len(subs), ub.shape[0]))
    for k, sub in enumerate(subs):
        _, var = _kriging_eval(sub, _project(sub, ub))
        sigmas[k] = np.sqrt(var)
    best = np.argmax(sigmas, axis=0)  # first occurrence wins ties (sorted order)
    values = sigmas[best, np.arange(ub.shape[0])]
    labels = [subs[k].label for k in best]
    if single:
        return float(values[0]), labels[0]
    return values, np.array(labels)


def sigma_bar_sub(cs: CompositeSurrogate, u: np.ndarray) -> tuple:
    """Like :func:`sigma_bar` but returns the arg-max sub-model itself."""
    u = np.asarray(u, dtype=float).ravel()
    subs = sorted(cs.submodels(), key=lambda s: s.sort_key())
    best_val = -1.0
    best_sub = subs[0]
    for sub in subs:
        _, var = _kriging_eval(sub, u[None, list(sub.var_indices)])
        val = float(np.sqrt(var[0]))
        if val > best_val:
            best_val = val
            best_sub = sub
    return best_val, best_sub


def coupling_index(
    lsf,
    cs: CompositeSurrogate,
    i: int,
    j: int,
    du: float,
    literal_printed_sign: bool = False,
) -> float:
    """Pairwise coupling significance at the offset probe point.

    The probe sets slots ``i`` and ``j`` to ``cut + du`` and compares the
    true response against the additive first-order prediction, normalized
    by the true response. Costs exactly one limit-state call, which the
    caller accounts separately from DoE data. ``literal_printed_sign``
    moves the probe to ``cut - du`` while keeping the first-order terms at
    ``cut + du`` (a documented alternative form, not the default).
    """
    if not 0 <= i < j < cs.n_dim:
        raise ConfigError(f"invalid pair ({i}, {j}) for dimension {cs.n_dim}")
    if du <= 0:
        raise ConfigError(f"coupling probe offset must be positive, got {du}")

    cut = cs.cut_point
    probe_off = -du if literal_printed_sign else du
    probe = cut.copy()
    probe[i] += probe_off
    probe[j] += probe_off
    g_probe = float(lsf.eval_u(probe))
    if abs(g_probe) < PROBE_GUARD:
        raise DegenerateProbeError(
            f"probe response {g_probe!r} too close to zero for pair ({i + 1}, {j + 1})"
        )
    gi, _ = _kriging_eval(cs.first_for(i), np.array([[cut[i] + du]]))
    gj, _ = _kriging_eval(cs.first_for(j), np.array([[cut[j] + du]]))
    additive = float(gi[0] + gj[0] - cs.g0)
    return (g_probe - additive) / g_probe
