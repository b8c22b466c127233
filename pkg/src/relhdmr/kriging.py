"""Ordinary Kriging with maximum-likelihood hyperparameter search.

The correlation kernel is the squared-exponential
``R(theta, xi, xj) = prod_d exp(-theta_d * (xi_d - xj_d)**2)``.
Inputs and responses are standardized (per-dimension mean/std) before
fitting, as in the classic DACE-style implementations; ``theta`` therefore
acts on normalized coordinates and minimizes the reduced likelihood
criterion ``det(R)**(1/m) * sigma2(theta)`` over a fixed box, searched by
PSO on ``log10(theta)``. ``beta`` and ``sigma2`` are reported in response
units.

The fitted model interpolates: at any DoE point the predictive mean equals
the stored response and the variance collapses to the regularization
level. Prediction is vectorized over query points; a fitted
``KrigingModel`` is immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, ModelFitError
from .pso import SwarmConfig, minimize

THETA_LOG10_BOUNDS = (-3.0, 2.0)
THETA_SWARM = 30
THETA_ITERS = 50
NUGGET_START = 1e-10
NUGGET_CAP = 1e-6
DUPLICATE_TOL = 1e-6


@dataclass(frozen=True)
class DoeSet:
    """Design-of-experiments data for one sub-model's own subspace."""

    points: np.ndarray  # (m, d)
    responses: np.ndarray  # (m,)

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        responses = np.asarray(self.responses, dtype=float).ravel()
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "responses", responses)
        m = points.shape[0]
        if m != responses.shape[0]:
            raise ConfigError(
                f"DoE size mismatch: {m} points vs {responses.shape[0]} responses"
            )
        if m < 2:
            raise ConfigError(f"DoE needs at least 2 points, got {m}")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(responses)):
            raise ConfigError("DoE entries must be finite")
        diff = points[:, None, :] - points[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        if dist.min() < DUPLICATE_TOL:
            i, j = np.unravel_index(int(np.argmin(dist)), dist.shape)
            raise ConfigError(f"DoE points {i} and {j} closer than {DUPLICATE_TOL}")

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def contains(self, x: np.ndarray, tol: float = DUPLICATE_TOL) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        d = np.sqrt(((self.points - x[None, :]) ** 2).sum(axis=1))
        return bool(d.min() < tol)

    def appended(self, x: np.ndarray, y: float) -> "DoeSet":
        x = np.asarray(x, dtype=float).ravel()
        return DoeSet(
            points=np.vstack([self.points, x[None, :]]),
            responses=np.append(self.responses, y),
        )


@dataclass(frozen=True)
class KrigingModel:
    doe: DoeSet
    theta: np.ndarray  # (d,), acts on normalized coordinates
    beta: float  # constant trend, response units
    sigma2: float  # process variance, response units squared
    chol: np.ndarray  # lower factor of R + nugget*I
    nugget: float
    # standardization applied before fitting
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    # cached solves on normalized data for fast prediction
    alpha: np.ndarray  # R^-1 (Yn - beta_n 1)
    r_inv_one: np.ndarray  # R^-1 1
    one_r_one: float  # 1^T R^-1 1
    beta_n: float
    sigma2_n: float

    def predict_mean(self, x: np.ndarray) -> np.ndarray | float:
        return predict_mean(self, x)

    def predict_std(self, x: np.ndarray) -> np.ndarray | float:
        var = predict(self, x)[1]
        return np.sqrt(var)


def correlation(theta: np.ndarray, xi: np.ndarray, xj: np.ndarray) -> float:
    """Squared-exponential correlation between two points."""
    theta = np.asarray(theta, dtype=float).ravel()
    xi = np.asarray(xi, dtype=float).ravel()
    xj = np.asarray(xj, dtype=float).ravel()
    if not (theta.shape == xi.shape == xj.shape):
        raise ConfigError("correlation arguments must share one dimension")
    return float(np.exp(-np.sum(theta * (xi - xj) ** 2)))


def _standardize(doe: DoeSet):
    x_mean = doe.points.mean(axis=0)
    x_std = doe.points.std(axis=0)
    x_std = np.where(x_std > 0.0, x_std, 1.0)
    y_mean = float(doe.responses.mean())
    y_std = float(doe.responses.std())
    if y_std <= 0.0:
        y_std = 1.0
    points_n = (doe.points - x_mean) / x_std
    y_n = (doe.responses - y_mean) / y_std
    return x_mean, x_std, y_mean, y_std, points_n, y_n


def _sq_dists(points_n: np.ndarray) -> np.ndarray:
    """Per-dimension squared differences of normalized points, (d, m, m)."""
    diff = points_n[:, None, :] - points_n[None, :, :]
    return np.transpose(diff**2, (2, 0, 1))


def _psi_single(theta: np.ndarray, d2: np.ndarray, y: np.ndarray) -> float:
    """Reduced likelihood criterion for one theta; +inf if not factorizable."""
    m = y.shape[0]
    r = np.exp(-np.einsum("d,dij->ij", theta, d2))
    nugget = NUGGET_START
    while True:
        try:
            chol = np.linalg.cholesky(r + nugget * np.eye(m))
            break
        except np.linalg.LinAlgError:
            nugget *= 10.0
            if nugget > NUGGET_CAP:
                return np.inf
    one = np.ones(m)
    a = solve_triangular(chol, one, lower=True)
    b = solve_triangular(chol, y, lower=True)
    beta = (a @ b) / (a @ a)
    z = b - beta * a
    sigma2 = (z @ z) / m
    det_root = np.exp((2.0 / m) * np.log(np.diag(chol)).sum())
    psi = det_root * sigma2
    return psi if np.isfinite(psi) else np.inf


def likelihood_criterion(doe: DoeSet, theta: np.ndarray) -> float:
    """det(R)^(1/m) * sigma2(theta): the quantity the fit minimizes.

    ``theta`` is interpreted on the same normalized coordinates the fit
    uses, so values are directly comparable with the fitted optimum.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape[0] != doe.dim:
        raise ConfigError("theta dimension must match the DoE")
    _, _, _, _, points_n, y_n = _standardize(doe)
    return _psi_single(theta, _sq_dists(points_n), y_n)


def _psi_stack(thetas: np.ndarray, d2: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized criterion over a stack of thetas, with per-item fallback."""
    k = thetas.shape[0]
    m = y.shape[0]
    r = np.exp(-np.einsum("kd,dij->kij", thetas, d2))
    r += NUGGET_START * np.eye(m)[None, :, :]
    try:
        chol = np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        return np.array([_psi_single(t, d2, y) for t in thetas])
    rhs = np.broadcast_to(np.column_stack([np.ones(m), y]), (k, m, 2)).copy()
    sol = np.linalg.solve(chol, rhs)  # (k, m, 2): L^-1 [1, y]
    a, b = sol[:, :, 0], sol[:, :, 1]
    beta = np.einsum("km,km->k", a, b) / np.einsum("km,km->k", a, a)
    z = b - beta[:, None] * a
    sigma2 = np.einsum("km,km->k", z, z) / m
    log_diag = np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    psi = np.exp((2.0 / m) * log_diag) * sigma2
    return np.where(np.isfinite(psi), psi, np.inf)


def fit(doe: DoeSet, seed: int = 0) -> KrigingModel:
    """Fit an ordinary Kriging model, re-optimizing theta from scratch.

    Deterministic given ``(doe, seed)``.
    """
    x_mean, x_std, y_mean, y_std, points_n, y_n = _standardize(doe)
    d2 = _sq_dists(points_n)

    def objective(log_thetas: np.ndarray) -> np.ndarray:
        return _psi_stack(10.0**log_thetas, d2, y_n)

    bounds = np.tile(THETA_LOG10_BOUNDS, (doe.dim, 1))
    cfg = SwarmConfig(n_swarm=THETA_SWARM, n_iter=THETA_ITERS, seed=seed)
    result = minimize(objective, bounds, cfg)
    if not np.isfinite(result.f):
        raise ModelFitError("likelihood criterion not finite anywhere in the box")
    theta = 10.0**result.x

    r = np.exp(-np.einsum("d,dij->ij", theta, d2))
    nugget = NUGGET_START
    while True:
        try:
            chol = np.linalg.cholesky(r + nugget * np.eye(doe.m))
            break
        except np.linalg.LinAlgError:
            nugget *= 10.0
            if nugget > NUGGET_CAP:
                raise ModelFitError(
                    f"correlation matrix not factorizable up to nugget {NUGGET_CAP}"
                ) from None

    one = np.ones(doe.m)
    a = solve_triangular(chol, one, lower=True)
    b = solve_triangular(chol, y_n, lower=True)
    one_r_one = float(a @ a)
    beta_n = float((a @ b) / one_r_one)
    z = b - beta_n * a
    sigma2_n = float((z @ z) / doe.m)
    alpha = solve_triangular(chol, z, lower=True, trans="T")
    r_inv_one = solve_triangular(chol, a, lower=True, trans="T")

    return KrigingModel(
        doe=doe,
        theta=theta,
        beta=y_mean + y_std * beta_n,
        sigma2=y_std**2 * sigma2_n,
        chol=chol,
        nugget=nugget,
        x_mean=x_mean,
        x_std=x_std,
        y_mean=y_mean,
        y_std=y_std,
        alpha=alpha,
        r_inv_one=r_inv_one,
        one_r_one=one_r_one,
        beta_n=beta_n,
        sigma2_n=sigma2_n,
    )


def _query_correlations(model: KrigingModel, xb: np.ndarray) -> np.ndarray:
    xn = (xb - model.x_mean) / model.x_std
    points_n = (model.doe.points - model.x_mean) / model.x_std
    diff = xn[:, None, :] - points_n[None, :, :]
    d2 = np.einsum("d,nmd->nm", model.theta, diff**2)
    r = np.exp(-d2)
    # a query coinciding with a DoE point sees the regularized kernel, so
    # the predictor interpolates exactly and its variance collapses to zero
    r[d2 == 0.0] += model.nugget
    return r


def _check_query(model: KrigingModel, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.shape[1] != model.doe.dim:
        raise ConfigError(
            f"query dimension {xb.shape[1]} does not match model dimension {model.doe.dim}"
        )
    return xb, single


def predict_mean(model: KrigingModel, x: np.ndarray) -> np.ndarray | float:
    """Predictive mean only; much cheaper than :func:`predict` on batches."""
    xb, single = _check_query(model, x)
    r = _query_correlations(model, xb)
    mean = model.y_mean + model.y_std * (model.beta_n + r @ model.alpha)
    return float(mean[0]) if single else mean


def predict(model: KrigingModel, x: np.ndarray) -> tuple[np.ndarray | float, np.ndarray | float]:
    """Predictive mean and variance at one point ``(d,)`` or a batch ``(n, d)``.

    Variance includes the constant-trend uncertainty term and is clamped at
    zero from below.
    """
    xb, single = _check_query(model, x)
    r = _query_correlations(model, xb)

    mean = model.y_mean + model.y_std * (model.beta_n + r @ model.alpha)

    w = solve_triangular(model.chol, r.T, lower=True)
    r_rinv_r = np.einsum("mn,mn->n", w, w)
    u = r @ model.r_inv_one - 1.0
    var = model.sigma2 * (1.0 - r_rinv_r + u**2 / model.one_r_one)
    var = np.maximum(var, 0.0)

    if single:
        return float(mean[0]), float(var[0])
    return mean, var
