import numpy as np
import pytest

from relhdmr.errors import ConfigError
from relhdmr.pso import SwarmConfig, minimize

BOX2 = np.array([[-6.0, 6.0], [-6.0, 6.0]])


def sphere(x):
    return (x**2).sum(axis=1)


class TestConfig:
    def test_defaults_match_stated_parameters(self):
        cfg = SwarmConfig()
        assert cfg.n_swarm == 50
        assert cfg.n_iter == 50
        assert cfg.omega == 0.729
        assert cfg.c1 == cfg.c2 == 2.0
        assert cfg.v_max == 0.3
        assert cfg.delta0 == 1e-8

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            SwarmConfig(n_swarm=1)
        with pytest.raises(ConfigError):
            SwarmConfig(omega=1.5)
        with pytest.raises(ConfigError):
            SwarmConfig(v_max=0.0)


class TestMinimize:
    def test_sphere_converges(self):
        res = minimize(sphere, BOX2, SwarmConfig(seed=1))
        assert res.f < 1e-3

    def test_constant_objective(self):
        res = minimize(lambda x: np.full(x.shape[0], 5.0), BOX2, SwarmConfig(seed=2))
        assert res.f == 5.0
        assert np.all(res.x >= -6.0) and np.all(res.x <= 6.0)

    def test_deterministic_given_seed(self):
        a = minimize(sphere, BOX2, SwarmConfig(seed=9))
        b = minimize(sphere, BOX2, SwarmConfig(seed=9))
        assert np.array_equal(a.x, b.x)
        assert a.f == b.f
        assert np.array_equal(a.trace, b.trace)

    def test_trace_monotone_nonincreasing(self):
        res = minimize(sphere, BOX2, SwarmConfig(seed=3))
        assert res.trace.shape == (51,)
        assert np.all(np.diff(res.trace) <= 0.0)

    def test_runs_exactly_n_iter(self):
        res = minimize(sphere, BOX2, SwarmConfig(n_iter=7, seed=0))
        assert res.trace.shape == (8,)

    def test_positions_stay_feasible(self):
        seen = []

        def hook(info):
            seen.append(info["positions"])

        minimize(sphere, BOX2, SwarmConfig(seed=4), iteration_hook=hook)
        allpos = np.vstack(seen)
        assert np.all(allpos >= -6.0) and np.all(allpos <= 6.0)

    def test_gbest_is_minimum_of_pbest(self):
        checked = []

        def hook(info):
            checked.append(info["gbest_f"] == info["pbest_f"].min())

        minimize(sphere, BOX2, SwarmConfig(seed=5), iteration_hook=hook)
        assert checked and all(checked)

    def test_nonfinite_objective_treated_as_inf(self):
        def holey(x):
            vals = sphere(x)
            vals[x[:, 0] > 0] = np.nan
            return vals

        res = minimize(holey, BOX2, SwarmConfig(seed=6))
        assert np.isfinite(res.f)
        assert res.x[0] <= 0

    def test_invalid_bounds(self):
        with pytest.raises(ConfigError):
            minimize(sphere, np.array([[1.0, -1.0]]), SwarmConfig(seed=0))
        with pytest.raises(ConfigError):
            minimize(sphere, np.array([[0.0, np.inf]]), SwarmConfig(seed=0))

    def test_sphere_many_seeds(self):
        # stability check across a spread of seeds
        fails = sum(
            minimize(sphere, BOX2, SwarmConfig(seed=s)).f >= 1e-3 for s in range(30)
        )
        assert fails == 0
