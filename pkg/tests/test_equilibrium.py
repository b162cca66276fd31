import numpy as np
import pytest

from maxent_ice import (
    DemoSet,
    build_deviation_set,
    empirical,
    max_regret,
    regret_matching_ce,
    sample_demos,
    welfare_tilted_ce,
)
from maxent_ice.errors import ValidationError

from conftest import random_game


def scalar_game(rng, counts=(3, 3)):
    g = random_game(rng, max_players=len(counts), max_actions=max(counts), max_dim=1)
    return g


def test_regret_matching_drives_internal_regret_down():
    rng = np.random.default_rng(0)
    g = random_game(rng, max_players=2, max_actions=3, max_dim=2)
    w = rng.normal(size=g.feature_dim)
    report = regret_matching_ce(g, w, rounds=30_000, seed=1)
    devset = build_deviation_set(g, "internal")
    assert report.eps_internal == pytest.approx(
        max_regret(g, report.strategy, devset, w), abs=1e-12
    )
    assert report.eps_internal < 0.05


def test_regret_matching_is_seeded():
    rng = np.random.default_rng(1)
    g = random_game(rng, max_players=2, max_actions=2)
    w = rng.normal(size=g.feature_dim)
    a = regret_matching_ce(g, w, rounds=500, seed=7)
    b = regret_matching_ce(g, w, rounds=500, seed=7)
    np.testing.assert_array_equal(a.strategy, b.strategy)


def test_welfare_tilt_meets_regret_target():
    rng = np.random.default_rng(2)
    g = random_game(rng, max_players=2, max_actions=3, max_dim=2)
    w = rng.normal(size=g.feature_dim)
    report = welfare_tilted_ce(g, w, eps_target=0.1, max_iters=500)
    assert report.converged
    assert report.eps_internal <= 0.1 * 1.05 + 1e-9


def test_welfare_tilt_prefers_welfare():
    # with a slack target the tilted CE should beat the uniform welfare
    rng = np.random.default_rng(3)
    g = random_game(rng, max_players=2, max_actions=3, max_dim=2)
    w = rng.normal(size=g.feature_dim)
    report = welfare_tilted_ce(g, w, eps_target=5.0, max_iters=300)
    uniform_welfare = float(
        sum(np.full(g.n_outcomes, 1 / g.n_outcomes) @ (g.features[i] @ w) for i in range(2))
    )
    assert report.welfare >= uniform_welfare - 1e-9


def test_welfare_tilt_rejects_bad_eps():
    rng = np.random.default_rng(4)
    g = random_game(rng)
    with pytest.raises(ValidationError):
        welfare_tilted_ce(g, np.ones(g.feature_dim), eps_target=0.0)


def test_sample_empirical_round_trip():
    rng = np.random.default_rng(5)
    g = random_game(rng, max_players=2, max_actions=2)
    p = rng.dirichlet(np.ones(g.n_outcomes))
    demos = sample_demos(g, p, 50_000, seed=11)
    assert len(demos) == 50_000
    emp = empirical(demos, g)
    assert emp.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(emp, p, atol=0.02)


def test_sampling_is_seeded():
    rng = np.random.default_rng(6)
    g = random_game(rng)
    p = rng.dirichlet(np.ones(g.n_outcomes))
    assert sample_demos(g, p, 20, seed=3).outcomes == sample_demos(g, p, 20, seed=3).outcomes


def test_demo_set_validation():
    with pytest.raises(ValidationError):
        DemoSet(game_name="g", outcomes=(), seed=0)
    with pytest.raises(ValidationError):
        DemoSet(game_name="g", outcomes=(-1,), seed=0)
    rng = np.random.default_rng(7)
    g = random_game(rng, max_players=1, max_actions=2)
    with pytest.raises(ValidationError):
        empirical(DemoSet(game_name="g", outcomes=(g.n_outcomes,), seed=0), g)
