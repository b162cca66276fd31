"""Shared fixtures and random-instance generators."""
import numpy as np
import pytest

from maxent_ice import Game


def random_game(rng, max_players=3, max_actions=3, max_dim=3, name="rand"):
    n_players = int(rng.integers(1, max_players + 1))
    counts = tuple(int(rng.integers(1, max_actions + 1)) for _ in range(n_players))
    k = int(rng.integers(1, max_dim + 1))
    n_out = int(np.prod(counts))
    feats = rng.normal(size=(n_players, n_out, k))
    return Game(name=name, action_counts=counts, features=feats)


def random_strategy(rng, n_outcomes):
    return rng.dirichlet(np.ones(n_outcomes))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_game(rng):
    return random_game(rng, max_players=2, max_actions=3, max_dim=2)
