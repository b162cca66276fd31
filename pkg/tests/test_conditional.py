import numpy as np
import pytest

from maxent_ice import (
    ConditionalMaxEntICE,
    FamilyDemos,
    GameFamily,
    MaxEntICE,
    build_deviation_set,
    conditional_entropy,
    transfer_predict,
)
from maxent_ice.conditional import family_regret_features
from maxent_ice.deviations import expected_regret_features, switch
from maxent_ice.errors import ValidationError

from conftest import random_game, random_strategy


def two_game_family(rng, counts=((2, 2), (2, 3))):
    from maxent_ice import Game

    k = 2
    games = [
        Game(f"g{i}", c, rng.normal(size=(len(c), int(np.prod(c)), k)))
        for i, c in enumerate(counts)
    ]
    shared = build_deviation_set(max(games, key=lambda g: g.n_outcomes), "internal")
    return GameFamily(tuple(games), np.array([0.5, 0.5]), shared)


def test_family_validation():
    rng = np.random.default_rng(0)
    fam = two_game_family(rng)
    with pytest.raises(ValidationError):
        GameFamily((), np.array([]), fam.shared_deviations)
    with pytest.raises(ValidationError):
        GameFamily(fam.games, np.array([0.6, 0.6]), fam.shared_deviations)
    from maxent_ice import Game

    odd = Game("odd", (2,), np.zeros((1, 2, 5)))
    with pytest.raises(ValidationError):
        GameFamily((fam.games[0], odd), np.array([0.5, 0.5]), fam.shared_deviations)


def test_family_demos_empirical():
    rng = np.random.default_rng(1)
    fam = two_game_family(rng)
    demos = FamilyDemos(((0, 0), (0, 1), (1, 2)))
    demos.validate(fam)
    xi, strategies = demos.empirical(fam)
    np.testing.assert_allclose(xi, [2 / 3, 1 / 3])
    assert strategies[0][0] == pytest.approx(0.5)
    assert strategies[1][2] == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        FamilyDemos(((5, 0),)).validate(fam)
    with pytest.raises(ValidationError):
        FamilyDemos(())


def test_inapplicable_deviation_contributes_zero():
    rng = np.random.default_rng(2)
    fam = two_game_family(rng)
    small = fam.games[0]  # (2, 2): action 2 does not exist
    dev = switch(1, 2, 0)
    assert not dev.applies_to(small)
    strategies = [random_strategy(rng, g.n_outcomes) for g in fam.games]
    out = family_regret_features(fam, strategies, dev)
    np.testing.assert_allclose(
        out, fam.weights[1] * expected_regret_features(fam.games[1], strategies[1], dev)
    )


def test_conditional_entropy_weighs_games():
    rng = np.random.default_rng(3)
    fam = two_game_family(rng)
    strategies = [np.full(g.n_outcomes, 1.0 / g.n_outcomes) for g in fam.games]
    expected = 0.5 * np.log(4) + 0.5 * np.log(6)
    assert conditional_entropy(fam, strategies) == pytest.approx(expected)


def test_one_game_family_reduces_to_plain_fit():
    rng = np.random.default_rng(4)
    g = random_game(rng, max_players=2, max_actions=3, max_dim=2)
    outcomes = rng.integers(0, g.n_outcomes, 40)
    devset = build_deviation_set(g, "internal", comparison="self")
    fam = GameFamily((g,), np.array([1.0]), devset)
    cond = ConditionalMaxEntICE(deviations="shared").fit(
        fam, FamilyDemos(tuple((0, int(o)) for o in outcomes))
    )
    plain = MaxEntICE(deviations=devset).fit(g, np.asarray(outcomes))
    np.testing.assert_array_equal(cond.predict_proba(0), plain.predict_proba())
    np.testing.assert_array_equal(cond.weights_.theta, plain.weights_.theta)
    assert cond.result_.dual_value == plain.result_.dual_value


def test_conditional_fit_shares_weights_across_games():
    rng = np.random.default_rng(5)
    fam = two_game_family(rng)
    demos = FamilyDemos(tuple((i % 2, int(rng.integers(0, fam.games[i % 2].n_outcomes))) for i in range(30)))
    est = ConditionalMaxEntICE(deviations="shared", comparison="self").fit(fam, demos)
    assert est.weights_.theta.shape == (len(fam.shared_deviations), fam.feature_dim)
    for gi in range(len(fam)):
        p = est.predict_proba(gi)
        assert p.shape == (fam.games[gi].n_outcomes,)
        assert p.sum() == pytest.approx(1.0)


def test_transfer_requires_l2_and_matching_dims():
    rng = np.random.default_rng(6)
    fam = two_game_family(rng)
    demos = FamilyDemos(((0, 0), (1, 1)))
    test_game = fam.games[1]
    with pytest.raises(ValidationError):
        transfer_predict(fam, demos, test_game, l2=0.0)
    from maxent_ice import Game

    odd = Game("odd", (2,), np.zeros((1, 2, 7)))
    with pytest.raises(ValidationError):
        transfer_predict(fam, demos, odd, l2=0.1)


def test_transfer_to_training_game_stays_close():
    # transferring back to a family member should roughly reproduce its fit
    rng = np.random.default_rng(7)
    g = random_game(rng, max_players=2, max_actions=3, max_dim=2)
    devset = build_deviation_set(g, "internal", comparison="self")
    fam = GameFamily((g,), np.array([1.0]), devset)
    outcomes = tuple((0, int(o)) for o in rng.integers(0, g.n_outcomes, 200))
    demos = FamilyDemos(outcomes)
    pred = transfer_predict(fam, demos, g, deviations="shared", l2=1e-3)
    direct = ConditionalMaxEntICE(deviations="shared", l2=1e-3).fit(fam, demos)
    np.testing.assert_allclose(pred, direct.predict_proba(0), atol=1e-6)
