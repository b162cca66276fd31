import numpy as np
import pytest

from maxent_ice import (
    MarketEntryConfig,
    ROUTING_VARIANTS,
    RoutingConfig,
    build_market_entry_family,
    build_routing_game,
    build_routing_variant,
)
from maxent_ice.errors import ValidationError
from maxent_ice.game import outcome_from_index, outcome_index


def test_routing_shapes():
    cfg = RoutingConfig()
    g = build_routing_game(cfg)
    assert g.action_counts == (4,) * 7
    assert g.n_outcomes == 4 ** 7
    assert g.feature_dim == 4
    np.testing.assert_array_equal(g.w_true, cfg.w_true)


def test_routing_features_match_hand_computation():
    cfg = RoutingConfig(drivers=2)
    g = build_routing_game(cfg)
    lengths = np.array(cfg.segment_lengths)
    # both drivers on route 0 = segments (0, 1): load 2 vs caps (2, 3), no excess
    idx = outcome_index(g, (0, 0))
    dist = lengths[0] + lengths[1]
    np.testing.assert_allclose(g.features[0, idx], [dist, dist, dist, 0.0])
    # overload segment 4 (cap 2) with 3 drivers to check the congestion delay
    cfg3 = RoutingConfig(drivers=3)
    g3 = build_routing_game(cfg3)
    idx3 = outcome_index(g3, (3, 3, 3))  # route 3 = segments (4, 5)
    excess4 = 3 - cfg3.segment_capacities[4]
    excess5 = 3 - cfg3.segment_capacities[5]
    stopped = (
        lengths[4] * cfg3.congestion_beta * excess4
        + lengths[5] * cfg3.congestion_beta * excess5
    )
    dist3 = lengths[4] + lengths[5]
    time = dist3 + stopped
    fuel = dist3 * (1.0 + cfg3.fuel_gamma * stopped)
    np.testing.assert_allclose(g3.features[1, idx3], [time, dist3, fuel, stopped])


def test_routing_is_deterministic():
    a = build_routing_game(RoutingConfig())
    b = build_routing_game(RoutingConfig())
    np.testing.assert_array_equal(a.features, b.features)


def test_routing_symmetry_across_drivers():
    # swapping two drivers' routes swaps their feature vectors
    g = build_routing_game(RoutingConfig(drivers=3))
    a = outcome_index(g, (0, 2, 1))
    b = outcome_index(g, (2, 0, 1))
    np.testing.assert_allclose(g.features[0, a], g.features[1, b])
    np.testing.assert_allclose(g.features[2, a], g.features[2, b])


def test_routing_variants():
    cfg = RoutingConfig()
    base = build_routing_game(cfg)
    highway = build_routing_variant(cfg, "add_highway")
    assert highway.action_counts == (5,) * 7
    driver = build_routing_variant(cfg, "add_driver")
    assert driver.action_counts == (4,) * 8
    gas = build_routing_variant(cfg, "gas_shortage")
    np.testing.assert_array_equal(gas.features, base.features)  # only w changes
    assert gas.w_true[2] == pytest.approx(5.0 * cfg.w_true[2])
    cong = build_routing_variant(cfg, "congestion")
    assert cong.action_counts == base.action_counts
    assert not np.array_equal(cong.features, base.features)
    with pytest.raises(ValidationError):
        build_routing_variant(cfg, "teleport")


def test_routing_config_validation():
    with pytest.raises(ValidationError):
        RoutingConfig(drivers=0)
    with pytest.raises(ValidationError):
        RoutingConfig(segment_lengths=(1.0,), segment_capacities=(1, 2))
    with pytest.raises(ValidationError):
        RoutingConfig(routes=((9,),))


def test_market_entry_family_shapes():
    cfg = MarketEntryConfig()
    family, demos = build_market_entry_family(cfg, n_games=3, rounds_kept=4, seed=0)
    assert len(family) == 12
    assert all(g.action_counts == (2,) * cfg.players for g in family.games)
    assert family.feature_dim == cfg.feature_dim
    demos.validate(family)
    assert len(demos) == 12
    # entering players carry nonzero features, abstainers none
    g = family.games[0]
    idx_out = outcome_index(g, (0,) * cfg.players)
    np.testing.assert_array_equal(g.features[0, idx_out], np.zeros(cfg.feature_dim))


def test_market_entry_feature_toggles():
    cfg = MarketEntryConfig(use_reward_variance=False, use_ew=False)
    assert cfg.feature_dim == 3
    family, _ = build_market_entry_family(cfg, n_games=1, rounds_kept=2, seed=0)
    assert family.feature_dim == 3


def test_market_entry_is_seeded():
    a = build_market_entry_family(MarketEntryConfig(), 2, rounds_kept=3, seed=5)
    b = build_market_entry_family(MarketEntryConfig(), 2, rounds_kept=3, seed=5)
    assert a[1].entries == b[1].entries
    np.testing.assert_array_equal(a[0].games[0].features, b[0].games[0].features)


def test_market_entry_agent_models():
    fam_rm, _ = build_market_entry_family(
        MarketEntryConfig(), 1, rounds_kept=2, agent_model="regret_matching", seed=0
    )
    assert len(fam_rm) == 2
    with pytest.raises(ValidationError):
        build_market_entry_family(MarketEntryConfig(), 1, agent_model="oracle")
    with pytest.raises(ValidationError):
        build_market_entry_family(MarketEntryConfig(), 1, rounds_kept=0)


def test_variant_names_exported():
    assert set(ROUTING_VARIANTS) == {"add_highway", "add_driver", "gas_shortage", "congestion"}
