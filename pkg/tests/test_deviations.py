import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxent_ice import (
    DeviationSet,
    build_deviation_set,
    composite,
    expected_regret_features,
    fixed,
    instantaneous_regret_features,
    max_regret,
    regret_value,
    switch,
)
from maxent_ice.cli import devset_from_ids, parse_deviation_id
from maxent_ice.deviations import apply_deviation, deviation_outcome_map
from maxent_ice.errors import DeviationSetTooLargeError, ValidationError
from maxent_ice.game import outcome_from_index, outcome_index

from conftest import random_game, random_strategy


def test_deviation_ids_round_trip():
    devs = [switch(0, 1, 2), fixed(2, 0), composite(1, (1, 0, 2))]
    for d in devs:
        assert parse_deviation_id(d.id) == d
    ds = devset_from_ids([d.id for d in devs])
    assert ds.ids == [d.id for d in devs]


def test_deviation_validation():
    with pytest.raises(ValidationError):
        switch(0, 1, 1)
    with pytest.raises(ValidationError):
        fixed(0, -1)
    with pytest.raises(ValidationError):
        composite(0, ())


def test_set_sizes():
    rng = np.random.default_rng(1)
    g = random_game(rng, max_players=3, max_actions=3)
    n_int = sum(c * (c - 1) for c in g.action_counts)
    n_ext = sum(g.action_counts)
    assert len(build_deviation_set(g, "internal")) == n_int
    assert len(build_deviation_set(g, "external")) == n_ext
    n_swap = sum(c ** c for c in g.action_counts)
    assert len(build_deviation_set(g, "swap")) == n_swap
    with pytest.raises(DeviationSetTooLargeError):
        build_deviation_set(g, "swap", swap_cap=1)


def test_comparison_structures():
    rng = np.random.default_rng(2)
    g = random_game(rng, max_players=2, max_actions=3)
    full = build_deviation_set(g, "internal", comparison="full", grouping="global")
    assert all(grp == tuple(range(len(full))) for grp in full.comparison)
    per = build_deviation_set(g, "internal", comparison="full", grouping="per-player")
    for i, d in enumerate(per.deviations):
        assert all(per.deviations[j].player == d.player for j in per.comparison[i])
    own = build_deviation_set(g, "internal", comparison="self")
    assert all(grp == (i,) for i, grp in enumerate(own.comparison))


def test_devset_validation():
    d = switch(0, 0, 1)
    with pytest.raises(ValidationError):
        DeviationSet((d, d), ((0,), (1,)))  # duplicate ids
    with pytest.raises(ValidationError):
        DeviationSet((d,), ())
    with pytest.raises(ValidationError):
        DeviationSet((d,), ((1,),))
    with pytest.raises(ValidationError):
        DeviationSet((d,), ((),))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.data())
def test_outcome_map_matches_pointwise_application(seed, data):
    rng = np.random.default_rng(seed)
    g = random_game(rng, max_players=3, max_actions=3)
    devs = build_deviation_set(g, "internal").deviations or (fixed(0, 0),)
    dev = devs[data.draw(st.integers(0, len(devs) - 1))]
    omap = deviation_outcome_map(g, dev)
    for idx in range(g.n_outcomes):
        moved = apply_deviation(g, dev, outcome_from_index(g, idx))
        assert omap[idx] == outcome_index(g, moved)


def test_outcome_map_is_cached_per_game():
    rng = np.random.default_rng(3)
    g = random_game(rng)
    dev = fixed(0, 0)
    assert deviation_outcome_map(g, dev) is deviation_outcome_map(g, dev)


def test_expected_regret_matches_brute_force():
    rng = np.random.default_rng(4)
    g = random_game(rng, max_players=2, max_actions=3)
    p = random_strategy(rng, g.n_outcomes)
    for dev in build_deviation_set(g, "internal").deviations:
        brute = np.zeros(g.feature_dim)
        for idx in range(g.n_outcomes):
            out = outcome_from_index(g, idx)
            brute += p[idx] * instantaneous_regret_features(g, dev, out)
        np.testing.assert_allclose(expected_regret_features(g, p, dev), brute, atol=1e-12)


def test_expected_regret_is_linear_in_strategy():
    rng = np.random.default_rng(5)
    g = random_game(rng, max_players=2, max_actions=3)
    p, q = random_strategy(rng, g.n_outcomes), random_strategy(rng, g.n_outcomes)
    dev = build_deviation_set(g, "external").deviations[0]
    mix = 0.3 * p + 0.7 * q
    np.testing.assert_allclose(
        expected_regret_features(g, mix, dev),
        0.3 * expected_regret_features(g, p, dev) + 0.7 * expected_regret_features(g, q, dev),
        atol=1e-12,
    )


def test_max_regret_scalarizes():
    rng = np.random.default_rng(6)
    g = random_game(rng, max_players=2, max_actions=3, max_dim=2)
    p = random_strategy(rng, g.n_outcomes)
    w = rng.normal(size=g.feature_dim)
    ds = build_deviation_set(g, "internal")
    expected = max(regret_value(g, p, d, w) for d in ds.deviations)
    assert max_regret(g, p, ds, w) == pytest.approx(expected)


def test_swap_contains_internal_and_external_as_maps():
    # every fixed and switch deviation equals some composite total map
    rng = np.random.default_rng(7)
    g = random_game(rng, max_players=2, max_actions=3)
    swap_maps = set()
    for i, n in enumerate(g.action_counts):
        for m in itertools.product(range(n), repeat=n):
            swap_maps.add((i, m))
    for kind in ("internal", "external"):
        for d in build_deviation_set(g, kind).deviations:
            amap = tuple(int(a) for a in d.action_map(g.action_counts[d.player]))
            assert (d.player, amap) in swap_maps
