"""Strategy-modification functions (deviations) and regret computations.

A deviation remaps one player's action.  Expected regret features are
computed without materializing per-outcome regret tensors: applying a
deviation to every outcome is an index gather, so the regret feature of a
strategy is a difference of two weighted feature sums.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DeviationSetTooLargeError, ValidationError
from .game import Game, check_strategy, outcome_index

__all__ = [
    "Deviation",
    "DeviationSet",
    "switch",
    "fixed",
    "composite",
    "build_deviation_set",
    "apply_deviation",
    "deviation_outcome_map",
    "instantaneous_regret_features",
    "expected_regret_features",
    "regret_value",
    "max_regret",
]

SWAP_CAP_DEFAULT = 10 ** 6


@dataclass(frozen=True)
class Deviation:
    """A remapping of one player's action.

    ``kind`` is one of ``switch`` (conditional substitution x -> y),
    ``fixed`` (unconditional -> y) or ``composite`` (arbitrary total map,
    stored in ``mapping``).
    """

    kind: str
    player: int
    x: int = -1
    y: int = -1
    mapping: tuple = ()

    def __post_init__(self):
        if self.kind == "switch":
            if self.x == self.y:
                raise ValidationError("switch deviation requires x != y")
            if self.x < 0 or self.y < 0:
                raise ValidationError("switch deviation requires actions x and y")
        elif self.kind == "fixed":
            if self.y < 0:
                raise ValidationError("fixed deviation requires a target action y")
        elif self.kind == "composite":
            if not self.mapping:
                raise ValidationError("composite deviation requires a total mapping")
            object.__setattr__(self, "mapping", tuple(int(m) for m in self.mapping))
        else:
            raise ValidationError(f"unknown deviation kind {self.kind!r}")

    @property
    def id(self) -> str:
        if self.kind == "switch":
            return f"p{self.player}:switch:{self.x}->{self.y}"
        if self.kind == "fixed":
            return f"p{self.player}:fixed:->{self.y}"
        return f"p{self.player}:map:" + ",".join(str(m) for m in self.mapping)

    def action_map(self, n_actions: int) -> np.ndarray:
        """The deviation as a total map over the player's action set."""
        m = np.arange(n_actions)
        if self.kind == "switch":
            if self.x >= n_actions or self.y >= n_actions:
                raise ValidationError(f"deviation {self.id} out of range")
            m[self.x] = self.y
        elif self.kind == "fixed":
            if self.y >= n_actions:
                raise ValidationError(f"deviation {self.id} out of range")
            m[:] = self.y
        else:
            if len(self.mapping) != n_actions or max(self.mapping) >= n_actions:
                raise ValidationError(f"deviation {self.id} does not match action set")
            m = np.asarray(self.mapping, dtype=np.int64)
        return m

    def applies_to(self, game: Game) -> bool:
        """Whether this deviation resolves in ``game`` (player and actions align)."""
        if self.player >= game.n_players:
            return False
        n = game.action_counts[self.player]
        if self.kind == "switch":
            return self.x < n and self.y < n
        if self.kind == "fixed":
            return self.y < n
        return len(self.mapping) == n and max(self.mapping) < n


def switch(player: int, x: int, y: int) -> Deviation:
    return Deviation("switch", player, x=x, y=y)


def fixed(player: int, y: int) -> Deviation:
    return Deviation("fixed", player, y=y)


def composite(player: int, mapping) -> Deviation:
    return Deviation("composite", player, mapping=tuple(mapping))


def apply_deviation(game: Game, dev: Deviation, outcome):
    """Apply a deviation to a single action profile."""
    acts = list(outcome)
    outcome_index(game, acts)  # range check
    if not dev.applies_to(game):
        raise ValidationError(f"deviation {dev.id} does not apply to game {game.name}")
    amap = dev.action_map(game.action_counts[dev.player])
    acts[dev.player] = int(amap[acts[dev.player]])
    return tuple(acts)


def deviation_outcome_map(game: Game, dev: Deviation) -> np.ndarray:
    """Flat-index permutation: entry a is the index of the deviated outcome.

    Memoized per game instance; solvers query the same maps every iteration.
    """
    cache = game.__dict__.get("_omap_cache")
    if cache is None:
        cache = {}
        object.__setattr__(game, "_omap_cache", cache)
    hit = cache.get(dev)
    if hit is not None:
        return hit
    if not dev.applies_to(game):
        raise ValidationError(f"deviation {dev.id} does not apply to game {game.name}")
    stride = game.strides[dev.player]
    n = game.action_counts[dev.player]
    idx = np.arange(game.n_outcomes, dtype=np.int64)
    own = (idx // stride) % n
    amap = dev.action_map(n)
    omap = idx + (amap[own] - own) * stride
    omap.setflags(write=False)
    cache[dev] = omap
    return omap


def instantaneous_regret_features(game: Game, dev: Deviation, outcome) -> np.ndarray:
    """u_i(f(a)) - u_i(a) as a feature vector."""
    a = outcome_index(game, outcome)
    b = outcome_index(game, apply_deviation(game, dev, outcome))
    return game.features[dev.player, b] - game.features[dev.player, a]


def expected_regret_features(game: Game, probs, dev: Deviation) -> np.ndarray:
    """Expected regret feature vector of a deviation under a joint strategy."""
    p = check_strategy(game, probs)
    omap = deviation_outcome_map(game, dev)
    shifted = np.bincount(omap, weights=p, minlength=game.n_outcomes)
    return (shifted - p) @ game.features[dev.player]


def regret_value(game: Game, probs, dev: Deviation, w) -> float:
    """Scalar expected regret <r_f(sigma), w>."""
    w = np.asarray(w, dtype=np.float64)
    return float(expected_regret_features(game, probs, dev) @ w)


@dataclass(frozen=True)
class DeviationSet:
    """An ordered deviation list plus its comparison structure.

    ``comparison[f]`` lists the indices of the deviations that deviation f is
    measured against; ``{f}`` itself yields regret matching.
    """

    deviations: tuple
    comparison: tuple

    def __post_init__(self):
        devs = tuple(self.deviations)
        ids = [d.id for d in devs]
        if len(set(ids)) != len(ids):
            raise ValidationError("deviation ids must be unique")
        comp = tuple(tuple(int(i) for i in grp) for grp in self.comparison)
        if len(comp) != len(devs):
            raise ValidationError("comparison must list one group per deviation")
        for grp in comp:
            if not grp:
                raise ValidationError("comparison groups must be non-empty")
            if any(i < 0 or i >= len(devs) for i in grp):
                raise ValidationError("comparison group index out of range")
        object.__setattr__(self, "deviations", devs)
        object.__setattr__(self, "comparison", comp)

    def __len__(self):
        return len(self.deviations)

    @property
    def ids(self):
        return [d.id for d in self.deviations]


def max_regret(game: Game, probs, devset: DeviationSet, w) -> float:
    """Exact maximum expected regret over a deviation set.

    A strategy is an eps-equilibrium under ``w`` iff the result is <= eps.
    """
    if len(devset) == 0:
        raise ValidationError("deviation set must be non-empty")
    return max(regret_value(game, probs, d, w) for d in devset.deviations)


def _make_comparison(devs, comparison: str, grouping: str):
    n = len(devs)
    if comparison == "self":
        return tuple((i,) for i in range(n))
    if comparison != "full":
        raise ValidationError(f"unknown comparison {comparison!r}")
    if grouping == "global":
        full = tuple(range(n))
        return tuple(full for _ in range(n))
    if grouping == "per-player":
        groups = {}
        for i, d in enumerate(devs):
            groups.setdefault(d.player, []).append(i)
        return tuple(tuple(groups[d.player]) for d in devs)
    raise ValidationError(f"unknown grouping {grouping!r}")


def build_deviation_set(
    game: Game,
    kind: str = "internal",
    comparison: str = "full",
    grouping: str = "global",
    swap_cap: int = SWAP_CAP_DEFAULT,
) -> DeviationSet:
    """Construct the internal, external or swap deviation set of a game.

    Swap deviations enumerate every total action map per player and are only
    materialized below ``swap_cap``; internal deviations are the tractable
    surrogate (swap regret is at most max_i |A_i| times internal regret).
    """
    devs = []
    if kind == "internal":
        for i, n in enumerate(game.action_counts):
            for x in range(n):
                for y in range(n):
                    if x != y:
                        devs.append(switch(i, x, y))
    elif kind == "external":
        for i, n in enumerate(game.action_counts):
            for y in range(n):
                devs.append(fixed(i, y))
    elif kind == "swap":
        total = sum(n ** n for n in game.action_counts)
        if total > swap_cap:
            raise DeviationSetTooLargeError(
                f"swap deviation set has {total} maps, above cap {swap_cap}"
            )
        for i, n in enumerate(game.action_counts):
            for mapping in itertools.product(range(n), repeat=n):
                devs.append(composite(i, mapping))
    else:
        raise ValidationError(f"unknown deviation kind {kind!r}")
    return DeviationSet(tuple(devs), _make_comparison(devs, comparison, grouping))
