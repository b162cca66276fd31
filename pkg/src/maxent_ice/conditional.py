"""Estimation over distributions of games and behavior transfer.

A game family is a finitely supported distribution over games with one
shared deviation set; deviations that do not resolve in a member game act as
the identity there and contribute zero regret.  The conditional estimator
shares one set of dual weights across the family, weighting demonstrated
regret and the log partition terms by the family distribution.  Transfer
pairs the training family's demonstrated regret with a test game's partition
function and must be regularized to stay bounded.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .deviations import DeviationSet, build_deviation_set, expected_regret_features
from .errors import ValidationError
from .estimator import (
    DualWeights,
    FitResult,
    _DualProblem,
    _utility_energy,
    family_demo_regret_features,
    family_demo_utility_features,
)
from .game import Game, check_strategy, entropy

__all__ = [
    "GameFamily",
    "FamilyDemos",
    "conditional_entropy",
    "family_regret_features",
    "ConditionalMaxEntICE",
    "transfer_predict",
]


@dataclass(frozen=True)
class GameFamily:
    """Games with probability weights and one deviation set shared by all."""

    games: tuple
    weights: np.ndarray
    shared_deviations: DeviationSet

    def __post_init__(self):
        games = tuple(self.games)
        if not games:
            raise ValidationError("a family needs at least one game")
        dims = {g.feature_dim for g in games}
        if len(dims) != 1:
            raise ValidationError("family games must share feature_dim")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(games),) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("family weights must be a probability vector over games")
        object.__setattr__(self, "games", games)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.games)

    @property
    def feature_dim(self):
        return self.games[0].feature_dim


@dataclass(frozen=True)
class FamilyDemos:
    """Observed (game index, outcome index) pairs."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((int(g), int(o)) for g, o in self.entries)
        if not entries:
            raise ValidationError("family demos must be non-empty")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def validate(self, family: GameFamily):
        for g, o in self.entries:
            if not 0 <= g < len(family):
                raise ValidationError(f"game index {g} out of range")
            if not 0 <= o < family.games[g].n_outcomes:
                raise ValidationError(f"outcome index {o} out of range for game {g}")

    def empirical(self, family: GameFamily):
        """Empirical game weights and per-game outcome distributions.

        Games never observed get weight 0 and a uniform placeholder strategy.
        """
        self.validate(family)
        n = len(family)
        game_counts = np.zeros(n)
        per_game = [np.zeros(g.n_outcomes) for g in family.games]
        for gi, oi in self.entries:
            game_counts[gi] += 1.0
            per_game[gi][oi] += 1.0
        xi = game_counts / game_counts.sum()
        strategies = []
        for gi, cnt in enumerate(per_game):
            if cnt.sum() > 0:
                strategies.append(cnt / cnt.sum())
            else:
                strategies.append(np.full(len(cnt), 1.0 / len(cnt)))
        return xi, strategies


def conditional_entropy(family: GameFamily, strategies) -> float:
    """Family-weighted Shannon entropy of per-game strategies, in nats."""
    if len(strategies) != len(family):
        raise ValidationError("need one strategy per game")
    total = 0.0
    for g, w, p in zip(family.games, family.weights, strategies):
        total += w * entropy(check_strategy(g, p))
    return total


def family_regret_features(family: GameFamily, strategies, dev) -> np.ndarray:
    """Family-weighted expected regret features of one shared deviation."""
    out = np.zeros(family.feature_dim)
    for g, w, p in zip(family.games, family.weights, strategies):
        if dev.applies_to(g):
            out += w * expected_regret_features(g, p, dev)
    return out


class ConditionalMaxEntICE(BaseEstimator):
    """Shared-dual-weights estimator over a game family.

    On a family of one game with the demos pooled, this reduces exactly
    (bitwise) to the single-game estimator: both run the same solver on the
    same family-of-games problem.
    """

    def __init__(
        self,
        deviations="internal",
        comparison="full",
        grouping="global",
        cone="free",
        l1=0.0,
        l2=0.0,
        utility_match=False,
        utility_l2=None,
        tie_players=False,
        method="auto",
        max_iters=2000,
        step_c=1.0,
        tol=1e-9,
        gtol=1e-8,
        seed=0,
    ):
        self.deviations = deviations
        self.comparison = comparison
        self.grouping = grouping
        self.cone = cone
        self.l1 = l1
        self.l2 = l2
        self.utility_match = utility_match
        self.utility_l2 = utility_l2
        self.tie_players = tie_players
        self.method = method
        self.max_iters = max_iters
        self.step_c = step_c
        self.tol = tol
        self.gtol = gtol
        self.seed = seed

    def _resolve_devset(self, family: GameFamily) -> DeviationSet:
        if isinstance(self.deviations, DeviationSet):
            return self.deviations
        if family.shared_deviations is not None and self.deviations == "shared":
            return family.shared_deviations
        largest = max(family.games, key=lambda g: g.n_outcomes)
        return build_deviation_set(
            largest, self.deviations, comparison=self.comparison, grouping=self.grouping
        )

    def _problem(self, family, xi, demo_strategies, devset, pred_games=None, pred_xi=None):
        n_players = max(g.n_players for g in family.games)
        demo_r = family_demo_regret_features(family.games, demo_strategies, xi, devset)
        demo_u = None
        if self.utility_match:
            demo_u = family_demo_utility_features(family.games, demo_strategies, xi, n_players)
        return _DualProblem(
            pred_games if pred_games is not None else list(family.games),
            pred_xi if pred_xi is not None else xi,
            devset,
            demo_r,
            demo_utility=demo_u,
            cone=self.cone,
            l1=self.l1,
            l2=self.l2,
            utility_l2=self.utility_l2,
            tie_players=self.tie_players,
            utility_tied=self.tie_players and self.utility_match,
            n_util_players=n_players if self.utility_match else 0,
        )

    def fit(self, family: GameFamily, demos: FamilyDemos, xi=None):
        """Fit shared weights; xi defaults to the empirical game frequencies."""
        xi_emp, demo_strategies = demos.empirical(family)
        xi = np.asarray(xi, dtype=np.float64) if xi is not None else xi_emp
        devset = self._resolve_devset(family)
        prob = self._problem(family, xi, demo_strategies, devset)
        res = prob.solve(
            method=self.method,
            max_iters=self.max_iters,
            step_c=self.step_c,
            tol=self.tol,
            gtol=self.gtol,
        )
        th_g, lam = prob.split(res.x)
        weights = DualWeights(devset.ids, prob.expand_theta(th_g), lam, prob.utility_tied)
        self.family_ = family
        self.devset_ = devset
        self.xi_ = xi
        self.result_ = FitResult(
            weights=weights,
            predictions=prob.predictions(res.x),
            dual_value=res.value,
            iterations=res.iterations,
            converged=res.converged,
        )
        self.weights_ = weights
        return self

    def predict_proba(self, game_index: int = 0) -> np.ndarray:
        return self.result_.predictions[game_index]


def transfer_predict(
    train_family: GameFamily,
    train_demos: FamilyDemos,
    test_game: Game,
    estimator: ConditionalMaxEntICE | None = None,
    **params,
) -> np.ndarray:
    """Predict behavior on an unobserved game from training demonstrations.

    Solves the conditional dual with the demonstrated-regret side taken from
    the training family and the prediction side (regret and partition
    function) on the test game.  The dual must be L2-regularized: without it
    the transferred constraint set may be empty and the dual unbounded.

    With utility matching enabled, the multipliers are learned on the
    training family by a utility-only fit (empty deviation set) and carried
    over as a fixed energy tilt on the test game; only the regret weights
    are re-solved against the transferred constraints.  Matching test-game
    utility moments to training-game values is ill-posed when the games'
    utility scales differ.
    """
    est = estimator if estimator is not None else ConditionalMaxEntICE(**params)
    if not est.l2 or est.l2 <= 0:
        raise ValidationError(
            "transfer requires l2 > 0 (slack via dual regularization)"
        )
    if test_game.feature_dim != train_family.feature_dim:
        raise ValidationError("test game must share the family's feature_dim")
    xi, demo_strategies = train_demos.empirical(train_family)
    devset = est._resolve_devset(train_family)
    offsets = None
    if est.utility_match:
        tilt = ConditionalMaxEntICE(**est.get_params())
        tilt.deviations = DeviationSet((), ())
        tilt.l1 = 0.0
        tilt.l2 = 0.0
        tilt.method = "lbfgs"
        tilt.fit(train_family, train_demos)
        lam = tilt.weights_.utility
        offsets = [_utility_energy(test_game, lam, tilt.weights_.utility_tied)]
    demo_r = family_demo_regret_features(train_family.games, demo_strategies, xi, devset)
    prob = _DualProblem(
        [test_game],
        np.array([1.0]),
        devset,
        demo_r,
        cone=est.cone,
        l1=est.l1,
        l2=est.l2,
        tie_players=est.tie_players,
        energy_offsets=offsets,
    )
    res = prob.solve(
        method=est.method, max_iters=est.max_iters,
        step_c=est.step_c, tol=est.tol, gtol=est.gtol,
    )
    return prob.predictions(res.x)[0]
