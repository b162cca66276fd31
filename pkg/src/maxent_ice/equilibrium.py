"""Demonstration generators: learning dynamics, welfare-tilted equilibria, sampling.

The default generator runs per-player conditional regret-matching dynamics
and reports the time-averaged empirical joint play.  The welfare-tilted
generator runs projected subgradient ascent on social welfare with a regret
penalty, reproducing demonstrations whose selection criterion (welfare) is
not captured by regret alone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .deviations import build_deviation_set, max_regret
from .errors import ValidationError
from .game import Game, check_strategy
from .solvers import project_simplex

__all__ = [
    "DemoSet",
    "EquilibriumReport",
    "regret_matching_ce",
    "welfare_tilted_ce",
    "sample_demos",
    "empirical",
]


@dataclass(frozen=True)
class DemoSet:
    """Observed outcomes (flat indices) of one game."""

    game_name: str
    outcomes: tuple
    seed: int

    def __post_init__(self):
        outs = tuple(int(o) for o in self.outcomes)
        if len(outs) < 1:
            raise ValidationError("a demo set needs at least one outcome")
        if any(o < 0 for o in outs):
            raise ValidationError("outcome indices must be non-negative")
        object.__setattr__(self, "outcomes", outs)

    def __len__(self):
        return len(self.outcomes)


@dataclass(frozen=True)
class EquilibriumReport:
    strategy: np.ndarray
    eps_external: float
    eps_internal: float
    welfare: float
    converged: bool = True


def _report(game: Game, w: np.ndarray, probs: np.ndarray, converged=True) -> EquilibriumReport:
    probs = check_strategy(game, probs)
    ext = build_deviation_set(game, "external")
    internal = build_deviation_set(game, "internal")
    welfare = float(sum(probs @ (game.features[i] @ w) for i in range(game.n_players)))
    return EquilibriumReport(
        strategy=probs,
        eps_external=max_regret(game, probs, ext, w),
        eps_internal=max_regret(game, probs, internal, w) if len(internal) else 0.0,
        welfare=welfare,
        converged=converged,
    )


def regret_matching_ce(game: Game, w, rounds: int, seed: int) -> EquilibriumReport:
    """Time-averaged play of per-player conditional regret matching.

    Each player tracks cumulative regret of every action switch at played
    outcomes and deviates from its last action with probability proportional
    to positive switch regret.  The empirical joint distribution approaches
    the correlated equilibrium set.
    """
    if rounds < 1:
        raise ValidationError("rounds must be >= 1")
    w = np.asarray(w, dtype=np.float64)
    rng = np.random.default_rng(seed)
    util = np.array([game.features[i] @ w for i in range(game.n_players)])  # (N, M)
    strides = np.asarray(game.strides)
    counts = np.asarray(game.action_counts)
    span = float(util.max() - util.min()) or 1.0
    mu = 2.0 * counts.max() * span  # switch probability normalizer
    cum = [np.zeros((c, c)) for c in counts]  # cumulative switch regret
    actions = np.array([rng.integers(c) for c in counts])
    empirical_counts = np.zeros(game.n_outcomes)
    for _ in range(rounds):
        idx = int(actions @ strides)
        empirical_counts[idx] += 1.0
        new_actions = actions.copy()
        for i in range(game.n_players):
            x = actions[i]
            # regret of switching player i's action at the played outcome
            alt = idx + (np.arange(counts[i]) - x) * strides[i]
            cum[i][x] += util[i, alt] - util[i, idx]
            probs = np.maximum(cum[i][x], 0.0) / mu
            probs[x] = 0.0
            stay = 1.0 - probs.sum()
            if stay < 0:  # cap, should not trigger with the chosen mu
                probs /= probs.sum()
                stay = 0.0
            probs[x] = stay
            new_actions[i] = rng.choice(counts[i], p=probs)
        actions = new_actions
    avg = empirical_counts / rounds
    return _report(game, w, avg)


def welfare_tilted_ce(
    game: Game,
    w,
    eps_target: float,
    max_iters: int = 2000,
    seed: int = 0,
) -> EquilibriumReport:
    """Projected subgradient ascent on social welfare with a regret penalty.

    Maximizes total utility over the outcome simplex subject (by penalty) to
    internal regret at most ``eps_target``.  The penalty weight doubles until
    the constraint is met; a not-converged report is returned otherwise.
    """
    if eps_target <= 0:
        raise ValidationError("eps_target must be positive")
    w = np.asarray(w, dtype=np.float64)
    devset = build_deviation_set(game, "internal")
    util = np.array([game.features[i] @ w for i in range(game.n_players)])
    welfare_vec = util.sum(axis=0)  # per-outcome social welfare
    # per-deviation instantaneous regret as a vector over outcomes
    from .deviations import deviation_outcome_map

    regret_vecs = []
    for dev in devset.deviations:
        omap = deviation_outcome_map(game, dev)
        regret_vecs.append(util[dev.player][omap] - util[dev.player])
    if not regret_vecs:  # single-action players: no deviations, no constraint
        regret_vecs = [np.zeros(game.n_outcomes)]
    regret_mat = np.stack(regret_vecs)  # (F, M)

    sigma = np.full(game.n_outcomes, 1.0 / game.n_outcomes)
    lam = 1.0
    for _ in range(20):  # penalty doubling schedule
        for t in range(1, max_iters + 1):
            regrets = regret_mat @ sigma
            f_star = int(np.argmax(regrets))
            grad = welfare_vec.copy()
            if regrets[f_star] > eps_target:
                grad -= lam * regret_mat[f_star]
            sigma = project_simplex(sigma + (1.0 / np.sqrt(t)) * grad)
        sigma = np.maximum(sigma, 0.0)
        sigma /= sigma.sum()  # undo accumulated projection round-off
        if float(np.max(regret_mat @ sigma)) <= eps_target * 1.05:
            return _report(game, w, sigma)
        lam *= 2.0
    return _report(game, w, sigma, converged=False)


def sample_demos(game: Game, probs, n_samples: int, seed: int) -> DemoSet:
    """Draw i.i.d. outcome observations from a joint strategy."""
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    p = check_strategy(game, probs)
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(game.n_outcomes, size=n_samples, p=p)
    return DemoSet(game_name=game.name, outcomes=tuple(int(o) for o in outcomes), seed=seed)


def empirical(demos: DemoSet, game: Game) -> np.ndarray:
    """Empirical distribution of a demo set over the game's outcomes."""
    outs = np.asarray(demos.outcomes)
    if outs.max(initial=0) >= game.n_outcomes:
        raise ValidationError("demo outcome index out of range for game")
    counts = np.bincount(outs, minlength=game.n_outcomes)
    return counts / counts.sum()
