"""Vector-valued normal-form games and regret quantities.

A game stores, for every (player, outcome) pair, a feature vector; scalar
utility only arises through an inner product with a weight vector.  Outcomes
are flat-indexed in row-major order with the *last* player's action varying
fastest, which pins down the on-disk format.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvalidOutcomeError, ValidationError

__all__ = [
    "Game",
    "outcome_index",
    "outcome_from_index",
    "check_strategy",
    "point_mass",
    "uniform_strategy",
    "utility",
    "expected_utility_features",
    "entropy",
]


@dataclass(frozen=True)
class Game:
    """A finite normal-form game with per-outcome utility *features*.

    Attributes
    ----------
    name : str
        Identifier used to tie demo files back to their game.
    action_counts : tuple of int
        Number of actions per player.
    features : ndarray, shape (n_players, n_outcomes, feature_dim)
        Utility feature vector for every (player, outcome).
    w_true : ndarray or None
        Optional generator-side true utility weights.
    """

    name: str
    action_counts: tuple
    features: np.ndarray
    w_true: np.ndarray | None = None

    def __post_init__(self):
        counts = tuple(int(c) for c in self.action_counts)
        if len(counts) < 1 or any(c < 1 for c in counts):
            raise ValidationError("action_counts must be positive integers")
        object.__setattr__(self, "action_counts", counts)
        feats = np.asarray(self.features, dtype=np.float64)
        n_outcomes = int(np.prod(counts))
        if feats.ndim != 3 or feats.shape[0] != len(counts) or feats.shape[1] != n_outcomes:
            raise ValidationError(
                f"features must have shape (n_players, {n_outcomes}, feature_dim), "
                f"got {feats.shape}"
            )
        if not np.all(np.isfinite(feats)):
            raise ValidationError("features must be finite")
        object.__setattr__(self, "features", feats)
        if self.w_true is not None:
            w = np.asarray(self.w_true, dtype=np.float64)
            if w.shape != (feats.shape[2],):
                raise DimensionMismatchError("w_true length must equal feature_dim")
            object.__setattr__(self, "w_true", w)

    @property
    def n_players(self) -> int:
        return len(self.action_counts)

    @property
    def n_outcomes(self) -> int:
        return self.features.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[2]

    @property
    def strides(self) -> tuple:
        """Flat-index stride per player (last player has stride 1)."""
        s = [1] * self.n_players
        for i in range(self.n_players - 2, -1, -1):
            s[i] = s[i + 1] * self.action_counts[i + 1]
        return tuple(s)


def outcome_index(game: Game, outcome) -> int:
    """Flat index of an action profile (row-major, last player fastest)."""
    acts = np.asarray(outcome, dtype=np.int64)
    if acts.shape != (game.n_players,):
        raise InvalidOutcomeError(f"outcome must list {game.n_players} actions")
    for i, (a, c) in enumerate(zip(acts, game.action_counts)):
        if not 0 <= a < c:
            raise InvalidOutcomeError(f"action {a} out of range for player {i}")
    return int(np.ravel_multi_index(acts, game.action_counts))


def outcome_from_index(game: Game, index: int):
    """Inverse of :func:`outcome_index`."""
    if not 0 <= index < game.n_outcomes:
        raise InvalidOutcomeError(f"outcome index {index} out of range")
    return tuple(int(a) for a in np.unravel_index(index, game.action_counts))


def all_outcomes(game: Game) -> np.ndarray:
    """Action profiles for every flat index, shape (n_outcomes, n_players)."""
    grids = np.unravel_index(np.arange(game.n_outcomes), game.action_counts)
    return np.stack(grids, axis=1)


def check_strategy(game: Game, probs, atol: float = 1e-12) -> np.ndarray:
    """Validate a joint strategy and return it as a float64 array."""
    p = np.asarray(probs, dtype=np.float64)
    if p.shape != (game.n_outcomes,):
        raise ValidationError(f"strategy must have length {game.n_outcomes}")
    if np.any(p < 0):
        raise ValidationError("strategy probabilities must be non-negative")
    if abs(p.sum() - 1.0) > atol:
        raise ValidationError(f"strategy must sum to 1, got {p.sum()!r}")
    return p


def point_mass(game: Game, index: int) -> np.ndarray:
    p = np.zeros(game.n_outcomes)
    p[index] = 1.0
    return p


def uniform_strategy(game: Game) -> np.ndarray:
    return np.full(game.n_outcomes, 1.0 / game.n_outcomes)


def _check_w(game: Game, w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (game.feature_dim,):
        raise DimensionMismatchError(
            f"weight vector must have length {game.feature_dim}, got {w.shape}"
        )
    return w


def utility(game: Game, player: int, outcome, w) -> float:
    """Scalar utility <u_player(outcome), w>."""
    w = _check_w(game, w)
    idx = outcome_index(game, outcome)
    return float(game.features[player, idx] @ w)


def expected_utility_features(game: Game, player: int, probs) -> np.ndarray:
    """Expected utility feature vector of one player under a joint strategy."""
    p = check_strategy(game, probs)
    return p @ game.features[player]


def entropy(probs) -> float:
    """Shannon entropy in nats; 0*log(0) treated as 0."""
    p = np.asarray(probs, dtype=np.float64)
    nz = p > 0
    return float(-(p[nz] * np.log(p[nz])).sum())
