"""Strategy-blind comparators and the log-loss metric.

Three baselines: an additively smoothed multinomial over joint outcomes
(smoothing weight picked by exact leave-one-out cross validation), a
log-linear model over outcomes parameterized by player-summed utility
features (the single-agent inverse-optimal-control analogue), and an
independent per-player log-linear model conditioned on the others'
empirical play.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .equilibrium import DemoSet
from .errors import InfiniteLossError, ValidationError
from .estimator import as_demo_probs
from .game import Game, check_strategy
from .solvers import lbfgs_min

__all__ = [
    "MultinomialBaseline",
    "OutcomeLogit",
    "PerPlayerIOC",
    "log_loss",
    "cross_entropy_bits",
    "loo_log_loss",
]

LAMBDA_GRID = np.logspace(-3, 3, 25)


def loo_log_loss(counts: np.ndarray, lam: float) -> float:
    """Exact leave-one-out log-loss of additive smoothing, from counts alone.

    Holding one observation of outcome a out leaves count(a)-1 of T-1, so the
    LOO loss is a count-weighted sum requiring no refits.
    """
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total < 2:
        raise ValidationError("leave-one-out needs at least 2 observations")
    m = counts.size
    observed = counts > 0
    held = (counts[observed] - 1.0 + lam) / (total - 1.0 + lam * m)
    return float(-(counts[observed] * np.log(held)).sum() / total)


class MultinomialBaseline(BaseEstimator):
    """Additively smoothed multinomial with LOO-selected smoothing weight."""

    def __init__(self, lambda_grid=None):
        self.lambda_grid = lambda_grid

    def fit(self, game: Game, demos):
        probs = as_demo_probs(game, demos)
        n = _demo_count(demos)
        counts = probs * n
        grid = self.lambda_grid if self.lambda_grid is not None else LAMBDA_GRID
        losses = [loo_log_loss(counts, lam) for lam in grid]
        best = int(np.argmin(losses))
        self.lambda_ = float(grid[best])
        self.prediction_ = (counts + self.lambda_) / (n + self.lambda_ * game.n_outcomes)
        self.game_ = game
        return self

    def predict_proba(self, game: Game | None = None) -> np.ndarray:
        return self.prediction_


def _demo_count(demos) -> int:
    if isinstance(demos, DemoSet):
        return len(demos)
    arr = np.asarray(demos)
    if np.issubdtype(arr.dtype, np.integer):
        return arr.size
    raise ValidationError("multinomial smoothing needs counted demos, not a distribution")


def _summed_utility(game: Game) -> np.ndarray:
    return game.features.sum(axis=0)  # (n_outcomes, K)


def _fit_softmax(x_mat: np.ndarray, emp: np.ndarray, l2: float, max_iters=500, gtol=1e-9):
    """Maximize l2-regularized log-likelihood of a softmax over rows of x_mat."""

    def value_and_grad(w):
        logits = x_mat @ w
        m = logits.max()
        ex = np.exp(logits - m)
        z = ex.sum()
        p = ex / z
        nll = -(emp @ logits) + (m + np.log(z)) + 0.5 * l2 * (w @ w)
        grad = x_mat.T @ (p - emp) + l2 * w
        return nll, grad

    res = lbfgs_min(value_and_grad, np.zeros(x_mat.shape[1]), max_iters=max_iters, gtol=gtol)
    logits = x_mat @ res.x
    m = logits.max()
    ex = np.exp(logits - m)
    return res.x, ex / ex.sum(), res


class OutcomeLogit(BaseEstimator):
    """Log-linear model over joint outcomes with summed-utility features.

    ``feature_mode`` is ``"summed_utility"`` or ``"summed_utility+bias"``
    (adds one indicator feature per outcome).
    """

    def __init__(self, feature_mode="summed_utility", l2=0.0, max_iters=500, gtol=1e-9):
        self.feature_mode = feature_mode
        self.l2 = l2
        self.max_iters = max_iters
        self.gtol = gtol

    def _design(self, game: Game) -> np.ndarray:
        x = _summed_utility(game)
        if self.feature_mode == "summed_utility":
            return x
        if self.feature_mode == "summed_utility+bias":
            return np.hstack([x, np.eye(game.n_outcomes)])
        raise ValidationError(f"unknown feature_mode {self.feature_mode!r}")

    def fit(self, game: Game, demos):
        emp = as_demo_probs(game, demos)
        x_mat = self._design(game)
        self.coef_, self.prediction_, res = _fit_softmax(
            x_mat, emp, self.l2, self.max_iters, self.gtol
        )
        self.converged_ = res.converged
        self.game_ = game
        return self

    def predict_proba(self, game: Game | None = None) -> np.ndarray:
        if game is None or game is self.game_:
            return self.prediction_
        if self.feature_mode != "summed_utility":
            raise ValidationError("bias features do not transfer across games")
        logits = _summed_utility(game) @ self.coef_
        ex = np.exp(logits - logits.max())
        return ex / ex.sum()


class PerPlayerIOC(BaseEstimator):
    """Independent per-player log-linear models over own actions.

    Each player's action features are its utility features averaged over the
    other players' empirical play; the joint prediction is the product of
    the per-player action distributions.
    """

    def __init__(self, l2=0.0, max_iters=500, gtol=1e-9):
        self.l2 = l2
        self.max_iters = max_iters
        self.gtol = gtol

    def fit(self, game: Game, demos):
        emp = as_demo_probs(game, demos)
        joint = emp.reshape(game.action_counts)
        marginals = []
        self.coefs_ = []
        for i in range(game.n_players):
            other_axes = tuple(a for a in range(game.n_players) if a != i)
            own_marg = joint.sum(axis=other_axes)
            others = joint.sum(axis=i, keepdims=False)
            if others.sum() > 0:
                others = others / others.sum()
            # action features: expected utility features vs others' empirical play
            feats = game.features[i].reshape(game.action_counts + (game.feature_dim,))
            feats = np.moveaxis(feats, i, 0).reshape(game.action_counts[i], -1, game.feature_dim)
            psi = np.einsum("xok,o->xk", feats, others.ravel())
            w, probs, _ = _fit_softmax(psi, own_marg, self.l2, self.max_iters, self.gtol)
            self.coefs_.append(w)
            marginals.append(probs)
        self.marginals_ = marginals
        joint_pred = marginals[0]
        for p in marginals[1:]:
            joint_pred = np.multiply.outer(joint_pred, p)
        self.prediction_ = joint_pred.ravel()
        self.game_ = game
        return self

    def predict_proba(self, game: Game | None = None) -> np.ndarray:
        return self.prediction_


def log_loss(prediction, demos: DemoSet) -> float:
    """Average -log2 probability of held-out outcomes, in bits."""
    p = np.asarray(prediction, dtype=np.float64)
    outs = np.asarray(demos.outcomes)
    vals = p[outs]
    if np.any(vals <= 0):
        bad = int(outs[np.argmin(vals)])
        raise InfiniteLossError(f"model assigns zero probability to outcome {bad}")
    return float(-np.log2(vals).mean())


def cross_entropy_bits(prediction, true_probs) -> float:
    """Exact expected log loss against a known true distribution, in bits."""
    p = np.asarray(prediction, dtype=np.float64)
    q = np.asarray(true_probs, dtype=np.float64)
    support = q > 0
    if np.any(p[support] <= 0):
        raise InfiniteLossError("model assigns zero probability on the true support")
    return float(-(q[support] * np.log2(p[support])).sum())
