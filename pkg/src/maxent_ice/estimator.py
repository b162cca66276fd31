"""Maximum-entropy inverse correlated equilibrium estimation (dual form).

The estimator minimizes, over one utility-space vector per deviation
(constrained to the double dual of a cone), the demonstrated regret under
those vectors plus the log partition function of the induced exponential
family.  The induced prediction puts weight exp(-sum of deviation regrets)
on each outcome.  Optional per-player utility-matching multipliers add the
classical inverse-optimal-control equality constraints.

Everything is written against a *family* of prediction-side games with
probability weights so that the conditional estimator and behavior transfer
reuse the exact same code path; a plain single-game fit is the family of one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .deviations import (
    DeviationSet,
    build_deviation_set,
    deviation_outcome_map,
    expected_regret_features,
)
from .errors import ValidationError
from .game import Game, check_strategy, entropy
from .solvers import (
    OptResult,
    lbfgs_min,
    projected_gradient_min,
    simplex_lsq,
    subgradient_min,
)

__all__ = [
    "DualWeights",
    "FitResult",
    "MaxEntICE",
    "predict_from_weights",
    "dual_objective",
    "dual_gradient",
    "project_cone",
    "ice_feasibility_gap",
    "empty_deviation_set",
]

CONES = ("free", "positive")


def empty_deviation_set() -> DeviationSet:
    return DeviationSet((), ())


@dataclass
class DualWeights:
    """Dual variables: one utility vector per deviation, optional utility multipliers."""

    deviation_ids: list
    theta: np.ndarray  # (n_deviations, feature_dim)
    utility: np.ndarray | None = None  # (n_players, K), or (1, K) when tied
    utility_tied: bool = False

    @property
    def per_deviation(self) -> dict:
        return {i: self.theta[k] for k, i in enumerate(self.deviation_ids)}


@dataclass
class FitResult:
    weights: DualWeights
    predictions: list  # one joint strategy per prediction-side game
    dual_value: float
    iterations: int
    converged: bool
    feasibility_gap: float | None = None

    @property
    def prediction(self) -> np.ndarray:
        return self.predictions[0]


def project_cone(theta: np.ndarray, cone: str) -> np.ndarray:
    """Euclidean projection of dual vectors onto the cone's double dual."""
    if cone == "free":
        return np.asarray(theta, dtype=np.float64)
    if cone == "positive":
        return np.maximum(np.asarray(theta, dtype=np.float64), 0.0)
    raise ValidationError(f"unknown cone {cone!r}")


def _deviation_exponent(game: Game, devset: DeviationSet, theta: np.ndarray) -> np.ndarray:
    """Per-outcome sum of deviation regrets under theta (the negated exponent)."""
    total = np.zeros(game.n_outcomes)
    for k, dev in enumerate(devset.deviations):
        t = theta[k]
        if not np.all(np.isfinite(t)):
            raise ValidationError(f"non-finite dual weight for deviation {dev.id}")
        if not dev.applies_to(game) or not np.any(t):
            continue
        udot = game.features[dev.player] @ t
        omap = deviation_outcome_map(game, dev)
        total += udot[omap] - udot
    return total


def _softmax_from_energy(energy: np.ndarray):
    """Normalize exp(-energy); returns (probs, logZ) with max-subtraction."""
    m = energy.min()
    ex = np.exp(-(energy - m))
    z = ex.sum()
    return ex / z, float(np.log(z) - m)


def predict_from_weights(game: Game, devset: DeviationSet, weights: DualWeights) -> np.ndarray:
    """Prediction proportional to exp(-sum of per-deviation regrets) at each outcome."""
    energy = _deviation_exponent(game, devset, np.asarray(weights.theta, dtype=np.float64))
    if weights.utility is not None:
        energy = energy + _utility_energy(game, weights.utility, weights.utility_tied)
    probs, _ = _softmax_from_energy(energy)
    return probs


def _utility_energy(game: Game, lam: np.ndarray, tied: bool) -> np.ndarray:
    if tied:
        return game.features.sum(axis=0) @ lam[0]
    e = np.zeros(game.n_outcomes)
    for i in range(min(game.n_players, lam.shape[0])):
        e += game.features[i] @ lam[i]
    return e


def _pred_regret_features(game: Game, devset: DeviationSet, probs: np.ndarray) -> np.ndarray:
    """Expected regret features of every deviation under probs; inactive rows are 0."""
    out = np.zeros((len(devset), game.feature_dim))
    for k, dev in enumerate(devset.deviations):
        if not dev.applies_to(game):
            continue
        omap = deviation_outcome_map(game, dev)
        shifted = np.bincount(omap, weights=probs, minlength=game.n_outcomes)
        out[k] = (shifted - probs) @ game.features[dev.player]
    return out


def family_demo_regret_features(games, demo_probs, xi, devset: DeviationSet) -> np.ndarray:
    """Weight-averaged demonstrated regret features, shape (n_deviations, K)."""
    k_dim = games[0].feature_dim
    out = np.zeros((len(devset), k_dim))
    for g, p, w in zip(games, demo_probs, xi):
        out += w * _pred_regret_features(g, devset, check_strategy(g, p))
    return out


def family_demo_utility_features(games, demo_probs, xi, n_players: int) -> np.ndarray:
    """Weight-averaged demonstrated per-player expected utility features."""
    k_dim = games[0].feature_dim
    out = np.zeros((n_players, k_dim))
    for g, p, w in zip(games, demo_probs, xi):
        p = check_strategy(g, p)
        for i in range(min(g.n_players, n_players)):
            out[i] += w * (p @ g.features[i])
    return out


class _DualProblem:
    """Dual objective/gradient over a prediction-side game family.

    Demo-side statistics (regret and utility features) are supplied
    separately so transfer can pair training demonstrations with a different
    prediction-side game.
    """

    def __init__(
        self,
        pred_games,
        pred_xi,
        devset: DeviationSet,
        demo_regret: np.ndarray,
        demo_utility: np.ndarray | None = None,
        cone: str = "free",
        l1: float = 0.0,
        l2: float = 0.0,
        utility_l2: float | None = None,
        tie_players: bool = False,
        utility_tied: bool = False,
        n_util_players: int = 0,
        energy_offsets=None,
    ):
        if cone not in CONES:
            raise ValidationError(f"unknown cone {cone!r}")
        if l1 < 0 or l2 < 0:
            raise ValidationError("regularizer weights must be non-negative")
        self.games = list(pred_games)
        self.xi = np.asarray(pred_xi, dtype=np.float64)
        self.devset = devset
        self.k_dim = self.games[0].feature_dim
        self.cone = cone
        self.l1 = float(l1)
        self.l2 = float(l2)
        self.utility_l2 = self.l2 if utility_l2 is None else float(utility_l2)
        self.demo_regret = np.asarray(demo_regret, dtype=np.float64)
        self.demo_utility = demo_utility
        self.energy_offsets = energy_offsets
        self.utility_tied = utility_tied
        self.n_util = 0
        if demo_utility is not None:
            self.n_util = 1 if utility_tied else n_util_players
        # tie groups: deviations sharing dual weights (players pooled)
        n_dev = len(devset)
        if tie_players and n_dev:
            sig_to_group, group_of = {}, []
            for d in devset.deviations:
                sig = (d.kind, d.x, d.y, d.mapping)
                group_of.append(sig_to_group.setdefault(sig, len(sig_to_group)))
            self.group_of = np.asarray(group_of, dtype=np.int64)
            self.n_groups = len(sig_to_group)
        else:
            self.group_of = np.arange(n_dev)
            self.n_groups = n_dev
        self.n_params = (self.n_groups + self.n_util) * self.k_dim
        self.smooth = self.l1 == 0.0 and all(len(g) == 1 for g in devset.comparison)

    # --- parameter packing -------------------------------------------------
    def split(self, z: np.ndarray):
        k = self.k_dim
        th_g = z[: self.n_groups * k].reshape(self.n_groups, k)
        lam = None
        if self.n_util:
            lam = z[self.n_groups * k:].reshape(self.n_util, k)
        return th_g, lam

    def expand_theta(self, th_g: np.ndarray) -> np.ndarray:
        if len(self.devset) == 0:
            return np.zeros((0, self.k_dim))
        return th_g[self.group_of]

    def project(self, z: np.ndarray) -> np.ndarray:
        th_g, lam = self.split(z)
        th_g = project_cone(th_g, self.cone)
        parts = [th_g.ravel()]
        if lam is not None:
            parts.append(lam.ravel())
        return np.concatenate(parts) if parts else th_g.ravel()

    # --- objective ---------------------------------------------------------
    def _per_game(self, theta: np.ndarray, lam):
        """Yield (weight, probs, logZ, game) per prediction-side game."""
        for gi, (g, w) in enumerate(zip(self.games, self.xi)):
            energy = _deviation_exponent(g, self.devset, theta)
            if lam is not None:
                energy = energy + _utility_energy(g, lam, self.utility_tied)
            if self.energy_offsets is not None:
                energy = energy + self.energy_offsets[gi]
            probs, logz = _softmax_from_energy(energy)
            yield w, probs, logz, g

    def _demo_side(self, th_g: np.ndarray, lam):
        """Demonstrated-regret term and, per deviation, the maximizing comparator."""
        total = 0.0
        argmaxes = np.zeros(len(self.devset), dtype=np.int64)
        for f, grp in enumerate(self.devset.comparison):
            t = th_g[self.group_of[f]]
            vals = self.demo_regret[list(grp)] @ t
            j = int(np.argmax(vals))  # ties break to the lowest listed index
            argmaxes[f] = grp[j]
            total += float(vals[j])
        if lam is not None and self.demo_utility is not None:
            if self.utility_tied:
                total += float(self.demo_utility.sum(axis=0) @ lam[0])
            else:
                total += float((self.demo_utility * lam).sum())
        return total, argmaxes

    def _regularizer(self, th_g, lam):
        r = 0.5 * self.l2 * float((th_g ** 2).sum()) + self.l1 * float(np.abs(th_g).sum())
        if lam is not None:
            r += 0.5 * self.utility_l2 * float((lam ** 2).sum())
        return r

    def value(self, z: np.ndarray) -> float:
        return self.value_and_grad(z)[0]

    def _pred_side(self, theta, lam):
        """Partition terms plus prediction-side regret/utility expectations."""
        obj = 0.0
        pred_regret = np.zeros((len(self.devset), self.k_dim))
        pred_util = (
            np.zeros((self.n_util if not self.utility_tied else 1, self.k_dim))
            if lam is not None
            else None
        )
        for w, probs, logz, g in self._per_game(theta, lam):
            obj += w * logz
            pred_regret += w * _pred_regret_features(g, self.devset, probs)
            if lam is not None:
                if self.utility_tied:
                    pred_util[0] += w * (probs @ g.features.sum(axis=0))
                else:
                    for i in range(min(g.n_players, self.n_util)):
                        pred_util[i] += w * (probs @ g.features[i])
        return obj, pred_regret, pred_util

    def _assemble(self, th_g, lam, demo_obj, demo_grad_th):
        theta = self.expand_theta(th_g)
        obj, pred_regret, pred_util = self._pred_side(theta, lam)
        obj += demo_obj + self._regularizer(th_g, lam)
        grad_th = demo_grad_th
        for f in range(len(self.devset)):
            grad_th[self.group_of[f]] -= pred_regret[f]
        grad_th += self.l2 * th_g + self.l1 * np.sign(th_g)
        parts = [grad_th.ravel()]
        if lam is not None:
            grad_lam = np.zeros_like(lam)
            if self.utility_tied:
                grad_lam[0] = self.demo_utility.sum(axis=0) - pred_util[0]
            else:
                grad_lam[:] = self.demo_utility - pred_util
            grad_lam += self.utility_l2 * lam
            parts.append(grad_lam.ravel())
        return obj, np.concatenate(parts)

    def value_and_grad(self, z: np.ndarray):
        th_g, lam = self.split(z)
        demo_obj, argmaxes = self._demo_side(th_g, lam)
        grad_th = np.zeros_like(th_g)
        for f in range(len(self.devset)):
            grad_th[self.group_of[f]] += self.demo_regret[argmaxes[f]]
        return self._assemble(th_g, lam, demo_obj, grad_th)

    def value_and_grad_smoothed(self, z: np.ndarray, beta: float):
        """Dual with the demo-side max replaced by a log-sum-exp at scale beta.

        Upper-bounds the true dual within log(group size) / beta; used for
        temperature-annealed quasi-Newton solving of the nonsmooth dual.
        """
        th_g, lam = self.split(z)
        demo_obj = 0.0
        grad_th = np.zeros_like(th_g)
        for f, grp in enumerate(self.devset.comparison):
            t = th_g[self.group_of[f]]
            rows = self.demo_regret[list(grp)]
            vals = rows @ t
            m = float(vals.max())
            ex = np.exp(beta * (vals - m))
            s = float(ex.sum())
            demo_obj += m + np.log(s) / beta
            grad_th[self.group_of[f]] += (ex / s) @ rows
        if lam is not None and self.demo_utility is not None:
            if self.utility_tied:
                demo_obj += float(self.demo_utility.sum(axis=0) @ lam[0])
            else:
                demo_obj += float((self.demo_utility * lam).sum())
        return self._assemble(th_g, lam, demo_obj, grad_th)

    def design_matrix(self, g: Game) -> np.ndarray:
        """Per-outcome linear coefficients of the energy in the packed params."""
        k = self.k_dim
        cols = np.zeros((g.n_outcomes, self.n_params))
        for f, dev in enumerate(self.devset.deviations):
            if not dev.applies_to(g):
                continue
            omap = deviation_outcome_map(g, dev)
            gi = self.group_of[f]
            cols[:, gi * k:(gi + 1) * k] += g.features[dev.player][omap] - g.features[dev.player]
        if self.n_util:
            base = self.n_groups * k
            if self.utility_tied:
                cols[:, base:base + k] = g.features.sum(axis=0)
            else:
                for i in range(min(g.n_players, self.n_util)):
                    cols[:, base + i * k:base + (i + 1) * k] = g.features[i]
        return cols

    def hessian(self, z: np.ndarray) -> np.ndarray:
        """Exact Hessian on the smooth path: prediction-side feature covariance."""
        th_g, lam = self.split(z)
        theta = self.expand_theta(th_g)
        h = np.zeros((self.n_params, self.n_params))
        for w, probs, _, g in self._per_game(theta, lam):
            phi = self.design_matrix(g)
            mean = probs @ phi
            h += w * ((phi.T * probs) @ phi - np.outer(mean, mean))
        k = self.k_dim
        diag = np.full(self.n_params, self.l2)
        diag[self.n_groups * k:] = self.utility_l2
        h[np.diag_indices_from(h)] += diag
        return h

    def _kkt_residual(self, x: np.ndarray, g: np.ndarray) -> float:
        n_bound = self.n_groups * self.k_dim if self.cone == "positive" else 0
        kkt = g.copy()
        at_bound = np.zeros(self.n_params, dtype=bool)
        at_bound[:n_bound] = x[:n_bound] <= 1e-12
        kkt[at_bound] = np.minimum(kkt[at_bound], 0.0)
        return float(np.linalg.norm(kkt))

    def _arc_search(self, x, f, g, d):
        """Armijo backtracking along the projection of x + step*d."""
        step = 1.0
        while step >= 1e-16:
            x_new = self.project(x + step * d)
            delta = x_new - x
            f_new, g_new = self.value_and_grad(x_new)
            if f_new <= f + 1e-4 * (g @ delta) and f_new <= f:
                return x_new, f_new, g_new, True
            step *= 0.5
        return x, f, g, False

    def _newton_solve(self, max_iters: int, gtol: float, tol: float) -> OptResult:
        """Two-metric projected Newton for the smooth bound-constrained dual."""
        n_bound = self.n_groups * self.k_dim if self.cone == "positive" else 0
        x = np.zeros(self.n_params)
        f, g = self.value_and_grad(x)
        converged = False
        flat = 0
        it = 0
        for it in range(1, max_iters + 1):
            kkt = self._kkt_residual(x, g)
            if kkt <= gtol:
                converged = True
                break
            # gradient step on the almost-active coordinates, Newton on the rest
            eps_active = min(1e-2, kkt)
            active = np.zeros(self.n_params, dtype=bool)
            active[:n_bound] = (x[:n_bound] <= eps_active) & (g[:n_bound] > 0)
            free = ~active
            h_ff = self.hessian(x)[np.ix_(free, free)]
            d = -g.copy()
            jitter = 1e-12
            while True:
                try:
                    d[free] = -np.linalg.solve(
                        h_ff + jitter * np.eye(h_ff.shape[0]), g[free]
                    )
                    break
                except np.linalg.LinAlgError:
                    jitter *= 100.0
            x_new, f_new, g_new, ok = self._arc_search(x, f, g, d)
            if not ok:  # Newton direction rejected; retry along the gradient
                x_new, f_new, g_new, ok = self._arc_search(x, f, g, -g)
            if not ok:  # no descent at machine precision
                converged = self._kkt_residual(x, g) <= 1e-6
                break
            flat = flat + 1 if f - f_new <= tol * (1.0 + abs(f)) else 0
            x, f, g = x_new, f_new, g_new
            if flat >= 5:
                converged = self._kkt_residual(x, g) <= 1e-6
                break
        return OptResult(x, f, it, converged, grad_norm=float(np.linalg.norm(g)))

    def predictions(self, z: np.ndarray):
        th_g, lam = self.split(z)
        theta = self.expand_theta(th_g)
        return [probs for _, probs, _, _ in self._per_game(theta, lam)]

    def solve(
        self,
        method: str = "auto",
        max_iters: int = 2000,
        step_c: float = 1.0,
        tol: float = 1e-9,
        gtol: float = 1e-8,
    ) -> OptResult:
        z0 = np.zeros(self.n_params)
        if method == "auto":
            method = "smooth" if self.smooth else "subgradient"
        if method in ("smooth", "lbfgs"):
            if not self.smooth:
                raise ValidationError(
                    "quasi-Newton path requires self-comparison (or no deviations) and l1=0"
                )
            if self.cone == "free":
                return lbfgs_min(self.value_and_grad, z0, max_iters=max_iters, gtol=gtol, tol=tol)
            return self._newton_solve(max_iters=max_iters, gtol=gtol, tol=tol)
        if method == "anneal":
            if self.l1 != 0.0:
                raise ValidationError("annealed smoothing requires l1=0")
            x = z0
            total_it = 0
            res = None
            for beta in (2.0, 8.0, 32.0, 128.0, 512.0, 2048.0):
                vg = lambda z, b=beta: self.value_and_grad_smoothed(z, b)
                if self.cone == "free":
                    res = lbfgs_min(vg, x, max_iters=max_iters, gtol=gtol, tol=tol)
                else:
                    res = projected_gradient_min(
                        vg, x, self.project, max_iters=max_iters, gtol=gtol, tol=tol
                    )
                x = res.x
                total_it += res.iterations
            value = self.value(x)
            return OptResult(x, value, total_it, res.converged, grad_norm=res.grad_norm)
        if method == "subgradient":
            return subgradient_min(
                self.value,
                lambda z: self.value_and_grad(z)[1],
                z0,
                project=self.project if self.cone != "free" else None,
                step_c=step_c,
                max_iters=max_iters,
                tol=tol,
            )
        raise ValidationError(f"unknown method {method!r}")


def _single_game_problem(game, demo_probs, devset, **kw) -> _DualProblem:
    p = check_strategy(game, demo_probs)
    utility_match = kw.pop("utility_match", False)
    tie_players = kw.pop("tie_players", False)
    demo_u = None
    n_util = 0
    if utility_match:
        demo_u = family_demo_utility_features([game], [p], [1.0], game.n_players)
        n_util = game.n_players
    demo_r = family_demo_regret_features([game], [p], [1.0], devset)
    return _DualProblem(
        [game],
        [1.0],
        devset,
        demo_r,
        demo_utility=demo_u,
        tie_players=tie_players,
        utility_tied=tie_players and utility_match,
        n_util_players=n_util,
        **kw,
    )


def dual_objective(game, demo_probs, devset, weights: DualWeights, l1=0.0, l2=0.0) -> float:
    """The dual value at given weights (regularizers included when configured)."""
    prob = _single_game_problem(
        game, demo_probs, devset, l1=l1, l2=l2, utility_match=weights.utility is not None
    )
    return prob.value(_pack(prob, weights))


def dual_gradient(game, demo_probs, devset, weights: DualWeights, l1=0.0, l2=0.0) -> DualWeights:
    """Subgradient of the dual objective, shaped like the weights."""
    prob = _single_game_problem(
        game, demo_probs, devset, l1=l1, l2=l2, utility_match=weights.utility is not None
    )
    _, g = prob.value_and_grad(_pack(prob, weights))
    th_g, lam = prob.split(g)
    return DualWeights(
        devset.ids, prob.expand_theta(th_g), lam, utility_tied=prob.utility_tied
    )


def _pack(prob: _DualProblem, weights: DualWeights) -> np.ndarray:
    theta = np.asarray(weights.theta, dtype=np.float64)
    if prob.n_groups != len(prob.devset):
        th_g = np.zeros((prob.n_groups, prob.k_dim))
        for f in range(len(prob.devset)):
            th_g[prob.group_of[f]] = theta[f]
    else:
        th_g = theta
    parts = [th_g.ravel()]
    if prob.n_util:
        lam = weights.utility
        if lam is None:
            lam = np.zeros((prob.n_util, prob.k_dim))
        parts.append(np.asarray(lam, dtype=np.float64).ravel())
    return np.concatenate(parts)


def ice_feasibility_gap(
    game,
    pred_probs,
    demo_probs,
    devset: DeviationSet,
    cone: str = "free",
    max_iters: int = 10_000,
    tol: float = 1e-8,
) -> float:
    """Worst cone-violation of predicted regret versus the demonstrated hull.

    For each deviation, minimizes over mixtures of its comparators the
    distance (free cone) or the maximum componentwise positive excess
    (positive cone) between the predicted regret features and the mixture of
    demonstrated ones; returns the maximum over deviations.
    """
    if cone not in CONES:
        raise ValidationError(f"unknown cone {cone!r}")
    pred = check_strategy(game, pred_probs)
    demo = check_strategy(game, demo_probs)
    demo_feats = _pred_regret_features(game, devset, demo)
    pred_feats = _pred_regret_features(game, devset, pred)
    worst = 0.0
    for f, grp in enumerate(devset.comparison):
        v = pred_feats[f]
        d_mat = demo_feats[list(grp)]  # (m, K)
        if cone == "free":
            eta = simplex_lsq(d_mat, v)
            gap = float(np.linalg.norm(d_mat.T @ eta - v))
        else:
            # min t  s.t.  v - d_mat.T eta <= t, eta in simplex, t >= 0
            from scipy.optimize import linprog

            m, k = d_mat.shape
            c = np.zeros(m + 1)
            c[-1] = 1.0
            a_ub = np.hstack([-d_mat.T, -np.ones((k, 1))])
            a_eq = np.ones((1, m + 1))
            a_eq[0, -1] = 0.0
            res = linprog(
                c, A_ub=a_ub, b_ub=-v, A_eq=a_eq, b_eq=[1.0],
                bounds=[(0, None)] * (m + 1), method="highs",
            )
            if not res.success:
                raise ValidationError(f"feasibility LP failed: {res.message}")
            gap = max(float(res.fun), 0.0)
        worst = max(worst, gap)
    return worst


class MaxEntICE(BaseEstimator):
    """Maximum-entropy inverse correlated equilibrium estimator.

    Parameters mirror the dual program: deviation set construction,
    comparison structure, cone constraint on the dual vectors, L1/L2
    regularization, optional utility matching and cross-player parameter
    tying, and the solver schedule.
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

    def _build_devset(self, game: Game) -> DeviationSet:
        if isinstance(self.deviations, DeviationSet):
            return self.deviations
        if self.deviations in (None, "none"):
            return empty_deviation_set()
        return build_deviation_set(
            game, self.deviations, comparison=self.comparison, grouping=self.grouping
        )

    def fit(self, game: Game, demos):
        """Fit on one game; ``demos`` is a joint strategy or outcome-index array."""
        demo_probs = as_demo_probs(game, demos)
        devset = self._build_devset(game)
        prob = _single_game_problem(
            game,
            demo_probs,
            devset,
            cone=self.cone,
            l1=self.l1,
            l2=self.l2,
            utility_l2=self.utility_l2,
            utility_match=self.utility_match,
            tie_players=self.tie_players,
        )
        res = prob.solve(
            method=self.method,
            max_iters=self.max_iters,
            step_c=self.step_c,
            tol=self.tol,
            gtol=self.gtol,
        )
        th_g, lam = prob.split(res.x)
        weights = DualWeights(
            devset.ids,
            prob.expand_theta(th_g),
            lam,
            utility_tied=prob.utility_tied,
        )
        self.game_ = game
        self.devset_ = devset
        self.result_ = FitResult(
            weights=weights,
            predictions=prob.predictions(res.x),
            dual_value=res.value,
            iterations=res.iterations,
            converged=res.converged,
        )
        self.weights_ = weights
        self.prediction_ = self.result_.prediction
        return self

    def predict_proba(self, game: Game | None = None) -> np.ndarray:
        if game is None or game is self.game_:
            return self.prediction_
        return predict_from_weights(game, self.devset_, self.weights_)

    def feasibility_gap(self, demos=None, cone=None) -> float:
        demo_probs = as_demo_probs(self.game_, demos) if demos is not None else None
        if demo_probs is None:
            raise ValidationError("feasibility_gap requires the demonstrations")
        return ice_feasibility_gap(
            self.game_, self.prediction_, demo_probs, self.devset_, cone or self.cone
        )


def as_demo_probs(game: Game, demos) -> np.ndarray:
    """Coerce demos (DemoSet, outcome-index array, or strategy) to probabilities."""
    from .equilibrium import DemoSet, empirical

    if isinstance(demos, DemoSet):
        return empirical(demos, game)
    arr = np.asarray(demos)
    if arr.ndim == 1 and arr.size == game.n_outcomes and np.issubdtype(arr.dtype, np.floating):
        return check_strategy(game, arr)
    if arr.ndim == 1 and np.issubdtype(arr.dtype, np.integer):
        counts = np.bincount(arr, minlength=game.n_outcomes)
        if len(counts) > game.n_outcomes:
            raise ValidationError("demo outcome index out of range")
        return counts / counts.sum()
    raise ValidationError("demos must be a DemoSet, outcome indices, or a strategy")
