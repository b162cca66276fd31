"""Reference game generators: congestion routing and repeated market entry.

The routing game sends several drivers over shared road segments; each
outcome's features record per-driver travel time, distance, fuel and stopped
time, with a linear-plus-threshold congestion delay.  The market-entry
family turns each late round of a repeated entry game into a parameterized
game whose features summarize the history so far, with demonstrations
produced by synthetic agents.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .conditional import FamilyDemos, GameFamily
from .deviations import build_deviation_set
from .errors import ValidationError
from .game import Game

__all__ = [
    "RoutingConfig",
    "MarketEntryConfig",
    "build_routing_game",
    "build_routing_variant",
    "build_market_entry_family",
    "ROUTING_VARIANTS",
]

ROUTING_VARIANTS = ("add_highway", "add_driver", "gas_shortage", "congestion")


@dataclass(frozen=True)
class RoutingConfig:
    """Road network and preference defaults for the synthetic routing game.

    Four parallel route templates over six shared segments; congestion delay
    on a segment is length * beta * max(0, load - capacity), fuel grows with
    distance and stopped time.  ``w_true`` weights (time, distance, fuel,
    stopped) as costs, dominated by travel time.
    """

    drivers: int = 7
    segment_lengths: tuple = (2.0, 3.0, 4.0, 6.5, 3.0, 3.5)
    segment_capacities: tuple = (2, 3, 4, 7, 2, 3)
    routes: tuple = ((0, 1), (0, 2), (3,), (4, 5))
    congestion_beta: float = 0.5
    fuel_gamma: float = 0.25
    w_true: tuple = (-1.0, -0.1, -0.2, -0.3)

    def __post_init__(self):
        if self.drivers < 1:
            raise ValidationError("need at least one driver")
        if len(self.segment_lengths) != len(self.segment_capacities):
            raise ValidationError("segment lengths and capacities must align")
        for route in self.routes:
            if any(s >= len(self.segment_lengths) for s in route):
                raise ValidationError("route references unknown segment")


FEATURE_NAMES = ("travel_time", "distance", "fuel", "stopped_time")


def build_routing_game(cfg: RoutingConfig, name: str = "routing") -> Game:
    """Deterministically build the routing game's dense feature tensor."""
    n_routes = len(cfg.routes)
    n_drivers = cfg.drivers
    n_out = n_routes ** n_drivers
    lengths = np.asarray(cfg.segment_lengths)
    caps = np.asarray(cfg.segment_capacities, dtype=np.float64)
    n_segs = lengths.size
    incidence = np.zeros((n_routes, n_segs))
    for r, route in enumerate(cfg.routes):
        for s in route:
            incidence[r, s] = 1.0
    route_dist = incidence @ lengths

    # per-outcome route choices and segment loads
    actions = np.stack(
        np.unravel_index(np.arange(n_out), (n_routes,) * n_drivers), axis=1
    )  # (M, N)
    route_counts = np.zeros((n_out, n_routes))
    for d in range(n_drivers):
        np.add.at(route_counts, (np.arange(n_out), actions[:, d]), 1.0)
    loads = route_counts @ incidence  # (M, n_segs)
    excess = np.maximum(loads - caps, 0.0)
    seg_stop = lengths * cfg.congestion_beta * excess  # (M, n_segs) stopped time
    features = np.zeros((n_drivers, n_out, 4))
    for d in range(n_drivers):
        r = actions[:, d]
        dist = route_dist[r]
        stopped = np.einsum("ms,ms->m", seg_stop, incidence[r])
        time = dist + stopped
        fuel = dist * (1.0 + cfg.fuel_gamma * stopped)
        features[d, :, 0] = time
        features[d, :, 1] = dist
        features[d, :, 2] = fuel
        features[d, :, 3] = stopped
    return Game(
        name=name,
        action_counts=(n_routes,) * n_drivers,
        features=features,
        w_true=np.asarray(cfg.w_true),
    )


def build_routing_variant(cfg: RoutingConfig, variant: str) -> Game:
    """Structured perturbations of the base routing game used for transfer."""
    if variant == "add_highway":
        new_seg = len(cfg.segment_lengths)
        new_cfg = replace(
            cfg,
            segment_lengths=cfg.segment_lengths + (4.0,),
            segment_capacities=cfg.segment_capacities + (5,),
            routes=cfg.routes + ((new_seg,),),
        )
        return build_routing_game(new_cfg, name="routing-add-highway")
    if variant == "add_driver":
        return build_routing_game(
            replace(cfg, drivers=cfg.drivers + 1), name="routing-add-driver"
        )
    if variant == "gas_shortage":
        w = list(cfg.w_true)
        w[2] *= 5.0  # fuel becomes a first-order concern; features unchanged
        game = build_routing_game(replace(cfg, w_true=tuple(w)), name="routing-gas-shortage")
        return game
    if variant == "congestion":
        beta = cfg.congestion_beta * 1.6  # heavier delay once over capacity
        return build_routing_game(
            replace(cfg, congestion_beta=beta), name="routing-congestion"
        )
    raise ValidationError(f"unknown routing variant {variant!r}")


@dataclass(frozen=True)
class MarketEntryConfig:
    """Repeated market-entry game with history-summary features.

    Entrants receive a stochastic payoff centered at 10 - k*E (E entrants);
    staying out pays zero-mean noise.  k is resampled per game uniformly on
    a range whose symmetric-equilibrium entry rate averages one half.
    """

    players: int = 4
    base_payoff: float = 10.0
    k_range: tuple = (2.5, 6.0)
    payoff_noise: float = 1.0
    total_rounds: int = 50
    ew_decay: float = 0.8
    use_frequencies: bool = True
    use_mean_reward: bool = True
    use_reward_variance: bool = True
    use_ew: bool = True
    use_true_utility: bool = True
    quantal_tau: float = 1.0

    @property
    def feature_dim(self) -> int:
        return (
            int(self.use_true_utility)
            + int(self.use_frequencies)
            + int(self.use_mean_reward)
            + int(self.use_reward_variance)
            + 2 * int(self.use_ew)
        )


def _entry_matrix(players: int) -> np.ndarray:
    """(M, players) 0/1 matrix of who enters at each outcome."""
    return np.stack(
        np.unravel_index(np.arange(2 ** players), (2,) * players), axis=1
    ).astype(np.float64)


def _round_game(cfg: MarketEntryConfig, k: float, hist: dict, name: str) -> Game:
    entries = _entry_matrix(cfg.players)  # action 1 = enter
    n_entrants = entries.sum(axis=1)
    channels = []
    if cfg.use_true_utility:
        channels.append(cfg.base_payoff - k * n_entrants)
    if cfg.use_frequencies:
        channels.append(np.full_like(n_entrants, hist["freq"]))
    if cfg.use_mean_reward:
        channels.append(np.full_like(n_entrants, hist["mean_reward"]))
    if cfg.use_reward_variance:
        channels.append(np.full_like(n_entrants, hist["reward_var"]))
    if cfg.use_ew:
        channels.append(np.full_like(n_entrants, hist["ew_freq"]))
        channels.append(np.full_like(n_entrants, hist["ew_mean_reward"]))
    base = np.stack(channels, axis=1)  # (M, K) summary values per outcome
    features = np.zeros((cfg.players, 2 ** cfg.players, cfg.feature_dim))
    for i in range(cfg.players):
        features[i] = entries[:, i:i + 1] * base  # active only when i enters
    return Game(name=name, action_counts=(2,) * cfg.players, features=features)


def build_market_entry_family(
    cfg: MarketEntryConfig,
    n_games: int,
    rounds_kept: int = 25,
    agent_model: str = "quantal_response",
    seed: int = 0,
):
    """Simulate repeated entry games; keep the trailing rounds as a family.

    Each kept round becomes one family game (features frozen from the
    history up to that round) paired with the observed outcome.  Returns
    ``(GameFamily, FamilyDemos)``.
    """
    if rounds_kept < 1 or rounds_kept > cfg.total_rounds:
        raise ValidationError("rounds_kept must be in [1, total_rounds]")
    if agent_model not in ("quantal_response", "regret_matching"):
        raise ValidationError(f"unknown agent model {agent_model!r}")
    rng = np.random.default_rng(seed)
    games, entries = [], []
    for gi in range(n_games):
        k = float(rng.uniform(*cfg.k_range))
        rewards = []  # realized per-player-decision rewards
        entry_flags = []
        ew_freq = 0.5
        ew_mean = 0.0
        cum_regret = np.zeros((cfg.players, 2))  # regret-matching state
        for r in range(cfg.total_rounds):
            freq = float(np.mean(entry_flags)) if entry_flags else 0.5
            mean_rew = float(np.mean(rewards)) if rewards else 0.0
            var_rew = float(np.var(rewards)) if rewards else 0.0
            hist = {
                "freq": freq,
                "mean_reward": mean_rew,
                "reward_var": var_rew,
                "ew_freq": ew_freq,
                "ew_mean_reward": ew_mean,
            }
            if agent_model == "quantal_response":
                expected_entrants = 1.0 + (cfg.players - 1) * freq
                gain = cfg.base_payoff - k * expected_entrants
                p_enter = 1.0 / (1.0 + np.exp(-gain / cfg.quantal_tau))
                acts = (rng.random(cfg.players) < p_enter).astype(np.int64)
            else:
                acts = np.zeros(cfg.players, dtype=np.int64)
                for i in range(cfg.players):
                    pos = np.maximum(cum_regret[i], 0.0)
                    probs = pos / pos.sum() if pos.sum() > 0 else np.array([0.5, 0.5])
                    acts[i] = rng.choice(2, p=probs)
            n_in = int(acts.sum())
            enter_pay = cfg.base_payoff - k * n_in + rng.normal(0.0, cfg.payoff_noise)
            out_pay = rng.normal(0.0, cfg.payoff_noise)
            counterfactual_in = cfg.base_payoff - k * (n_in + 1)
            for i in range(cfg.players):
                got = enter_pay if acts[i] else out_pay
                alt = out_pay if acts[i] else counterfactual_in
                rewards.append(got)
                entry_flags.append(int(acts[i]))
                cum_regret[i, 1 - acts[i]] += alt - got
                ew_freq = cfg.ew_decay * ew_freq + (1 - cfg.ew_decay) * acts[i]
                ew_mean = cfg.ew_decay * ew_mean + (1 - cfg.ew_decay) * got
            if r >= cfg.total_rounds - rounds_kept:
                game = _round_game(cfg, k, hist, name=f"market-entry-g{gi}-r{r}")
                outcome = int(np.ravel_multi_index(acts, (2,) * cfg.players))
                games.append(game)
                entries.append((len(games) - 1, outcome))
    weights = np.full(len(games), 1.0 / len(games))
    shared = build_deviation_set(games[0], "internal")
    family = GameFamily(tuple(games), weights, shared)
    return family, FamilyDemos(tuple(entries))
