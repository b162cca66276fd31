"""Experiment orchestration: sample-size sweeps, transfer evaluation,
empirical concentration checks, and CSV/JSON reporting.

Per-cell seeds are derived by hashing (master seed, method, size,
replicate) so cells are reproducible independently of execution order.
Log loss is evaluated against the exact true distribution when it is known,
falling back to held-out samples on request.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (
    MultinomialBaseline,
    OutcomeLogit,
    PerPlayerIOC,
    cross_entropy_bits,
    log_loss,
)
from .conditional import FamilyDemos, GameFamily, transfer_predict
from .deviations import DeviationSet, build_deviation_set, expected_regret_features
from .equilibrium import DemoSet, empirical, sample_demos, welfare_tilted_ce
from .errors import ValidationError
from .estimator import MaxEntICE
from .game import Game, check_strategy, uniform_strategy
from .scenarios import ROUTING_VARIANTS, RoutingConfig, build_routing_game, build_routing_variant

__all__ = [
    "ExperimentConfig",
    "BoundCheckConfig",
    "derive_seed",
    "run_sweep",
    "run_transfer",
    "check_sample_bounds",
    "emit",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "method",
    "scenario",
    "variant",
    "train_size",
    "replicate",
    "seed",
    "logloss_bits",
    "fit_seconds",
)


def derive_seed(master_seed: int, *parts) -> int:
    key = "|".join([str(master_seed)] + [str(p) for p in parts])
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") % (2 ** 63)


@dataclass
class ExperimentConfig:
    scenario: str = "routing"
    methods: tuple = ("ice", "multinomial", "logistic", "ioc", "uniform")
    sample_sizes: tuple = (4, 16, 64)
    replicates: int = 3
    seed: int = 0
    timing: bool = False  # timings break byte-identical reruns; off by default
    eval_mode: str = "exact"  # or "heldout"
    heldout_size: int = 10_000
    ice_params: dict = field(default_factory=dict)
    baseline_l2: float = 1e-3

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sample_sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValidationError("sample_sizes must be strictly increasing")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        self.sample_sizes = sizes


DEFAULT_ICE_PARAMS = dict(
    deviations="internal",
    comparison="full",
    cone="free",
    l2=1e-3,
    utility_l2=1e-3,
    utility_match=True,
    tie_players=True,
    method="anneal",
    max_iters=200,
)


def make_fitters(cfg: ExperimentConfig):
    """Method name -> callable(game, demo_set) -> predicted joint strategy."""
    ice_params = {**DEFAULT_ICE_PARAMS, **cfg.ice_params}

    def fit_ice(game, demos):
        return MaxEntICE(**ice_params).fit(game, demos).predict_proba()

    def fit_multinomial(game, demos):
        return MultinomialBaseline().fit(game, demos).predict_proba()

    def fit_logistic(game, demos):
        return OutcomeLogit(l2=cfg.baseline_l2).fit(game, demos).predict_proba()

    def fit_ioc(game, demos):
        return PerPlayerIOC(l2=cfg.baseline_l2).fit(game, demos).predict_proba()

    return {
        "ice": fit_ice,
        "multinomial": fit_multinomial,
        "logistic": fit_logistic,
        "ioc": fit_ioc,
        "uniform": lambda game, demos: uniform_strategy(game),
        "true": None,  # handled specially: scores the true behavior itself
    }


def routing_truth(cfg: RoutingConfig | None = None, eps_target: float = 0.1, seed: int = 0):
    """Base routing game and its welfare-tilted true behavior."""
    cfg = cfg or RoutingConfig()
    game = build_routing_game(cfg)
    report = welfare_tilted_ce(game, game.w_true, eps_target, max_iters=1500, seed=seed)
    return game, report.strategy


def _evaluate(pred, game, true_probs, cfg: ExperimentConfig, seed: int) -> float:
    if cfg.eval_mode == "exact":
        return cross_entropy_bits(pred, true_probs)
    heldout = sample_demos(game, true_probs, cfg.heldout_size, derive_seed(seed, "eval"))
    return log_loss(pred, heldout)


def run_sweep(cfg: ExperimentConfig, game: Game, true_probs, scenario=None, variant="base"):
    """Train each method at each sample size and score it; one row per cell."""
    true_probs = check_strategy(game, true_probs)
    scenario = scenario or cfg.scenario
    fitters = make_fitters(cfg)
    rows = []
    for method in cfg.methods:
        if method not in fitters:
            raise ValidationError(f"unknown method {method!r}")
        for size in cfg.sample_sizes:
            for rep in range(cfg.replicates):
                seed = derive_seed(cfg.seed, method, size, rep)
                start = time.perf_counter()
                if method == "true":
                    pred = true_probs
                else:
                    demos = sample_demos(game, true_probs, size, seed)
                    pred = fitters[method](game, demos)
                elapsed = time.perf_counter() - start
                rows.append(
                    {
                        "method": method,
                        "scenario": scenario,
                        "variant": variant,
                        "train_size": size,
                        "replicate": rep,
                        "seed": seed,
                        "logloss_bits": _evaluate(pred, game, true_probs, cfg, seed),
                        "fit_seconds": elapsed if cfg.timing else None,
                    }
                )
    return rows


def run_transfer(
    cfg: ExperimentConfig,
    routing_cfg: RoutingConfig | None = None,
    variants=ROUTING_VARIANTS,
    train_size: int = 1000,
    eps_target: float = 0.1,
    transfer_l2: float = 0.01,
):
    """Train on the base routing game, score on each variant's true behavior."""
    routing_cfg = routing_cfg or RoutingConfig()
    base_game, base_true = routing_truth(routing_cfg, eps_target, seed=cfg.seed)
    train = sample_demos(base_game, base_true, train_size, derive_seed(cfg.seed, "train"))
    devset = build_deviation_set(base_game, "internal", comparison="full")
    family = GameFamily((base_game,), np.array([1.0]), devset)
    fam_demos = FamilyDemos(tuple((0, o) for o in train.outcomes))
    logit = OutcomeLogit(l2=cfg.baseline_l2).fit(base_game, train)

    rows = []
    for variant in variants:
        vgame = build_routing_variant(routing_cfg, variant)
        vreport = welfare_tilted_ce(
            vgame, vgame.w_true, eps_target, max_iters=1500, seed=derive_seed(cfg.seed, variant)
        )
        vtrue = vreport.strategy
        ice_params = {**DEFAULT_ICE_PARAMS, **cfg.ice_params}
        ice_params["deviations"] = devset
        ice_params["l2"] = transfer_l2
        preds = {
            "ice": transfer_predict(family, fam_demos, vgame, **ice_params),
            "logistic": logit.predict_proba(vgame),
            "uniform": uniform_strategy(vgame),
        }
        for method, pred in preds.items():
            seed = derive_seed(cfg.seed, "transfer", variant, method)
            rows.append(
                {
                    "method": method,
                    "scenario": cfg.scenario,
                    "variant": variant,
                    "train_size": train_size,
                    "replicate": 0,
                    "seed": seed,
                    "logloss_bits": _evaluate(pred, vgame, vtrue, cfg, seed),
                    "fit_seconds": None,
                }
            )
    return rows


@dataclass
class BoundCheckConfig:
    epsilon: float = 0.1
    delta: float = 0.05
    trials: int = 2000
    which: str = "finite_dim"  # or "per_w"

    def __post_init__(self):
        if not 0 < self.epsilon < 1 or not 0 < self.delta < 1:
            raise ValidationError("epsilon and delta must lie in (0, 1)")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")


def required_samples(cfg: BoundCheckConfig, n_deviations: int, feature_dim: int) -> int:
    """Observation count mandated by the concentration bound."""
    if cfg.which == "finite_dim":
        inside = 2.0 * n_deviations * feature_dim / cfg.delta
    elif cfg.which == "per_w":
        inside = n_deviations / cfg.delta
    else:
        raise ValidationError(f"unknown bound variant {cfg.which!r}")
    return math.ceil(math.log(inside) / (2.0 * cfg.epsilon ** 2))


def check_sample_bounds(
    game: Game,
    true_probs,
    devset: DeviationSet,
    cfg: BoundCheckConfig,
    w=None,
    seed: int = 0,
):
    """Monte-Carlo audit of the concentration bound at its mandated T.

    Resamples ``trials`` demo sets of the required size; a trial violates
    when any deviation's empirical regret deviates from the truth by more
    than the theorem's slack.  The violation fraction must come in at or
    below delta.
    """
    true_probs = check_strategy(game, true_probs)
    t_req = required_samples(cfg, len(devset), game.feature_dim)
    # per-deviation instantaneous regret features at every outcome
    inst = np.zeros((len(devset), game.n_outcomes, game.feature_dim))
    for k, dev in enumerate(devset.deviations):
        from .deviations import deviation_outcome_map

        omap = deviation_outcome_map(game, dev)
        inst[k] = game.features[dev.player][omap] - game.features[dev.player]
    true_feats = np.einsum("fmk,m->fk", inst, true_probs)
    rng = np.random.default_rng(seed)
    if cfg.which == "finite_dim":
        slack = cfg.epsilon * float(np.abs(inst).max())  # Delta over basis directions
        violations = 0
        for _ in range(cfg.trials):
            outs = rng.choice(game.n_outcomes, size=t_req, p=true_probs)
            emp = inst[:, outs, :].mean(axis=1)
            if np.any(np.abs(emp - true_feats) >= slack):
                violations += 1
    else:
        w = np.asarray(w if w is not None else np.ones(game.feature_dim), dtype=np.float64)
        inst_w = inst @ w  # (F, M)
        true_w = true_feats @ w
        slack = cfg.epsilon * float(np.abs(inst_w).max())  # Delta under w
        violations = 0
        for _ in range(cfg.trials):
            outs = rng.choice(game.n_outcomes, size=t_req, p=true_probs)
            emp = inst_w[:, outs].mean(axis=1)
            if np.any(emp - true_w >= slack):
                violations += 1
    fraction = violations / cfg.trials
    return {
        "which": cfg.which,
        "required_samples": t_req,
        "trials": cfg.trials,
        "violations": violations,
        "violation_fraction": fraction,
        "delta": cfg.delta,
        "passed": fraction <= cfg.delta,
    }


def regret_propagation_gap(per_dev_true, per_dev_perturbed) -> float:
    """How much a uniform per-deviation error moves the maximum regret.

    The max over deviations is 1-Lipschitz under a sup-norm perturbation of
    the per-deviation regrets, so the returned gap never exceeds the largest
    per-deviation error.
    """
    a = np.asarray(per_dev_true, dtype=np.float64)
    b = np.asarray(per_dev_perturbed, dtype=np.float64)
    return abs(float(a.max() - b.max()))


def _format_row(row) -> dict:
    out = dict(row)
    out["logloss_bits"] = f"{row['logloss_bits']:.6f}"
    out["fit_seconds"] = "" if row.get("fit_seconds") is None else f"{row['fit_seconds']:.3f}"
    return out


def emit(rows, path, fmt: str = "csv"):
    """Write result rows sorted on their key columns; returns the path."""
    if not rows:
        raise ValidationError("no results to emit")
    key = lambda r: (r["method"], r["scenario"], r["variant"], r["train_size"], r["replicate"])
    ordered = [_format_row(r) for r in sorted(rows, key=key)]
    path = Path(path)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in ordered:
            writer.writerow(r)
        path.write_text(buf.getvalue(), encoding="utf-8")
    elif fmt == "json":
        path.write_text(json.dumps(ordered, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValidationError(f"unknown output format {fmt!r}")
    return path
