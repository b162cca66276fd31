"""Command-line interface.

Subcommands cover the full pipeline: generate games (`gen`), compute
equilibrium behavior (`equilibrium`), draw demonstrations (`sample`), fit
the estimator (`fit`) or a baseline (`fit-baseline`), predict and score
(`predict`, `eval`), transfer to unobserved games (`transfer`), run sweeps
(`sweep`) and audit the concentration bounds (`check-bounds`).

Exit codes: 0 success, 2 validation error, 3 non-convergence under
``--strict``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .baselines import MultinomialBaseline, OutcomeLogit, PerPlayerIOC, log_loss
from .conditional import transfer_predict
from .deviations import Deviation, DeviationSet, build_deviation_set
from .equilibrium import DemoSet, regret_matching_ce, sample_demos, welfare_tilted_ce
from .errors import NotConvergedError, ValidationError
from .estimator import DualWeights, MaxEntICE, predict_from_weights
from .game import Game, uniform_strategy
from .harness import (
    BoundCheckConfig,
    ExperimentConfig,
    check_sample_bounds,
    emit,
    required_samples,
    routing_truth,
    run_sweep,
    run_transfer,
)
from .scenarios import (
    ROUTING_VARIANTS,
    MarketEntryConfig,
    RoutingConfig,
    build_market_entry_family,
    build_routing_game,
    build_routing_variant,
)

__all__ = ["main", "build_parser"]


def _load_config(path, cls):
    if path is None:
        return cls()
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    allowed = set(cls.__dataclass_fields__)
    unknown = set(raw) - allowed
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for key in ("segment_lengths", "segment_capacities", "w_true", "k_range", "sample_sizes", "methods"):
        if key in raw and isinstance(raw[key], list):
            raw[key] = tuple(raw[key])
    if "routes" in raw:
        raw["routes"] = tuple(tuple(r) for r in raw["routes"])
    return cls(**raw)


def parse_deviation_id(dev_id: str) -> Deviation:
    """Invert ``Deviation.id`` so model files round-trip."""
    try:
        player_s, kind, spec = dev_id.split(":")
        player = int(player_s[1:])
        if kind == "switch":
            x, y = spec.split("->")
            return Deviation("switch", player, x=int(x), y=int(y))
        if kind == "fixed":
            return Deviation("fixed", player, y=int(spec.split("->")[1]))
        if kind == "map":
            return Deviation("composite", player, mapping=tuple(int(m) for m in spec.split(",")))
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"malformed deviation id {dev_id!r}") from exc
    raise ValidationError(f"malformed deviation id {dev_id!r}")


def devset_from_ids(ids) -> DeviationSet:
    devs = tuple(parse_deviation_id(i) for i in ids)
    return DeviationSet(devs, tuple((i,) for i in range(len(devs))))


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_gen(args) -> int:
    if args.scenario == "routing":
        cfg = _load_config(args.config, RoutingConfig)
        variant = args.variant.replace("-", "_")
        if variant == "base":
            game = build_routing_game(cfg)
        else:
            game = build_routing_variant(cfg, variant)
        fileio.save_game(game, args.out)
    else:
        cfg = _load_config(args.config, MarketEntryConfig)
        family, demos = build_market_entry_family(
            cfg, n_games=args.games, rounds_kept=args.rounds_kept,
            agent_model=args.agent_model.replace("-", "_"), seed=args.seed,
        )
        fileio.save_family(family, args.out)
        demos_out = args.demos_out or str(Path(args.out).with_suffix("")) + ".demos.json"
        fileio.save_family_demos(demos, demos_out)
    return 0


def cmd_equilibrium(args) -> int:
    game = fileio.load_game(args.game)
    if args.w_true:
        if game.w_true is None:
            raise ValidationError("game file carries no true utility weights")
        w = game.w_true
    else:
        w = np.asarray(json.loads(args.w), dtype=np.float64)
    if args.mode == "regret-matching":
        report = regret_matching_ce(game, w, rounds=args.rounds, seed=args.seed)
    else:
        report = welfare_tilted_ce(game, w, eps_target=args.eps, max_iters=args.rounds, seed=args.seed)
    if args.strict and not report.converged:
        raise NotConvergedError("equilibrium computation did not reach its target")
    _write_json(args.out, {
        "game": game.name,
        "strategy": report.strategy.tolist(),
        "epsExternal": report.eps_external,
        "epsInternal": report.eps_internal,
        "welfare": report.welfare,
        "converged": report.converged,
    })
    return 0


def cmd_sample(args) -> int:
    eq = json.loads(Path(args.eq).read_text(encoding="utf-8"))
    game = fileio.load_game(args.game)
    if len(eq["strategy"]) != game.n_outcomes:
        raise ValidationError("equilibrium strategy does not match the game")
    demos = sample_demos(game, np.asarray(eq["strategy"]), args.n, args.seed)
    fileio.save_demos(demos, args.out)
    return 0


def cmd_fit(args) -> int:
    game = fileio.load_game(args.game)
    demos = fileio.load_demos(args.demos)
    est = MaxEntICE(
        deviations=args.deviations,
        comparison=args.comparison,
        grouping=args.grouping,
        cone=args.cone,
        l1=args.l1,
        l2=args.l2,
        utility_match=args.utility_match,
        tie_players=args.tie_players,
        method=args.method,
        max_iters=args.iters,
        tol=args.tol,
        seed=args.seed,
    ).fit(game, demos)
    res = est.result_
    if args.strict and not res.converged:
        raise NotConvergedError("dual solver did not converge within the iteration budget")
    fileio.save_model(
        res.weights, args.out,
        dual_value=res.dual_value, iterations=res.iterations, converged=res.converged,
    )
    return 0


def cmd_fit_baseline(args) -> int:
    game = fileio.load_game(args.game)
    demos = fileio.load_demos(args.demos)
    if args.kind == "multinomial":
        model = MultinomialBaseline().fit(game, demos)
        extra = {"lambda": model.lambda_}
        theta = []
    elif args.kind == "loglinear":
        model = OutcomeLogit(l2=args.l2).fit(game, demos)
        extra = {}
        theta = [model.coef_.tolist()]
    elif args.kind == "ioc":
        model = PerPlayerIOC(l2=args.l2).fit(game, demos)
        extra = {}
        theta = [w.tolist() for w in model.coefs_]
    else:
        raise ValidationError(f"unknown baseline kind {args.kind!r}")
    _write_json(args.out, {
        "kind": args.kind,
        "deviationIds": [],
        "theta": theta,
        "dualValue": None,
        "iterations": 0,
        "converged": True,
        "prediction": model.predict_proba().tolist(),
        **extra,
    })
    return 0


def cmd_predict(args) -> int:
    game = fileio.load_game(args.game)
    raw = json.loads(Path(args.model).read_text(encoding="utf-8"))
    kind = raw.get("kind", "maxent-ice")
    if kind == "maxent-ice":
        weights, _ = fileio.load_model(args.model)
        devset = devset_from_ids(weights.deviation_ids)
        probs = predict_from_weights(game, devset, weights)
    elif kind == "loglinear":
        logits = game.features.sum(axis=0) @ np.asarray(raw["theta"][0])
        ex = np.exp(logits - logits.max())
        probs = ex / ex.sum()
    elif "prediction" in raw:
        probs = np.asarray(raw["prediction"], dtype=np.float64)
        if probs.size != game.n_outcomes:
            raise ValidationError("stored prediction does not match the target game")
    else:
        raise ValidationError(f"model kind {kind!r} cannot predict on this game")
    _write_json(args.out, {"game": game.name, "probs": probs.tolist()})
    return 0


def cmd_eval(args) -> int:
    pred = json.loads(Path(args.pred).read_text(encoding="utf-8"))
    probs = np.asarray(pred["probs"], dtype=np.float64)
    demos = fileio.load_demos(args.demos)
    bits = log_loss(probs, demos)
    payload = {"loglossBits": bits, "count": len(demos)}
    if args.out:
        _write_json(args.out, payload)
    else:
        print(json.dumps(payload))
    return 0


def cmd_transfer(args) -> int:
    family = fileio.load_family(args.train_family, deviations=args.deviations)
    demos = fileio.load_family_demos(args.train_demos)
    test_game = fileio.load_game(args.test_game)
    probs = transfer_predict(
        family, demos, test_game,
        deviations="shared", comparison=args.comparison,
        l2=args.l2, method=args.method, max_iters=args.iters, seed=args.seed,
    )
    _write_json(args.out, {"game": test_game.name, "probs": probs.tolist()})
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config, ExperimentConfig)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.timing = bool(args.timing)
    if cfg.scenario != "routing":
        raise ValidationError(f"unknown sweep scenario {cfg.scenario!r}")
    game, true_probs = routing_truth(seed=cfg.seed)
    rows = run_sweep(cfg, game, true_probs)
    if args.transfer:
        rows += run_transfer(cfg)
    emit(rows, args.out, fmt=args.format)
    return 0


def cmd_check_bounds(args) -> int:
    cfg = BoundCheckConfig(
        epsilon=args.epsilon, delta=args.delta, trials=args.trials,
        which=args.which.replace("-", "_"),
    )
    game = fileio.load_game(args.game)
    if args.eq:
        eq = json.loads(Path(args.eq).read_text(encoding="utf-8"))
        true_probs = np.asarray(eq["strategy"], dtype=np.float64)
    else:
        true_probs = uniform_strategy(game)
    devset = build_deviation_set(game, args.deviations)
    report = check_sample_bounds(game, true_probs, devset, cfg, seed=args.seed)
    if args.out:
        _write_json(args.out, report)
    else:
        print(json.dumps(report))
    return 0 if report["passed"] else 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--strict", action="store_true", help="treat non-convergence as an error (exit 3)")

    p = argparse.ArgumentParser(prog="ice", description="maximum-entropy inverse correlated equilibrium toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a scenario game or family")
    g.add_argument("scenario", choices=("routing", "market-entry"))
    g.add_argument("--config", default=None)
    g.add_argument("--variant", default="base",
                   choices=("base",) + tuple(v.replace("_", "-") for v in ROUTING_VARIANTS))
    g.add_argument("--games", type=int, default=10)
    g.add_argument("--rounds-kept", type=int, default=25)
    g.add_argument("--agent-model", default="quantal-response",
                   choices=("quantal-response", "regret-matching"))
    g.add_argument("--demos-out", default=None)
    g.set_defaults(fn=cmd_gen)

    e = sub.add_parser("equilibrium", parents=[common], help="compute equilibrium behavior")
    e.add_argument("--game", required=True)
    e.add_argument("--w-true", action="store_true", help="use the game's stored utility weights")
    e.add_argument("--w", default=None, help="JSON list of utility weights")
    e.add_argument("--mode", choices=("regret-matching", "welfare"), default="welfare")
    e.add_argument("--rounds", type=int, default=2000)
    e.add_argument("--eps", type=float, default=0.05)
    e.set_defaults(fn=cmd_equilibrium)

    s = sub.add_parser("sample", parents=[common], help="draw demonstrations from behavior")
    s.add_argument("--eq", required=True)
    s.add_argument("--game", required=True)
    s.add_argument("-T", "--n", type=int, required=True, dest="n")
    s.set_defaults(fn=cmd_sample)

    f = sub.add_parser("fit", parents=[common], help="fit the estimator")
    f.add_argument("--game", required=True)
    f.add_argument("--demos", required=True)
    f.add_argument("--deviations", choices=("internal", "external", "swap"), default="internal")
    f.add_argument("--comparison", choices=("full", "self"), default="full")
    f.add_argument("--grouping", choices=("global", "per-player"), default="global")
    f.add_argument("--cone", choices=("free", "positive"), default="free")
    f.add_argument("--l1", type=float, default=0.0)
    f.add_argument("--l2", type=float, default=0.0)
    f.add_argument("--iters", type=int, default=2000)
    f.add_argument("--tol", type=float, default=1e-9)
    f.add_argument("--method", choices=("auto", "smooth", "lbfgs", "subgradient", "anneal"), default="auto")
    f.add_argument("--utility-match", action="store_true")
    f.add_argument("--tie-players", action="store_true")
    f.set_defaults(fn=cmd_fit)

    fb = sub.add_parser("fit-baseline", parents=[common], help="fit a baseline model")
    fb.add_argument("--kind", choices=("multinomial", "loglinear", "ioc"), required=True)
    fb.add_argument("--game", required=True)
    fb.add_argument("--demos", required=True)
    fb.add_argument("--l2", type=float, default=0.0)
    fb.set_defaults(fn=cmd_fit_baseline)

    pr = sub.add_parser("predict", parents=[common], help="predict a joint strategy from a model")
    pr.add_argument("--model", required=True)
    pr.add_argument("--game", required=True)
    pr.set_defaults(fn=cmd_predict)

    ev = sub.add_parser("eval", parents=[common], help="score a prediction against demos")
    ev.add_argument("--pred", required=True)
    ev.add_argument("--demos", required=True)
    ev.set_defaults(fn=cmd_eval)

    tr = sub.add_parser("transfer", parents=[common], help="predict behavior on an unobserved game")
    tr.add_argument("--train-family", required=True)
    tr.add_argument("--train-demos", required=True)
    tr.add_argument("--test-game", required=True)
    tr.add_argument("--deviations", choices=("internal", "external"), default="internal")
    tr.add_argument("--comparison", choices=("full", "self"), default="self")
    tr.add_argument("--l2", type=float, default=1e-2)
    tr.add_argument("--method", choices=("auto", "smooth", "lbfgs", "subgradient", "anneal"), default="auto")
    tr.add_argument("--iters", type=int, default=2000)
    tr.set_defaults(fn=cmd_transfer)

    sw = sub.add_parser("sweep", parents=[common], help="run a sample-size sweep")
    sw.add_argument("--config", default=None)
    sw.add_argument("--timing", action="store_true", help="record wall-clock fit times (breaks byte determinism)")
    sw.add_argument("--transfer", action="store_true", help="append transfer rows")
    sw.set_defaults(fn=cmd_sweep)

    cb = sub.add_parser("check-bounds", parents=[common], help="audit the sample-complexity bounds")
    cb.add_argument("--game", required=True)
    cb.add_argument("--eq", default=None)
    cb.add_argument("--epsilon", type=float, default=0.1)
    cb.add_argument("--delta", type=float, default=0.05)
    cb.add_argument("--trials", type=int, default=2000)
    cb.add_argument("--which", choices=("finite-dim", "per-w"), default="finite-dim")
    cb.add_argument("--deviations", choices=("internal", "external"), default="external")
    cb.set_defaults(fn=cmd_check_bounds)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    needs_out = args.fn not in (cmd_eval, cmd_check_bounds)
    if needs_out and not args.out:
        parser.error("--out is required for this subcommand")
    if args.fn is cmd_equilibrium and not args.w_true and args.w is None:
        parser.error("provide --w-true or --w")
    try:
        return args.fn(args)
    except (ValidationError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NotConvergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
