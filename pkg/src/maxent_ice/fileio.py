"""JSON file formats for games, demos, families, and fitted models."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .conditional import FamilyDemos, GameFamily
from .deviations import build_deviation_set
from .equilibrium import DemoSet
from .errors import ValidationError
from .estimator import DualWeights
from .game import Game

__all__ = [
    "save_game",
    "load_game",
    "save_demos",
    "load_demos",
    "save_family",
    "load_family",
    "save_family_demos",
    "load_family_demos",
    "save_model",
    "load_model",
]


def _write(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from exc


def save_game(game: Game, path, feature_names=None):
    payload = {
        "name": game.name,
        "actionCounts": list(game.action_counts),
        "featureDim": game.feature_dim,
        "featureNames": list(feature_names or [f"f{i}" for i in range(game.feature_dim)]),
        "utilities": game.features.tolist(),
    }
    if game.w_true is not None:
        payload["wTrue"] = game.w_true.tolist()
    _write(path, payload)


def load_game(path) -> Game:
    d = _read(path)
    for key in ("name", "actionCounts", "featureDim", "utilities"):
        if key not in d:
            raise ValidationError(f"game file missing field {key!r}")
    return Game(
        name=d["name"],
        action_counts=tuple(d["actionCounts"]),
        features=np.asarray(d["utilities"], dtype=np.float64),
        w_true=np.asarray(d["wTrue"], dtype=np.float64) if "wTrue" in d else None,
    )


def save_demos(demos: DemoSet, path):
    _write(path, {"game": demos.game_name, "seed": demos.seed, "outcomes": list(demos.outcomes)})


def load_demos(path) -> DemoSet:
    d = _read(path)
    for key in ("game", "outcomes"):
        if key not in d:
            raise ValidationError(f"demo file missing field {key!r}")
    return DemoSet(game_name=d["game"], outcomes=tuple(d["outcomes"]), seed=d.get("seed", 0))


def save_family(family: GameFamily, path):
    payload = {
        "featureDim": family.feature_dim,
        "weights": family.weights.tolist(),
        "games": [
            {
                "name": g.name,
                "actionCounts": list(g.action_counts),
                "featureDim": g.feature_dim,
                "utilities": g.features.tolist(),
                **({"wTrue": g.w_true.tolist()} if g.w_true is not None else {}),
            }
            for g in family.games
        ],
    }
    _write(path, payload)


def load_family(family_path, deviations: str = "internal") -> GameFamily:
    d = _read(family_path)
    if "games" not in d:
        raise ValidationError("family file missing field 'games'")
    base = Path(family_path).parent
    games = []
    for entry in d["games"]:
        if isinstance(entry, str):  # reference to a game file
            games.append(load_game(base / entry))
        else:
            games.append(
                Game(
                    name=entry["name"],
                    action_counts=tuple(entry["actionCounts"]),
                    features=np.asarray(entry["utilities"], dtype=np.float64),
                    w_true=np.asarray(entry["wTrue"], dtype=np.float64)
                    if "wTrue" in entry
                    else None,
                )
            )
    weights = d.get("weights")
    if weights is None:
        weights = [1.0 / len(games)] * len(games)
    largest = max(games, key=lambda g: g.n_outcomes)
    shared = build_deviation_set(largest, deviations)
    return GameFamily(tuple(games), np.asarray(weights), shared)


def save_family_demos(demos: FamilyDemos, path):
    _write(path, {"entries": [[g, o] for g, o in demos.entries]})


def load_family_demos(path) -> FamilyDemos:
    d = _read(path)
    if "entries" not in d:
        raise ValidationError("family demos file missing field 'entries'")
    return FamilyDemos(tuple((g, o) for g, o in d["entries"]))


def save_model(weights: DualWeights, path, dual_value=float("nan"), iterations=0, converged=False, kind="maxent-ice"):
    payload = {
        "kind": kind,
        "deviationIds": list(weights.deviation_ids),
        "theta": np.asarray(weights.theta).tolist(),
        "dualValue": dual_value,
        "iterations": iterations,
        "converged": bool(converged),
    }
    if weights.utility is not None:
        payload["utilityMultipliers"] = np.asarray(weights.utility).tolist()
        payload["utilityTied"] = bool(weights.utility_tied)
    _write(path, payload)


def load_model(path):
    d = _read(path)
    for key in ("deviationIds", "theta"):
        if key not in d:
            raise ValidationError(f"model file missing field {key!r}")
    weights = DualWeights(
        deviation_ids=list(d["deviationIds"]),
        theta=np.asarray(d["theta"], dtype=np.float64),
        utility=np.asarray(d["utilityMultipliers"], dtype=np.float64)
        if "utilityMultipliers" in d
        else None,
        utility_tied=bool(d.get("utilityTied", False)),
    )
    meta = {
        "kind": d.get("kind", "maxent-ice"),
        "dualValue": d.get("dualValue"),
        "iterations": d.get("iterations"),
        "converged": d.get("converged"),
    }
    return weights, meta
