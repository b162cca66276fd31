import json

import numpy as np
import pytest

from maxent_ice.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Run the full pipeline once on a small routing game."""
    d = tmp_path_factory.mktemp("cli")
    cfg = d / "cfg.json"
    cfg.write_text(json.dumps({"drivers": 3}))
    assert main(["gen", "routing", "--config", str(cfg), "--out", str(d / "game.json")]) == 0
    assert main([
        "equilibrium", "--game", str(d / "game.json"), "--w-true",
        "--eps", "0.2", "--rounds", "400", "--out", str(d / "eq.json"),
    ]) == 0
    assert main([
        "sample", "--eq", str(d / "eq.json"), "--game", str(d / "game.json"),
        "-T", "100", "--seed", "1", "--out", str(d / "demos.json"),
    ]) == 0
    return d


def test_gen_writes_game(workdir):
    game = json.loads((workdir / "game.json").read_text())
    assert game["actionCounts"] == [4, 4, 4]
    assert game["featureDim"] == 4


def test_equilibrium_reports_regret(workdir):
    eq = json.loads((workdir / "eq.json").read_text())
    assert len(eq["strategy"]) == 64
    assert eq["epsInternal"] <= 0.2 * 1.05 + 1e-9
    assert eq["converged"]


def test_fit_predict_eval(workdir):
    d = workdir
    assert main([
        "fit", "--game", str(d / "game.json"), "--demos", str(d / "demos.json"),
        "--comparison", "self", "--l2", "1e-4", "--out", str(d / "model.json"),
    ]) == 0
    model = json.loads((d / "model.json").read_text())
    assert model["kind"] == "maxent-ice"
    assert len(model["deviationIds"]) == 3 * 4 * 3
    assert main([
        "predict", "--model", str(d / "model.json"), "--game", str(d / "game.json"),
        "--out", str(d / "pred.json"),
    ]) == 0
    pred = json.loads((d / "pred.json").read_text())
    assert np.asarray(pred["probs"]).sum() == pytest.approx(1.0)
    assert main([
        "eval", "--pred", str(d / "pred.json"), "--demos", str(d / "demos.json"),
        "--out", str(d / "score.json"),
    ]) == 0
    score = json.loads((d / "score.json").read_text())
    assert 0 < score["loglossBits"] < np.log2(64)


def test_fit_baseline_kinds(workdir):
    d = workdir
    for kind in ("multinomial", "loglinear", "ioc"):
        out = d / f"{kind}.json"
        assert main([
            "fit-baseline", "--kind", kind, "--game", str(d / "game.json"),
            "--demos", str(d / "demos.json"), "--l2", "1e-3", "--out", str(out),
        ]) == 0
        assert json.loads(out.read_text())["kind"] == kind
    # log-linear models transfer through their coefficients
    assert main([
        "predict", "--model", str(d / "loglinear.json"), "--game", str(d / "game.json"),
        "--out", str(d / "predl.json"),
    ]) == 0


def test_check_bounds_exit_code(workdir):
    d = workdir
    code = main([
        "check-bounds", "--game", str(d / "game.json"), "--eq", str(d / "eq.json"),
        "--trials", "100", "--out", str(d / "bounds.json"),
    ])
    report = json.loads((d / "bounds.json").read_text())
    assert code == (0 if report["passed"] else 3)


def test_sweep_csv(workdir, tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "methods": ["uniform", "multinomial"], "sample_sizes": [4, 8], "replicates": 1,
    }))
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("method,scenario,variant")
    assert len(lines) == 1 + 2 * 2


def test_validation_exit_code(workdir, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["predict", "--model", str(bad), "--game", str(workdir / "game.json"),
                 "--out", str(tmp_path / "x.json")]) == 2
    cfg = tmp_path / "badcfg.json"
    cfg.write_text(json.dumps({"bogus_key": 1}))
    assert main(["gen", "routing", "--config", str(cfg), "--out", str(tmp_path / "g.json")]) == 2


def test_market_entry_gen(tmp_path):
    out = tmp_path / "fam.json"
    assert main([
        "gen", "market-entry", "--games", "2", "--rounds-kept", "3",
        "--seed", "4", "--out", str(out),
    ]) == 0
    fam = json.loads(out.read_text())
    assert len(fam["games"]) == 6
    demos = json.loads((tmp_path / "fam.demos.json").read_text())
    assert len(demos["entries"]) == 6


def test_equilibrium_needs_weights(workdir, capsys):
    with pytest.raises(SystemExit):
        main(["equilibrium", "--game", str(workdir / "game.json"), "--out", "x.json"])
