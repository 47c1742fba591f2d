import json
from os import path
from os.path import dirname, join

import pytest
import yaml

import ensembleinfo
import ensembleinfo.ensembleinfo_main as eim
from ensembleinfo import PredictionTable
from ensembleinfo.report import SWEEP_COLUMNS

testdata_path = join(dirname(__file__), "testdata")
four_models = join(testdata_path, "four_models.csv")


def run_app(*argv):
    return eim.run(eim.EnsembleInfoApp(["ensembleinfo", *argv]))


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        eim.EnsembleInfoApp(["ensembleinfo", "--version"])
    assert e.value.code == 0
    assert ensembleinfo.__version__ in capsys.readouterr().out


def test_missing_command(capsys):
    with pytest.raises(SystemExit) as e:
        eim.EnsembleInfoApp(["ensembleinfo"])
    assert e.value.code == 1
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", four_models, "--p0", "1.5"],
        ["analyze", four_models, "--mode", "approx"],
        ["combine", four_models],
        ["toy", "E"],
        ["scale", "--n-values", "1,x"],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as e:
        eim.EnsembleInfoApp(["ensembleinfo", *argv])
    assert e.value.code == 1


def test_analyze(capsys):
    assert run_app("analyze", four_models) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_models"] == 4
    assert report["error_rate"] == pytest.approx(2 / 12)
    assert report["bound_config"] == {"p0": pytest.approx(2 / 12), "ymax": 2}
    assert set(report["bounds"]) == {"loose_info", "tight_info", "tight_strength"}


def test_analyze_toy_a_has_no_combination_loss(tmp_path, capsys):
    table = str(tmp_path / "toy_a.csv")
    assert run_app("toy", "a", "--combined", "-o", table) == 0
    assert run_app("analyze", table) == 0
    assert json.loads(capsys.readouterr().out)["i_combloss"] == 0.0


def test_analyze_class_override(capsys):
    with pytest.warns(UserWarning, match="4 classes"):
        assert run_app("analyze", four_models, "--classes", "4") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ymax"] == 4
    assert report["bound_config"]["ymax"] == 4


def test_analyze_class_override_below_labels(caplog):
    assert run_app("analyze", join(testdata_path, "three_classes.csv"), "--classes", "2", "--p0", "0.3") == 2
    assert "below the largest truth label" in caplog.text


def test_analyze_mti_at_full_k_matches_exact(capsys):
    assert run_app("analyze", four_models) == 0
    exact = json.loads(capsys.readouterr().out)
    assert run_app("analyze", four_models, "--mode", "mti", "--k", "4") == 0
    mti = json.loads(capsys.readouterr().out)
    assert mti["mode"] == "mti(k=4)"
    for key in ("i_relev", "i_redun", "i_combloss", "ensemble_strength"):
        assert mti[key] == pytest.approx(exact[key], abs=1e-10)


def test_analyze_needs_p0_without_combined(capsys):
    with pytest.raises(SystemExit) as e:
        run_app("analyze", join(testdata_path, "three_classes.csv"))
    assert e.value.code == 1
    assert "--p0" in capsys.readouterr().err


def test_analyze_p0_from_baseline(tmp_path, capsys):
    baseline = str(tmp_path / "baseline.json")
    assert run_app("analyze", four_models, "--p0", "0.3", "-o", baseline) == 0
    with open(baseline) as f:
        baseline_rate = json.load(f)["error_rate"]
    assert run_app(
        "analyze",
        join(testdata_path, "three_classes.csv"),
        "--baseline",
        baseline,
        "--baseline-strength",
        "0.5",
        "--concentration",
        "1",
        "--concentration",
        "3",
    ) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["bound_config"]["p0"] == pytest.approx(baseline_rate)
    assert report["normalized"]["i_relev"] == pytest.approx(2 * report["i_relev"])
    assert set(report["concentration"]) == {"1", "3"}
    assert report["concentration"]["3"] == 0.0


@pytest.mark.parametrize("fname", ["__missing__.csv", "bad_header.csv", "bad_label.csv"])
def test_analyze_data_errors(fname):
    assert run_app("analyze", join(testdata_path, fname), "--p0", "0.2") == 2


def test_output_not_overwritten(tmp_path):
    out = str(tmp_path / "report.json")
    assert run_app("analyze", four_models, "-o", out) == 0
    assert run_app("analyze", four_models, "-o", out) == 2
    assert run_app("analyze", four_models, "-o", out, "--overwrite") == 0


def test_combine_vote_reproduces_toy_b(tmp_path):
    toy = str(tmp_path / "toy_b.csv")
    combined = str(tmp_path / "combined.csv")
    assert run_app("toy", "B", "-o", toy) == 0
    assert run_app("combine", toy, "--method", "vote", "-o", combined) == 0
    table = PredictionTable.parse(combined)
    assert table.combined[:6].tolist() == [1, 1, 1, 1, 0, 0]
    assert PredictionTable.parse(combined) == table


def test_combine_uniform_weights_equal_vote(tmp_path):
    voted = str(tmp_path / "voted.csv")
    weighted = str(tmp_path / "weighted.csv")
    assert run_app("combine", four_models, "--method", "vote", "-o", voted) == 0
    assert (
        run_app(
            "combine", four_models, "--method", "weighted-vote", "--weights", "1,1,1,1", "-o", weighted
        )
        == 0
    )
    assert PredictionTable.parse(voted) == PredictionTable.parse(weighted)


def test_combine_to_stdout(capsys):
    assert run_app("combine", four_models, "--method", "best-model") == 0
    assert capsys.readouterr().out.startswith("y,yhat,o1,o2,o3,o4\n")


def test_combine_wrong_weight_count():
    assert run_app("combine", four_models, "--method", "weighted-vote", "--weights", "1,2") == 2


def test_combine_group_weights(tmp_path):
    weights_out = str(tmp_path / "groups.json")
    assert (
        run_app(
            "combine",
            four_models,
            "--method",
            "stacking",
            "--meta-folds",
            "2",
            "--inner-folds",
            "2",
            "--c-grid",
            "0.1,1",
            "--groups",
            "a,a,b,b",
            "--weights-out",
            weights_out,
            "-o",
            str(tmp_path / "stacked.csv"),
        )
        == 0
    )
    with open(weights_out) as f:
        result = json.load(f)
    assert list(result["group_weights"]) == ["a", "b"]
    assert result["c_reg"] in (0.1, 1.0)


def test_combine_groups_need_output():
    with pytest.raises(SystemExit) as e:
        run_app("combine", four_models, "--method", "vote", "--groups", "a,a,b,b")
    assert e.value.code == 1


def test_toy_csv(capsys):
    assert run_app("toy", "D", "--repetitions", "1") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "y,o1,o2,o3,o4,o5"
    assert len(lines) == 9


def test_synth_from_config_with_override(tmp_path):
    out = str(tmp_path / "synth.csv")
    config = join(testdata_path, "synth.yaml")
    assert run_app("synth", config, "--instances", "200", "-o", out) == 0
    table = PredictionTable.parse(out)
    assert table.n_models == 3
    assert table.n_instances == 200


def test_synth_regime(capsys):
    assert run_app("synth", "--regime", "hetero", "--models", "4", "--instances", "50") == 0
    assert capsys.readouterr().out.startswith("y,o1,o2,o3,o4\n")


def test_synth_single_error_for_all_models(capsys):
    assert run_app("synth", "--models", "3", "--instances", "20", "--errors", "0.0") == 0
    table_text = capsys.readouterr().out.splitlines()[1:]
    for line in table_text:
        y, *models = line.split(",")
        assert models == [y] * 3


@pytest.mark.parametrize(
    "content", ["- not\n- a mapping\n", "n_models: [\n", "n_models: 2\nn_instances: 10\n"]
)
def test_synth_bad_config(tmp_path, content):
    config = tmp_path / "synth.yaml"
    config.write_text(content)
    assert run_app("synth", str(config)) == 2


def test_synth_missing_config(tmp_path):
    assert run_app("synth", str(tmp_path / "__missing__.yaml")) == 2


def test_scale_writes_relative_to_config(tmp_path):
    config = {
        "system": {
            "n_models": 3,
            "n_instances": 200,
            "per_model_error": [0.2, 0.25, 0.3],
            "shared_noise": 0.3,
        },
        "n_values": [1, 2, 3],
        "combiner": "best-model",
        "output_dir": "out",
    }
    config_file = tmp_path / "sweep.yaml"
    with open(config_file, "w") as fout:
        yaml.dump(config, fout)
    assert run_app("scale", str(config_file), "--seed", "3", "-o", "sweep.csv") == 0
    target = tmp_path / "out" / "sweep.csv"
    assert path.isfile(target)
    lines = target.read_text().splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 4


def test_correlate(tmp_path, capsys):
    reports = []
    for method in ("vote", "best-model", "weighted-vote"):
        table = str(tmp_path / f"{method}.csv")
        report = str(tmp_path / f"{method}.json")
        assert run_app("combine", four_models, "--method", method, "-o", table) == 0
        assert run_app("analyze", table, "--p0", "0.2", "-o", report) == 0
        reports.append(report)
    assert run_app("correlate", reports[0], reports[0], *reports[1:]) == 0
    result = json.loads(capsys.readouterr().out)
    assert [row["system"] for row in result["systems"]] == [
        "vote.json",
        "best-model.json",
        "weighted-vote.json",
    ]
    assert result["systems"][0]["error_rate_reduction"] == 0.0
    assert [row["bound"] for row in result["pearson"]] == [
        "loose_info",
        "tight_info",
        "tight_strength",
    ]


def test_correlate_schema_mismatch(tmp_path, caplog):
    good = str(tmp_path / "good.json")
    bad = str(tmp_path / "bad.json")
    assert run_app("analyze", four_models, "-o", good) == 0
    with open(good) as f:
        data = json.load(f)
    data["schema_version"] = 2
    with open(bad, "w") as f:
        json.dump(data, f)
    assert run_app("correlate", good, good, bad) == 2
    assert "bad.json" in caplog.text


def test_correlate_names_must_match():
    with pytest.raises(SystemExit) as e:
        run_app("correlate", "a.json", "b.json", "--names", "x,y")
    assert e.value.code == 1


def test_small_suite(capsys):
    assert (
        run_app(
            "suite",
            "--models",
            "3",
            "--instances",
            "300",
            "--regimes",
            "random-seed,hetero",
            "--combiners",
            "vote,best-model",
        )
        == 0
    )
    result = json.loads(capsys.readouterr().out)
    assert len(result["systems"]) == 4
    assert "baseline" in result


def test_duplicate_filter(capsys):
    dup = eim.DuplicateFilter()
    record = eim.logging.LogRecord("x", eim.logging.WARNING, "m.py", 1, "same", None, None)
    assert dup.filter(record)
    assert not dup.filter(record)
    assert not dup.filter(record)
    dup.reset_count()
    assert "Suppressed 3 similar messages" in capsys.readouterr().err
