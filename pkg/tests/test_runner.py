import csv
import json
import os

import numpy as np
import pytest

from slotcast.cli import main
from slotcast.config import MODEL_NAMES, ExperimentConfig, load_config, parse_config
from slotcast.exceptions import ConfigError
from slotcast.runner import ReportBundle, emit_reports, load_bundle, model_seed, prepare_data, run_experiment

# every model at reduced size so the suite stays fast
LIGHT = {
    "rf": {"n_estimators": 30},
    "bag": {"n_estimators": 5},
    "adaboost": {"n_estimators": 10},
    "gradboost": {"n_estimators": 20},
    "ann": {"max_steps": 500},
    "lstm": {"epochs": 2, "units": 8},
    **{f"cnn_m{i}": {"rounds": 2, "epochs": 1} for i in range(1, 5)},
}


def light_config(models=MODEL_NAMES, case="III", **kw):
    overrides = {m: p for m, p in LIGHT.items() if m in models}
    return ExperimentConfig(models=models, case=case, seed=5, days=420, overrides=overrides, **kw)


@pytest.fixture(scope="module")
def data_iii():
    return prepare_data(light_config())


@pytest.fixture(scope="module")
def full_bundle(data_iii):
    return run_experiment(light_config(), data=data_iii, write=False)


def test_empty_models_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig(models=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(models=["nope"])
    with pytest.raises(ConfigError):
        ExperimentConfig(models=["knn"], case="IV")


def test_config_round_trip():
    cfg = ExperimentConfig(models=["knn", "rf"], case="II", seed=9, synth={"slot_momentum": 0.5},
                           overrides={"rf": {"n_estimators": 50, "max_features": 2}})
    again = parse_config(cfg.to_ini())
    assert again == cfg
    assert again.to_ini() == cfg.to_ini()


def test_config_file_parsing(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(
        "[experiment]\ncase = I\nseed = 3\nmodels = logit, knn  ; two models\n\n"
        "[data]\nsource = synth\ndays = 300\nslot_momentum = 0.4\n\n[model.knn]\nn_neighbors = 5\n"
    )
    cfg = load_config(path)
    assert cfg.models == ("logit", "knn") and cfg.case == "I" and cfg.days == 300
    assert cfg.synth == {"slot_momentum": 0.4}
    assert cfg.overrides == {"knn": {"n_neighbors": 5}}
    for bad in ("[experiment]\nmodels = knn\n[extra]\na = 1\n",
                "[experiment]\nmodels = knn\nspeed = 3\n",
                "[experiment]\nmodels = knn\n[data]\nwarp = 1\n",
                "[experiment]\nmodels = knn\nseed = x\n"):
        with pytest.raises(ConfigError):
            parse_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def test_model_seed_independent_of_selection():
    assert model_seed(5, "rf") == model_seed(5, "rf")
    assert model_seed(5, "rf") != model_seed(5, "bag")
    assert model_seed(5, "rf") != model_seed(6, "rf")


def test_case_i_uses_one_year():
    data = prepare_data(light_config(models=("logit",), case="I"))
    s = data.summary()
    assert s["train_years"] == s["test_years"] == [2013]
    assert s["train_rows"] == s["test_rows"]


def test_case_iii_no_leakage(data_iii):
    s = data_iii.summary()
    assert s["train_years"] == [2013] and s["test_years"] == [2014]
    assert s["leakage_ok"]
    assert max(data_iii.train.dates) < min(data_iii.test.dates)


def test_full_run_covers_every_model(full_bundle):
    assert full_bundle.ok, full_bundle.errors
    assert sorted(full_bundle.models) == sorted(MODEL_NAMES)
    for name, entry in full_bundle.models.items():
        if name.startswith("cnn_"):
            assert entry["diagnostics"]["leakage_ok"] == {"train": True, "walk_forward": True}
            assert len(entry["forecast"]["rows"]) == 2 + 5
    assert len(full_bundle.classification_reports()) == 8
    assert set(full_bundle.regression_reports()) == {"ann", "bag", "cart", "gradboost", "lstm", "mars",
                                                      "ols_stepwise", "rf", "svr"}
    assert "rf" in full_bundle.ledger and "classification.n_estimators" in full_bundle.ledger["rf"]


def test_json_round_trip(full_bundle):
    assert json.loads(full_bundle.to_json()) == full_bundle.to_dict()
    assert "timings" not in full_bundle.to_dict()
    again = ReportBundle.from_dict(json.loads(full_bundle.to_json()))
    assert again.to_json() == full_bundle.to_json()


def test_rerun_is_byte_identical(data_iii, full_bundle):
    again = run_experiment(light_config(), write=False)
    assert again.to_json() == full_bundle.to_json()


def test_concurrent_run_matches_serial(data_iii):
    models = ("logit", "knn", "cart", "mars")
    serial = run_experiment(light_config(models=models), data=data_iii, write=False)
    parallel = run_experiment(light_config(models=models, workers=3), data=data_iii, write=False)
    assert serial.to_dict()["models"] == parallel.to_dict()["models"]


def test_failing_model_is_isolated(data_iii):
    models = ("logit", "knn", "cart")
    clean = run_experiment(light_config(models=models), data=data_iii, write=False)
    cfg = light_config(models=models + ("svm",))
    cfg.overrides["svm"] = {"bogus": 1}
    partial = run_experiment(cfg, data=data_iii, write=False)
    assert [e["model"] for e in partial.errors] == ["svm"]
    assert partial.models == clean.models


def test_emit_reports(full_bundle, tmp_path):
    paths = emit_reports(full_bundle, tmp_path)
    names = {os.path.basename(p) for p in paths}
    assert {"bundle.json", "timings.json", "summary_classification.csv", "summary_regression.csv"} <= names
    assert "roc_logit.csv" in names and "roc_mars.csv" not in names
    rows = list(csv.reader(open(tmp_path / "summary_classification.csv")))
    assert len(rows[0]) == 1 + 8 and len(rows) == 1 + 6
    cnn = list(csv.reader(open(tmp_path / "cnn_m1.csv")))
    assert cnn[0][0] == "round" and len(cnn) == 1 + 2 + 5
    assert load_bundle(tmp_path / "bundle.json").to_json() == full_bundle.to_json()


def test_emit_eight_classifiers(tmp_path, data_iii):
    cls_models = ("logit", "knn", "cart", "bag", "adaboost", "rf", "ann", "svm")
    bundle = run_experiment(light_config(models=cls_models), data=data_iii, write=False)
    emit_reports(bundle, tmp_path, ("csv",))
    rows = list(csv.reader(open(tmp_path / "summary_classification.csv")))
    assert rows[0][1:] == sorted(cls_models)
    assert [r[0] for r in rows[1:]] == ["Sensitivity", "Specificity", "PPV", "NPV", "CA", "F1 Score"]


def test_cli_synth_run_report(tmp_path, capsys):
    ticks = tmp_path / "ticks.csv"
    assert main(["synth", "--seed", "1", "--days", "3", "--out", str(ticks)]) == 0
    assert ticks.read_text().count("\n") > 3
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\ncase = III\nseed = 2\nmodels = logit, knn\n\n[data]\ndays = 400\n")
    out = tmp_path / "res"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--models", "logit,cart"]) == 0
    bundle = json.loads((out / "bundle.json").read_text())
    assert sorted(bundle["models"]) == ["cart", "logit"]
    rep = tmp_path / "rep"
    assert main(["report", "--bundle", str(out / "bundle.json"), "--format", "csv", "--out", str(rep)]) == 0
    assert (rep / "summary_classification.csv").exists()


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.ini")]) == 1
    assert main(["run"]) == 1
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[experiment]\ncase = III\nseed = 2\nmodels = logit, knn\n[model.knn]\nn_neighbors = 'x'\n"
                   "[data]\ndays = 400\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert json.loads((tmp_path / "o" / "bundle.json").read_text())["errors"][0]["model"] == "knn"
    assert main(["report", "--bundle", str(tmp_path / "nothing.json")]) == 1


def test_lstm_case_i_split_within_year():
    data = prepare_data(light_config(models=("lstm",), case="I"))
    bundle = run_experiment(light_config(models=("lstm",), case="I"), data=data, write=False)
    entry = bundle.models["lstm"]
    assert entry["params"]["regression"]["split"] <= 2 * len(data.train_values) // 3
    assert np.isfinite(entry["regression"]["test"]["rmse"])
