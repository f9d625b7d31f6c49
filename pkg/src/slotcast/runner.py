"""Batch experiments: data preparation, the three-case protocol, the model suite and report files."""
from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.pipeline import make_pipeline

from .config import MODEL_NAMES, ExperimentConfig
from .deepnets import audit_leakage, cnn_fit_eval, frame_weekly, lstm_experiment, walk_forward, weekly_table
from .deepnets.cnn import CNN_SPECS
from .deepnets.harness import CSV_HEADER, _VARIANT_FRAMING
from .deepnets.lstm import slot_values
from .evalsuite import (
    ConfusionMatrix, cls_metrics, curve_csv, lift_curve, reg_metrics, roc_auc, summarize,
)
from .exceptions import ConfigError, IoError
from .features import Case, MinMaxScaler, case_split, derive_features
from .kernel_models import EpsilonSVR, KNNClassifier, LinearSVC
from .linmod import IRLSLogisticRegression, StepwiseOLS, diagnostics, drop_collinear
from .market_data import concat, read_ticks, split_by_year, synth_ticks, to_daily_bars
from .mars import MARSRegressor
from .shallow_nn import MLPClassifier, MLPRegressor
from .slotter import aggregate_slots
from .trees import (
    AdaBoostM1Classifier, BaggingClassifier, BaggingRegressor, CARTClassifier, CARTRegressor,
    GradientBoostingRegressor, RandomForestClassifier, RandomForestRegressor,
)

log = logging.getLogger(__name__)

# classification and regression estimators per model name
ESTIMATORS = {
    "logit": (IRLSLogisticRegression, None),
    "knn": (KNNClassifier, None),
    "cart": (CARTClassifier, CARTRegressor),
    "bag": (BaggingClassifier, BaggingRegressor),
    "adaboost": (AdaBoostM1Classifier, None),
    "gradboost": (None, GradientBoostingRegressor),
    "rf": (RandomForestClassifier, RandomForestRegressor),
    "ann": (MLPClassifier, MLPRegressor),
    "svm": (LinearSVC, None),
    "svr": (None, EpsilonSVR),
    "ols_stepwise": (None, StepwiseOLS),
    "mars": (None, MARSRegressor),
}
# inputs are min-max scaled (training extremes) before these estimators
SCALED = {"svm", "svr"}
# settings the runner uses in place of the estimator defaults
RUNNER_DEFAULTS = {
    "ann": {"max_steps": 20_000},
    "ols_stepwise": {"direction": "backward", "alpha": 0.05},
}
# why each unstated setting has its value; echoed with the effective value in every bundle
DEFAULT_NOTES = {
    "cart": {"min_node": "library default", "max_depth": "library default",
             "min_impurity_decrease": "library default"},
    "bag": {"n_estimators": "classification 25, regression 100 members", "min_node": "library default"},
    "adaboost": {"n_estimators": "library default", "max_depth": "weak learner depth"},
    "gradboost": {"n_estimators": "library default", "learning_rate": "library default",
                  "max_depth": "library default"},
    "rf": {"n_estimators": "500 trees", "max_features": "3 variables tried per split",
           "min_node": "1 for classification, 5 for regression"},
    "ann": {"lr": "fixed rate with halving safeguard", "init_scale": "uniform initial weights",
            "max_steps": "runner cap on full-batch steps"},
    "svm": {"C": "unstated, 1.0", "tol": "SMO tolerance"},
    "svr": {"C": "unstated, 1.0", "gamma": "RBF width", "epsilon": "tube half-width"},
    "knn": {"n_neighbors": "k = 3"},
    "logit": {"threshold": "probability cut-off", "ridge": "normal-equation jitter"},
    "ols_stepwise": {"alpha": "significance level gating each step", "vif_threshold": "collinearity cut-off"},
    "mars": {"penalty": "GCV cost per knot", "max_terms": "2p + 1", "threshold": "forward-pass R2 gain"},
    "lstm": {"units": "50 cells", "epochs": "100", "batch_size": "72", "lr": "Adam default",
             "split": "training rows within one year"},
    **{f"cnn_{v.lower()}": {"epochs": "per-variant default", "batch_size": "per-variant default",
                            "lr": "Adam default", "rounds": "independent restarts",
                            "train_weeks": "first year of weeks"} for v in CNN_SPECS},
}
LSTM_DEFAULTS = {"units": 50, "epochs": 100, "batch_size": 72, "lr": 0.001, "shuffle": False, "split": 500}
CNN_DEFAULTS = {"rounds": 20, "train_weeks": 52, "epochs": None, "batch_size": None, "lr": 0.001}


def model_seed(seed: int, name: str) -> int:
    """Per-model integer seed; independent of which other models run."""
    return int(np.random.SeedSequence([seed, MODEL_NAMES.index(name)]).generate_state(1)[0])


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, tuples to lists, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


@dataclass
class ExperimentData:
    case: str
    train: object  # features.Dataset
    test: object
    train_values: np.ndarray  # slot values for the LSTM
    test_values: np.ndarray | None
    bars: list  # daily bars over the whole series
    years: tuple

    def summary(self) -> dict:
        train_dates = [d for d in self.train.dates if d is not None]
        test_dates = [d for d in self.test.dates if d is not None]
        out = {
            "case": self.case,
            "years": list(self.years),
            "train_rows": len(self.train),
            "test_rows": len(self.test),
            "train_years": sorted({d.year for d in train_dates}),
            "test_years": sorted({d.year for d in test_dates}),
            "daily_bars": len(self.bars),
        }
        if self.case == Case.III.value:
            out["leakage_ok"] = bool(max(train_dates) < min(test_dates))
        return out


def prepare_data(config: ExperimentConfig) -> ExperimentData:
    """Ticks to slots to features for the first two calendar years, split for the configured case."""
    if config.source == "synth":
        series = synth_ticks(config.data_seed, config.days, config.synth_params())
    else:
        try:
            series = concat(read_ticks(p) for p in config.paths)
        except OSError as exc:
            raise IoError(f"cannot read ticks: {exc}") from exc
    by_year = split_by_year(series)
    years = tuple(sorted(by_year))
    case = Case(config.case)
    needed = 1 if case is Case.I else 2
    if len(years) < needed:
        raise ConfigError(f"case {case.value} needs {needed} calendar year(s), data covers {list(years)}")
    slots = {y: aggregate_slots(by_year[y]) for y in years[:2]}
    data = {y: derive_features(s) for y, s in slots.items()}
    first = years[0]
    second = years[1] if len(years) > 1 else years[0]
    train, test = case_split(data[first], data[second], case)
    values = {y: slot_values(s) for y, s in slots.items()}
    if case is Case.III:
        train_values, test_values = values[first], values[second]
    else:
        train_values, test_values = values[first if case is Case.I else second], None
    return ExperimentData(case.value, train, test, train_values, test_values, to_daily_bars(series), years)


def _make(cls, params, seed):
    valid = cls().get_params()
    kwargs = {k: v for k, v in params.items() if k in valid}
    if "random_state" in valid:
        kwargs["random_state"] = seed
    return cls(**kwargs)


def _params_of(est):
    final = est.steps[-1][1] if hasattr(est, "steps") else est
    return {k: v for k, v in final.get_params(deep=False).items() if k != "feature_names"}


def _scores(est, X):
    if hasattr(est, "predict_proba"):
        return est.predict_proba(X)[:, 1]
    return est.decision_function(X)


def _cls_block(est, X, y):
    pred = est.predict(X)
    cm = ConfusionMatrix.from_labels(pred, y)
    m = cls_metrics(cm)
    return {**m.as_dict(), "undefined": list(m.undefined),
            "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn}}


def _classical(name, params, seed, data):
    cls_est, reg_est = ESTIMATORS[name]
    known = set()
    for c in (cls_est, reg_est):
        if c is not None:
            known |= set(c().get_params())
    if name == "ols_stepwise":
        known.add("vif_threshold")
    unknown = set(params) - known
    if unknown:
        raise ConfigError(f"unknown parameters {sorted(unknown)}")
    names = list(data.train.predictors)
    entry = {"tasks": [], "params": {}, "diagnostics": {}}
    X_tr, X_te = data.train.X, data.test.X
    if cls_est is not None:
        y_tr, y_te = data.train.target_cls, data.test.target_cls
        est = _make(cls_est, params, seed)
        if name in SCALED:
            est = make_pipeline(MinMaxScaler(), est)
        est.fit(X_tr, y_tr)
        entry["tasks"].append("classification")
        entry["params"]["classification"] = _params_of(est)
        entry["classification"] = {"train": _cls_block(est, X_tr, y_tr), "test": _cls_block(est, X_te, y_te)}
        scores = _scores(est, X_te)
        if y_te.min() != y_te.max():
            points, auc = roc_auc(scores, y_te)
            entry["classification"]["auc"] = auc
            entry["curves"] = {"roc": points, "lift": lift_curve(scores, y_te)}
        final = est.steps[-1][1] if hasattr(est, "steps") else est
        for attr in ("oob_error_", "converged_", "separated_", "n_iter_", "steps_used_"):
            if hasattr(final, attr):
                entry["diagnostics"][f"classification_{attr.rstrip('_')}"] = getattr(final, attr)
    if reg_est is not None:
        y_tr, y_te = data.train.target_reg, data.test.target_reg
        reg_params = {k: v for k, v in params.items() if k != "vif_threshold"}
        if name == "mars":
            reg_params["feature_names"] = names
        X_fit, X_eval, kept = X_tr, X_te, names
        if name == "ols_stepwise":
            kept, dropped = drop_collinear(X_tr, names, params.get("vif_threshold", 10.0))
            cols = [names.index(k) for k in kept]
            X_fit, X_eval = X_tr[:, cols], X_te[:, cols]
            reg_params["feature_names"] = kept
            entry["diagnostics"]["vif_dropped"] = dropped
        est = _make(reg_est, reg_params, seed)
        if name in SCALED:
            est = make_pipeline(MinMaxScaler(), est)
        est.fit(X_fit, y_tr)
        entry["tasks"].append("regression")
        p = _params_of(est)
        if name == "ols_stepwise":
            p["vif_threshold"] = params.get("vif_threshold", 10.0)
        entry["params"]["regression"] = p
        pred_tr = est.predict(X_fit)
        entry["regression"] = {"train": reg_metrics(pred_tr, y_tr).as_dict(),
                               "test": reg_metrics(est.predict(X_eval), y_te).as_dict()}
        final = est.steps[-1][1] if hasattr(est, "steps") else est
        if name == "ols_stepwise":
            sel = final.support_
            d = diagnostics(y_tr - pred_tr, X_fit[:, sel] if sel.any() else X_fit[:, :1])
            entry["diagnostics"].update({"selected": final.selected_, "bp_stat": d.bp_stat, "bp_p": d.bp_p,
                                         "dw_stat": d.dw_stat, "dw": d.dw_interpretation})
        if name == "mars":
            entry["diagnostics"].update({"terms": final.term_labels(), "coefficients": [final.intercept_,
                                         *final.coef_], "gcv": final.gcv_, "grsq": final.grsq_, "rsq": final.rsq_})
        for attr in ("oob_error_", "converged_", "steps_used_"):
            if hasattr(final, attr):
                entry["diagnostics"][f"regression_{attr.rstrip('_')}"] = getattr(final, attr)
    return entry


def _lstm(params, seed, data):
    unknown = set(params) - set(LSTM_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown parameters {sorted(unknown)}")
    p = {**LSTM_DEFAULTS, **params}
    split = p.pop("split")
    values = data.train_values
    if data.test_values is None:
        # keep at least a third of the year for validation on short series
        split = min(split, (2 * len(values)) // 3)
        report = lstm_experiment(values, split=split, random_state=seed, **p)
        test_raw = values[split:]
    else:
        report = lstm_experiment(values, test_values=data.test_values, random_state=seed, **p)
        test_raw = data.test_values
    # implied next-slot percent change of the open, relative to the current actual open
    prev_open = test_raw[:-1, 0]
    pred_perc = 100.0 * (report.predictions - prev_open) / prev_open
    actual_perc = 100.0 * (report.actuals - prev_open) / prev_open
    return {
        "tasks": ["regression"],
        "params": {"regression": {**p, "split": split, "random_state": seed}},
        "regression": {"test": reg_metrics(pred_perc, actual_perc).as_dict()},
        "diagnostics": {"open_rmse": report.rmse, "open_pearson": report.pearson,
                        "final_train_mae": report.train_loss[-1], "final_val_mae": report.val_loss[-1]},
    }


def _cnn(name, params, seed, data):
    unknown = set(params) - set(CNN_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown parameters {sorted(unknown)}")
    p = {**CNN_DEFAULTS, **params}
    variant = name[-2:].upper()
    table = weekly_table(data.bars)
    history, variables = _VARIANT_FRAMING[variant]
    audit = {
        "train": audit_leakage(frame_weekly(table, history, variables, weeks=slice(0, p["train_weeks"]))),
        "walk_forward": audit_leakage(walk_forward(table, p["train_weeks"], history, variables)),
    }
    report = cnn_fit_eval(variant, table, rounds=p["rounds"], train_weeks=p["train_weeks"], seed=seed,
                          epochs=p["epochs"], batch_size=p["batch_size"], lr=p["lr"])
    return {
        "tasks": ["forecast"],
        "params": {"forecast": {**p, "random_state": seed}},
        "forecast": {"header": list(CSV_HEADER), "rows": report.rows(timing=False),
                     "mean_actual": report.mean_actual},
        "diagnostics": {"leakage_ok": audit},
        "timings_rounds": [r.exec_seconds for r in report.rounds],
    }


def run_model(name, config: ExperimentConfig, data: ExperimentData) -> dict:
    params = {**RUNNER_DEFAULTS.get(name, {}), **config.overrides.get(name, {})}
    seed = model_seed(config.seed, name)
    if name == "lstm":
        return _lstm(params, seed, data)
    if name.startswith("cnn_"):
        return _cnn(name, params, seed, data)
    return _classical(name, params, seed, data)


def _ledger(name, entry):
    notes = DEFAULT_NOTES.get(name, {})
    out = {}
    for task, params in entry.get("params", {}).items():
        for k, note in notes.items():
            if k in params:
                out[f"{task}.{k}"] = {"value": params[k], "note": note}
    return out


@dataclass
class ReportBundle:
    config: dict
    data: dict
    models: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    ledger: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Deterministic content; wall-clock timings are kept apart."""
        return _clean({"config": self.config, "data": self.data, "models": self.models,
                       "errors": self.errors, "ledger": self.ledger})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict, timings=None) -> "ReportBundle":
        return cls(d["config"], d["data"], d.get("models", {}), d.get("errors", []), d.get("ledger", {}),
                   timings or {})

    @property
    def ok(self) -> bool:
        return not self.errors

    def classification_reports(self, split="test"):
        return {m: e["classification"][split] for m, e in sorted(self.models.items())
                if "classification" in e and split in e["classification"]}

    def regression_reports(self, split="test"):
        return {m: e["regression"][split] for m, e in sorted(self.models.items())
                if "regression" in e and split in e["regression"]}


def run_experiment(config: ExperimentConfig, data: ExperimentData | None = None, write=True) -> ReportBundle:
    """Fit and evaluate every configured model; a failing model is recorded and the rest carry on."""
    config.validate()
    data = prepare_data(config) if data is None else data
    bundle = ReportBundle(config.to_dict(), data.summary())

    def job(name):
        t0 = time.perf_counter()
        try:
            entry = _clean(run_model(name, config, data))
            err = None
        except Exception as exc:  # one model's failure must not abort the others
            log.error("model %s failed: %s: %s", name, type(exc).__name__, exc)
            entry, err = None, {"model": name, "error": type(exc).__name__, "message": str(exc)}
        return name, entry, err, time.perf_counter() - t0

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(job, config.models))
    else:
        results = [job(m) for m in config.models]
    for name, entry, err, seconds in sorted(results, key=lambda r: r[0]):
        bundle.timings[name] = {"seconds": seconds}
        if err is not None:
            bundle.errors.append(err)
            continue
        rounds = entry.pop("timings_rounds", None)
        if rounds is not None:
            bundle.timings[name]["rounds"] = rounds
        bundle.models[name] = entry
        bundle.ledger[name] = _clean(_ledger(name, entry))
        log.info("model %s done in %.2fs", name, seconds)
    if write:
        emit_reports(bundle, config.out, ("json",))
    return bundle


def _write(path, text):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def emit_reports(bundle: ReportBundle, out_dir, formats=("csv", "json")) -> list:
    """Write the bundle as JSON and/or per-case summary tables and curve CSVs; returns written paths."""
    formats = set(formats)
    if not formats <= {"csv", "json"}:
        raise ValueError(f"unknown formats {sorted(formats - {'csv', 'json'})}")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out_dir}: {exc}") from exc
    paths = []
    case = bundle.data.get("case", "")
    if "json" in formats:
        paths.append(_write(os.path.join(out_dir, "bundle.json"), bundle.to_json()))
        if bundle.timings:
            paths.append(_write(os.path.join(out_dir, "timings.json"),
                                json.dumps(_clean(bundle.timings), sort_keys=True, indent=2) + "\n"))
    if "csv" in formats:
        cls = bundle.classification_reports()
        if cls:
            table = summarize({case: cls}, kind="classification")[case]
            paths.append(_write(os.path.join(out_dir, "summary_classification.csv"), table.to_csv()))
        reg = bundle.regression_reports()
        if reg:
            table = summarize({case: reg}, kind="regression")[case]
            paths.append(_write(os.path.join(out_dir, "summary_regression.csv"), table.to_csv()))
        for name, entry in sorted(bundle.models.items()):
            for kind, points in sorted(entry.get("curves", {}).items()):
                paths.append(_write(os.path.join(out_dir, f"{kind}_{name}.csv"), curve_csv(points)))
            if "forecast" in entry:
                paths.append(_write(os.path.join(out_dir, f"{name}.csv"), _forecast_csv(entry["forecast"])))
    return paths


def _forecast_csv(forecast) -> str:
    lines = [",".join(forecast["header"])]
    for row in forecast["rows"]:
        lines.append(",".join("" if v is None else repr(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def load_bundle(path) -> ReportBundle:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read bundle {path}: {exc}") from exc
    timings = None
    tpath = os.path.join(os.path.dirname(path), "timings.json")
    if os.path.exists(tpath):
        with open(tpath) as fh:
            timings = json.load(fh)
    return ReportBundle.from_dict(d, timings)
