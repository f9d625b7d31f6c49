"""Experiment configuration read from an INI file with one section per model.

Layout::

    [experiment]
    case = III                  ; I, II or III
    seed = 7
    models = logit, knn, rf     ; any of MODEL_NAMES, comma separated
    out = results
    workers = 1                 ; models fitted concurrently

    [data]
    source = synth              ; synth or ticks
    days = 500                  ; synth only: trading days from 2013-01-01
    synth_seed = 7              ; synth only, defaults to the experiment seed
    paths = a.csv, b.csv        ; ticks only
    slot_momentum = 0.3         ; any other key overrides a synthetic-generator parameter

    [model.rf]
    n_estimators = 200          ; constructor overrides, values parsed as Python literals

Unknown sections, keys and model names are rejected.
"""
from __future__ import annotations

import ast
import configparser
import dataclasses
import io
from dataclasses import dataclass, field

from .exceptions import ConfigError
from .features import Case
from .market_data import SynthParams

MODEL_NAMES = (
    "logit", "knn", "cart", "bag", "adaboost", "gradboost", "rf", "ann", "svm", "svr",
    "ols_stepwise", "mars", "lstm", "cnn_m1", "cnn_m2", "cnn_m3", "cnn_m4",
)
_SYNTH_FIELDS = {f.name for f in dataclasses.fields(SynthParams)} - {"start_date", "slot_bounds"}


@dataclass
class ExperimentConfig:
    models: tuple
    case: str = "III"
    seed: int = 0
    out: str = "results"
    workers: int = 1
    source: str = "synth"
    days: int = 500
    synth_seed: int | None = None
    paths: tuple = ()
    synth: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        self.models = tuple(self.models)
        self.paths = tuple(self.paths)
        self.validate()

    def validate(self):
        if not self.models:
            raise ConfigError("at least one model is required")
        unknown = [m for m in self.models if m not in MODEL_NAMES]
        if unknown:
            raise ConfigError(f"unknown models {unknown}; choose from {', '.join(MODEL_NAMES)}")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("duplicate model names")
        try:
            Case(self.case)
        except ValueError:
            raise ConfigError(f"case must be I, II or III, got {self.case!r}") from None
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.source not in ("synth", "ticks"):
            raise ConfigError("data source must be synth or ticks")
        if self.source == "ticks" and not self.paths:
            raise ConfigError("tick source needs at least one path")
        if self.source == "synth" and self.days < 2:
            raise ConfigError("synthetic data needs at least two days")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        bad = set(self.synth) - _SYNTH_FIELDS
        if bad:
            raise ConfigError(f"unknown synthetic parameters {sorted(bad)}")
        bad = set(self.overrides) - set(MODEL_NAMES)
        if bad:
            raise ConfigError(f"overrides for unknown models {sorted(bad)}")

    @property
    def data_seed(self) -> int:
        return self.seed if self.synth_seed is None else self.synth_seed

    def synth_params(self) -> SynthParams:
        try:
            return dataclasses.replace(SynthParams(), **self.synth)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "experiment": {"case": self.case, "seed": self.seed, "models": list(self.models),
                           "out": self.out, "workers": self.workers},
            "data": {"source": self.source, "days": self.days, "synth_seed": self.synth_seed,
                     "paths": list(self.paths), "synth": dict(sorted(self.synth.items()))},
            "overrides": {m: dict(sorted(p.items())) for m, p in sorted(self.overrides.items())},
        }

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser["experiment"] = {"case": self.case, "seed": str(self.seed), "models": ", ".join(self.models),
                                "out": self.out, "workers": str(self.workers)}
        data = {"source": self.source}
        if self.source == "synth":
            data["days"] = str(self.days)
            if self.synth_seed is not None:
                data["synth_seed"] = str(self.synth_seed)
            data.update({k: repr(v) for k, v in sorted(self.synth.items())})
        else:
            data["paths"] = ", ".join(self.paths)
        parser["data"] = data
        for model, params in sorted(self.overrides.items()):
            parser[f"model.{model}"] = {k: repr(v) for k, v in sorted(params.items())}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _literal(text, where):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        raise ConfigError(f"{where}: cannot parse value {text!r}") from None


def _int(section, key, default, where):
    raw = section.get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{where}.{key} must be an integer, got {raw!r}") from None


def _list(raw):
    return tuple(x.strip() for x in raw.split(",") if x.strip())


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for name in parser.sections():
        if name not in ("experiment", "data") and not name.startswith("model."):
            raise ConfigError(f"unknown section [{name}]")
    if "experiment" not in parser:
        raise ConfigError("missing [experiment] section")
    exp = parser["experiment"]
    extra = set(exp) - {"case", "seed", "models", "out", "workers"}
    if extra:
        raise ConfigError(f"unknown [experiment] keys {sorted(extra)}")
    data = parser["data"] if "data" in parser else {}
    source = data.get("source", "synth")
    synth = {k: _literal(v, f"data.{k}") for k, v in data.items()
             if k not in ("source", "days", "synth_seed", "paths")}
    overrides = {}
    for name in parser.sections():
        if name.startswith("model."):
            sec = parser[name]
            overrides[name[6:]] = {k: _literal(v, f"{name}.{k}") for k, v in sec.items()}
    synth_seed = data.get("synth_seed")
    return ExperimentConfig(
        models=_list(exp.get("models", "")),
        case=exp.get("case", "III").strip(),
        seed=_int(exp, "seed", 0, "experiment"),
        out=exp.get("out", "results"),
        workers=_int(exp, "workers", 1, "experiment"),
        source=source,
        days=_int(data, "days", 500, "data"),
        synth_seed=None if synth_seed is None else _int(data, "synth_seed", None, "data"),
        paths=_list(data.get("paths", "")),
        synth=synth,
        overrides=overrides,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
