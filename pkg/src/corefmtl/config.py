"""Run configuration: a small INI dialect with strict key checking.

Sections and keys mirror the training and model dataclasses; unknown
sections or keys are rejected rather than ignored so typos cannot
silently change an experiment.
"""

import configparser
import io
from dataclasses import dataclass, field

from .encoder import EncoderConfig
from .mtl import PRESET_WEIGHTS, TaskWeights
from .training import TrainConfig


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_SCHEMA = {
    "encoder": {
        "kind": str, "dim": int, "vocab_size": int, "window": int,
        "model_name": str, "segment_length": int,
    },
    "model": {
        "feature_dim": int, "hidden": int, "ffnn_depth": int, "activation": str,
        "dropout": float, "max_span_width": int, "prune_ratio": float,
        "top_antecedents": int,
    },
    "weights": {
        "coref": float, "singleton": float, "entity_type": float,
        "info_status": float,
    },
    "training": {
        "steps": int, "task_learning_rate": float, "encoder_learning_rate": float,
        "weight_decay": float, "clip_norm": float, "seed": int,
        "eval_every": int, "select": str,
    },
    "decode": {"threshold": float},
    "metrics": {"keep_singletons": _parse_bool, "mention_mode": str},
}


@dataclass
class RunConfig:
    encoder: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    training: dict = field(default_factory=dict)
    decode: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return getattr(self, name)

    def train_config(self) -> TrainConfig:
        enc = EncoderConfig(**self.encoder)
        weights = TaskWeights(**self.weights)
        try:
            return TrainConfig(encoder=enc, task_weights=weights,
                               **self.model, **self.training)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @property
    def threshold(self) -> float:
        return self.decode["threshold"]

    @property
    def keep_singletons(self) -> bool:
        return self.metrics["keep_singletons"]

    @property
    def mention_mode(self) -> str:
        return self.metrics["mention_mode"]


def _defaults() -> RunConfig:
    train = TrainConfig()
    enc = train.encoder
    return RunConfig(
        encoder={"kind": enc.kind, "dim": enc.dim, "vocab_size": enc.vocab_size,
                 "window": enc.window, "model_name": enc.model_name,
                 "segment_length": enc.segment_length},
        model={"feature_dim": train.feature_dim, "hidden": train.hidden,
               "ffnn_depth": train.ffnn_depth, "activation": train.activation,
               "dropout": train.dropout, "max_span_width": train.max_span_width,
               "prune_ratio": train.prune_ratio,
               "top_antecedents": train.top_antecedents},
        weights=dict(train.task_weights.as_dict()),
        training={"steps": train.steps,
                  "task_learning_rate": train.task_learning_rate,
                  "encoder_learning_rate": train.encoder_learning_rate,
                  "weight_decay": train.weight_decay, "clip_norm": train.clip_norm,
                  "seed": train.seed, "eval_every": train.eval_every,
                  "select": train.select},
        decode={"threshold": 0.5},
        metrics={"keep_singletons": False, "mention_mode": "all"},
    )


def load_config(path=None, preset: str | None = None,
                overrides: dict | None = None) -> RunConfig:
    """Defaults, then preset weights, then the file, then explicit overrides.

    overrides maps "section.key" strings to unparsed values.
    """
    cfg = _defaults()
    if preset is not None:
        if preset not in PRESET_WEIGHTS:
            raise ConfigError(f"unknown preset {preset!r}; choose from "
                              + ", ".join(sorted(PRESET_WEIGHTS)))
        cfg.weights = dict(PRESET_WEIGHTS[preset].as_dict())
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, strict=True)
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, raw in parser.items(section):
                _apply(cfg, section, key, raw, where=str(path))
    for dotted, raw in (overrides or {}).items():
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        section, key = dotted.split(".", 1)
        _apply(cfg, section, key, raw, where="override")
    _validate(cfg)
    return cfg


def _apply(cfg: RunConfig, section: str, key: str, raw, where: str):
    schema = _SCHEMA.get(section)
    if schema is None:
        raise ConfigError(f"{where}: unknown section [{section}]")
    if key not in schema:
        raise ConfigError(f"{where}: unknown key {key!r} in section [{section}]")
    parse = schema[key]
    try:
        value = parse(raw) if isinstance(raw, str) else raw
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {section}.{key}: {exc}") from None
    cfg.section(section)[key] = value


def _validate(cfg: RunConfig):
    if cfg.metrics["mention_mode"] not in ("all", "coreferent"):
        raise ConfigError("metrics.mention_mode must be 'all' or 'coreferent'")
    if cfg.training["select"] not in ("best", "final"):
        raise ConfigError("training.select must be 'best' or 'final'")
    if cfg.model["activation"] not in ("relu", "tanh"):
        raise ConfigError("model.activation must be 'relu' or 'tanh'")
    if not 0.0 <= cfg.model["dropout"] < 1.0:
        raise ConfigError("model.dropout must be in [0, 1)")
    try:
        cfg.train_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def render_config(cfg: RunConfig) -> str:
    out = io.StringIO()
    for section in _SCHEMA:
        out.write(f"[{section}]\n")
        for key in _SCHEMA[section]:
            value = cfg.section(section)[key]
            if isinstance(value, bool):
                value = "true" if value else "false"
            out.write(f"{key} = {value}\n")
        out.write("\n")
    return out.getvalue()


def config_from_train_config(train: TrainConfig, threshold: float = 0.5,
                             keep_singletons: bool = False,
                             mention_mode: str = "all") -> RunConfig:
    cfg = _defaults()
    enc = train.encoder
    cfg.encoder.update(kind=enc.kind, dim=enc.dim, vocab_size=enc.vocab_size,
                       window=enc.window, model_name=enc.model_name,
                       segment_length=enc.segment_length)
    cfg.model.update(feature_dim=train.feature_dim, hidden=train.hidden,
                     ffnn_depth=train.ffnn_depth, activation=train.activation,
                     dropout=train.dropout, max_span_width=train.max_span_width,
                     prune_ratio=train.prune_ratio,
                     top_antecedents=train.top_antecedents)
    cfg.weights = dict(train.task_weights.as_dict())
    cfg.training.update(steps=train.steps,
                        task_learning_rate=train.task_learning_rate,
                        encoder_learning_rate=train.encoder_learning_rate,
                        weight_decay=train.weight_decay, clip_norm=train.clip_norm,
                        seed=train.seed, eval_every=train.eval_every,
                        select=train.select)
    cfg.decode["threshold"] = threshold
    cfg.metrics.update(keep_singletons=keep_singletons, mention_mode=mention_mode)
    return cfg
