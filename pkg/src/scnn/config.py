"""Run configuration: a flat, typed, dotted-key text format.

A config file is lines of "key = value" with # comments. Every key has a
schema entry (type + default); unknown keys are rejected so typos fail
fast instead of silently using a default. CLI --set overrides use the
same keys. An empty value means "use the default" for optional fields.

    # example
    dataset.path = corpora/mr
    dataset.layout = pair-of-files
    model.variant = SCNN
    training.epochs = 25
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from scnn.errors import ConfigError
from scnn.layers import DropoutSpec
from scnn.model import ModelConfig, variant_defaults
from scnn.train import TrainConfig

_UNSET = object()


@dataclass(frozen=True)
class Field:
    kind: str  # str | int | float | bool | ints | strs | opt_int | opt_float | opt_str
    default: object
    help: str = ""


SCHEMA: dict[str, Field] = {
    "dataset.path": Field("opt_str", None, "corpus location (file or directory)"),
    "dataset.layout": Field("str", "tsv", "tsv | pair-of-files | labeled-prefix | directory-per-class"),
    "dataset.name": Field("str", "", "free-form tag echoed into outputs"),
    "embeddings.path": Field("opt_str", None, "pretrained embedding file"),
    "embeddings.format": Field("str", "random", "random | text | binary"),
    "embeddings.dim": Field("int", 300, "embedding dimension d"),
    "model.variant": Field("str", "SCNN", "SCNN | SCNN_SELU | ShortCNN | StaticCNN"),
    "model.kernel_widths": Field("ints", (3, 4, 5), "convolution widths"),
    "model.filters_per_width": Field("opt_int", None, "filters per width (empty: variant default)"),
    "model.max_len": Field("int", 60, "padded sequence length N"),
    "model.vocab_size": Field("int", 20000, "vocabulary cap V (pad included)"),
    "model.num_classes": Field("int", 2, "number of classes (inferred from data unless set)"),
    "model.dropout_kind": Field("opt_str", None, "standard | alpha (empty: variant default)"),
    "model.dropout_rate": Field("float", 0.5, "dropout rate in [0, 1)"),
    "model.activation": Field("opt_str", None, "selu | elu | relu (empty: variant default)"),
    "model.conv_init": Field("opt_str", None, "lecun_normal | glorot_uniform (empty: variant default)"),
    "model.trainable_embeddings": Field("bool", False, "update the embedding table during training"),
    "training.learning_rate": Field("float", 0.001, ""),
    "training.beta1": Field("float", 0.9, ""),
    "training.beta2": Field("float", 0.999, ""),
    "training.epsilon": Field("float", 1e-8, ""),
    "training.batch_size": Field("int", 50, ""),
    "training.epochs": Field("int", 25, ""),
    "training.seed": Field("int", 0, "master seed for all derived streams"),
    "training.shuffle": Field("bool", True, ""),
    "cv.k": Field("int", 10, "number of folds"),
    "cv.force": Field("bool", False, "run CV even on a dataset with a predefined split"),
    "output.dir": Field("str", "runs", "directory for metrics, history, checkpoints"),
    "moments.depth": Field("int", 20, "probe stack depth"),
    "moments.width": Field("int", 256, "probe layer width"),
    "moments.activations": Field("strs", ("selu",), "activations to probe (comma-separated)"),
    "moments.init": Field("str", "lecun_normal", "probe weight initializer"),
    "moments.dropout_kind": Field("str", "none", "none | standard | alpha"),
    "moments.dropout_rate": Field("float", 0.0, ""),
    "moments.input_dist": Field("str", "standard_normal", "standard_normal | scaled_normal"),
    "moments.input_sigma": Field("float", 1.0, "sigma for scaled_normal inputs"),
    "moments.samples": Field("int", 100000, "samples per probe (>= 10000)"),
}


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    raise ConfigError(f"{key}: expected true or false, got {raw!r}")


def parse_value(key: str, raw: str):
    """Parse a raw string per the schema entry for `key`."""
    if key not in SCHEMA:
        known = ", ".join(sorted(SCHEMA))
        raise ConfigError(f"unknown config key {key!r}; known keys: {known}")
    spec = SCHEMA[key]
    raw = raw.strip()
    kind = spec.kind
    if kind.startswith("opt_"):
        if raw == "":
            return None
        kind = kind[4:]
    try:
        if kind == "str":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            return _parse_bool(key, raw)
        if kind == "ints":
            return tuple(int(part.strip()) for part in raw.split(",") if part.strip())
        if kind == "strs":
            return tuple(part.strip() for part in raw.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    raise ConfigError(f"{key}: unhandled schema kind {spec.kind!r}")


class RunConfig:
    """Resolved configuration: schema defaults overlaid with file values
    and --set overrides. Tracks which keys were set explicitly so commands
    can distinguish "defaulted" from "user-chosen"."""

    def __init__(self):
        self._values = {key: spec.default for key, spec in SCHEMA.items()}
        self.explicit: set[str] = set()

    def set(self, key: str, raw: str) -> None:
        self._values[key] = parse_value(key, raw)
        self.explicit.add(key)

    def get(self, key: str):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def is_explicit(self, key: str) -> bool:
        return key in self.explicit

    def to_dict(self) -> dict:
        out = {}
        for key in sorted(SCHEMA):
            value = self._values[key]
            if isinstance(value, tuple):
                value = list(value)
            out[key] = value
        return out

    # ---- builders -----------------------------------------------------

    def model_config(self, num_classes: int, vocab_size: int, embed_dim: int) -> ModelConfig:
        """ModelConfig with runtime-resolved vocab/classes/dimension."""
        dropout = None
        if self.get("model.dropout_kind") is not None or self.is_explicit("model.dropout_rate"):
            kind = self.get("model.dropout_kind")
            if kind is None:
                kind = variant_defaults(self.get("model.variant"))["dropout_kind"]
            dropout = DropoutSpec(kind=kind, rate=self.get("model.dropout_rate"))
        return ModelConfig(
            variant=self.get("model.variant"),
            kernel_widths=self.get("model.kernel_widths"),
            filters_per_width=self.get("model.filters_per_width"),
            embed_dim=embed_dim,
            max_len=self.get("model.max_len"),
            vocab_size=vocab_size,
            num_classes=num_classes,
            dropout=dropout,
            activation=self.get("model.activation"),
            conv_init=self.get("model.conv_init"),
            trainable_embeddings=self.get("model.trainable_embeddings"),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.get("training.learning_rate"),
            beta1=self.get("training.beta1"),
            beta2=self.get("training.beta2"),
            epsilon=self.get("training.epsilon"),
            batch_size=self.get("training.batch_size"),
            epochs=self.get("training.epochs"),
            seed=self.get("training.seed"),
            shuffle=self.get("training.shuffle"),
        )


def parse_config_text(text: str, source: str = "<config>") -> list[tuple[str, str]]:
    """(key, raw value) pairs from config file text, syntax-checked."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {stripped!r}")
        pairs.append((key.strip(), raw.strip()))
    return pairs


def load_config(path=None, overrides: list[str] = ()) -> RunConfig:
    """Build a RunConfig from an optional file plus --set overrides.

    Overrides are "key=value" strings and win over file values; later
    overrides win over earlier ones.
    """
    rc = RunConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        for key, raw in parse_config_text(p.read_text(encoding="utf-8"), source=str(p)):
            rc.set(key, raw)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        rc.set(key.strip(), raw.strip())
    return rc
