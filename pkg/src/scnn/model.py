"""The convolutional text classifier family.

One architecture, four named variants:

    SCNN      elu activation, lecun_normal init, alpha dropout 0.5, 70 filters/width
    SCNN_SELU selu activation, lecun_normal init, alpha dropout 0.5, 70 filters/width
    ShortCNN  relu activation, glorot_uniform init, standard dropout 0.5, 70 filters/width
    StaticCNN relu activation, glorot_uniform init, standard dropout 0.5, 100 filters/width

The forward pass embeds token ids, runs parallel valid convolutions over
the kernel widths, applies the activation, max-pools each filter over
time, concatenates, applies dropout (train mode), and finishes with a
dense head: a single sigmoid unit for binary tasks, softmax otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from scnn import tensor as T
from scnn.errors import ConfigError, DataError, ShapeError
from scnn.layers import (
    ACTIVATIONS,
    DEFAULT_SELU,
    INITIALIZERS,
    DropoutSpec,
    alpha_dropout,
    sigmoid,
    softmax,
    standard_dropout,
)
from scnn.tensor import Tensor

VARIANTS = ("SCNN", "SCNN_SELU", "ShortCNN", "StaticCNN")

_VARIANT_DEFAULTS = {
    "SCNN": dict(activation="elu", conv_init="lecun_normal", dropout_kind="alpha", filters=70),
    "SCNN_SELU": dict(activation="selu", conv_init="lecun_normal", dropout_kind="alpha", filters=70),
    "ShortCNN": dict(activation="relu", conv_init="glorot_uniform", dropout_kind="standard", filters=70),
    "StaticCNN": dict(activation="relu", conv_init="glorot_uniform", dropout_kind="standard", filters=100),
}


def variant_defaults(variant: str) -> dict:
    """Per-variant defaults for activation, conv_init, dropout_kind, filters."""
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return dict(_VARIANT_DEFAULTS[variant])


@dataclass
class ModelConfig:
    """Architecture description. Fields left as None take the variant default."""

    variant: str = "SCNN"
    kernel_widths: tuple[int, ...] = (3, 4, 5)
    filters_per_width: int | None = None
    embed_dim: int = 300
    max_len: int = 60
    vocab_size: int = 20000
    num_classes: int = 2
    dropout: DropoutSpec | None = None
    activation: str | None = None
    conv_init: str | None = None
    trainable_embeddings: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        defaults = _VARIANT_DEFAULTS[self.variant]
        if self.filters_per_width is None:
            self.filters_per_width = defaults["filters"]
        if self.activation is None:
            self.activation = defaults["activation"]
        if self.conv_init is None:
            self.conv_init = defaults["conv_init"]
        if self.dropout is None:
            self.dropout = DropoutSpec(kind=defaults["dropout_kind"], rate=0.5)
        self.kernel_widths = tuple(int(w) for w in self.kernel_widths)
        if not self.kernel_widths or any(w < 1 for w in self.kernel_widths):
            raise ConfigError(f"kernel widths must be positive, got {self.kernel_widths}")
        if len(set(self.kernel_widths)) != len(self.kernel_widths):
            raise ConfigError(f"kernel widths must be distinct, got {self.kernel_widths}")
        if self.max_len < max(self.kernel_widths):
            raise ConfigError(
                f"max_len {self.max_len} is smaller than the widest kernel {max(self.kernel_widths)}"
            )
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.filters_per_width < 1:
            raise ConfigError(f"filters_per_width must be >= 1, got {self.filters_per_width}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(
                f"unknown activation {self.activation!r}; expected one of {sorted(ACTIVATIONS)}"
            )
        if self.conv_init not in INITIALIZERS:
            raise ConfigError(
                f"unknown initializer {self.conv_init!r}; expected one of {sorted(INITIALIZERS)}"
            )

    @property
    def out_units(self) -> int:
        """1 for a binary sigmoid head, num_classes for a softmax head."""
        return 1 if self.num_classes == 2 else self.num_classes

    @property
    def total_filters(self) -> int:
        return self.filters_per_width * len(self.kernel_widths)

    def with_updates(self, **kw) -> "ModelConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "kernel_widths": list(self.kernel_widths),
            "filters_per_width": self.filters_per_width,
            "embed_dim": self.embed_dim,
            "max_len": self.max_len,
            "vocab_size": self.vocab_size,
            "num_classes": self.num_classes,
            "dropout_kind": self.dropout.kind,
            "dropout_rate": self.dropout.rate,
            "activation": self.activation,
            "conv_init": self.conv_init,
            "trainable_embeddings": self.trainable_embeddings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            variant=d["variant"],
            kernel_widths=tuple(d["kernel_widths"]),
            filters_per_width=d["filters_per_width"],
            embed_dim=d["embed_dim"],
            max_len=d["max_len"],
            vocab_size=d["vocab_size"],
            num_classes=d["num_classes"],
            dropout=DropoutSpec(kind=d["dropout_kind"], rate=d["dropout_rate"]),
            activation=d["activation"],
            conv_init=d["conv_init"],
            trainable_embeddings=d["trainable_embeddings"],
        )


@dataclass
class ModelParams:
    """Concrete weights for a ModelConfig."""

    embedding: Tensor  # (V, d)
    kernels: dict[int, Tensor] = field(default_factory=dict)  # width -> (F, h, d)
    biases: dict[int, Tensor] = field(default_factory=dict)  # width -> (F,)
    dense_w: Tensor = None  # (F*|widths|, out)
    dense_b: Tensor = None  # (out,)

    def named(self, trainable_embeddings: bool = False) -> Iterator[tuple[str, Tensor]]:
        """Trainable parameters in a fixed order."""
        if trainable_embeddings:
            yield "embedding", self.embedding
        for width in sorted(self.kernels):
            yield f"conv{width}.weight", self.kernels[width]
            yield f"conv{width}.bias", self.biases[width]
        yield "dense.weight", self.dense_w
        yield "dense.bias", self.dense_b

    def all_tensors(self) -> Iterator[tuple[str, Tensor]]:
        """Every parameter tensor, embedding included, in checkpoint order."""
        yield "embedding", self.embedding
        for width in sorted(self.kernels):
            yield f"conv{width}.weight", self.kernels[width]
            yield f"conv{width}.bias", self.biases[width]
        yield "dense.weight", self.dense_w
        yield "dense.bias", self.dense_b

    def zero_grads(self) -> None:
        for _, t in self.all_tensors():
            t.zero_grad()


def build(config: ModelConfig, embeddings, rng: np.random.Generator) -> ModelParams:
    """Initialize all weights for `config`.

    Convolution kernels use config.conv_init with fan_in = h*d and fan_out =
    filters_per_width; their biases start at exactly zero. The dense head
    uses the same initializer family with fan_in = total_filters. The
    embedding matrix is copied in unchanged.
    """
    matrix = embeddings.matrix if hasattr(embeddings, "matrix") else np.asarray(embeddings)
    if matrix.ndim != 2:
        raise ShapeError(f"embedding matrix must be 2-D, got shape {matrix.shape}")
    if matrix.shape != (config.vocab_size, config.embed_dim):
        raise ShapeError(
            f"embedding shape {matrix.shape} does not match config "
            f"(vocab_size={config.vocab_size}, embed_dim={config.embed_dim})"
        )
    init = INITIALIZERS[config.conv_init]
    f = config.filters_per_width
    params = ModelParams(
        embedding=Tensor(matrix.copy(), requires_grad=config.trainable_embeddings)
    )
    for h in config.kernel_widths:
        params.kernels[h] = init(h * config.embed_dim, f, rng, shape=(f, h, config.embed_dim))
        params.biases[h] = Tensor(np.zeros(f), requires_grad=True)
    params.dense_w = init(config.total_filters, config.out_units, rng)
    params.dense_b = Tensor(np.zeros(config.out_units), requires_grad=True)
    return params


def _check_ids(config: ModelConfig, token_ids) -> np.ndarray:
    ids = np.asarray(token_ids)
    if ids.ndim != 2:
        raise DataError(f"token ids must be a (batch, {config.max_len}) array, got shape {ids.shape}")
    if ids.shape[1] != config.max_len:
        raise DataError(f"sequences must be padded to length {config.max_len}, got {ids.shape[1]}")
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise DataError(
            f"token ids must lie in [0, {config.vocab_size}), got range "
            f"[{ids.min()}, {ids.max()}]"
        )
    return ids.astype(np.int64, copy=False)


def forward(
    params: ModelParams,
    config: ModelConfig,
    token_ids,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Probabilities for a batch: shape (B, 1) binary, (B, num_classes) otherwise."""
    ids = _check_ids(config, token_ids)
    act = ACTIVATIONS[config.activation]
    embedded = T.gather_rows(params.embedding, ids)  # (B, N, d)
    pooled = []
    for h in config.kernel_widths:
        conv = T.conv_bank(embedded, params.kernels[h], params.biases[h])
        pooled.append(T.max_pool_time(act(conv)))
    features = concat = T.concat_cols(pooled)  # (B, F*|widths|)
    if train:
        if config.dropout.kind == "alpha":
            features = alpha_dropout(concat, config.dropout, DEFAULT_SELU, train=True, rng=rng)
        else:
            features = standard_dropout(concat, config.dropout, train=True, rng=rng)
    logits = T.add_bias(T.matmul(features, params.dense_w), params.dense_b)
    if config.out_units == 1:
        return sigmoid(logits)
    return softmax(logits)


def predict(params: ModelParams, config: ModelConfig, token_ids) -> np.ndarray:
    """Label ids for a batch. Binary: probability >= 0.5 maps to class 1;
    multiclass: argmax, ties to the lowest index."""
    with T.no_grad():
        probs = forward(params, config, token_ids, train=False).data
    if config.out_units == 1:
        return (probs[:, 0] >= 0.5).astype(np.int64)
    return np.argmax(probs, axis=1).astype(np.int64)


def parameter_count(config: ModelConfig) -> int:
    """Trainable scalars: conv kernels and biases plus the dense head.

    The embedding table is excluded unless trainable_embeddings is set; use
    `embedding_parameter_count` to report it separately.
    """
    f = config.filters_per_width
    count = sum(f * (h * config.embed_dim + 1) for h in config.kernel_widths)
    count += config.total_filters * config.out_units + config.out_units
    if config.trainable_embeddings:
        count += config.vocab_size * config.embed_dim
    return count


def embedding_parameter_count(config: ModelConfig) -> int:
    return config.vocab_size * config.embed_dim
