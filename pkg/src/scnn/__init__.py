"""Self-normalizing convolutional text classification, from first principles.

A small, dependency-light engine: dense float64 tensors with reverse-mode
autodiff, SELU/ELU/ReLU activations with the matching initializers and
dropout variants, a multi-width convolutional sentence classifier with
max-over-time pooling, Adam training with stratified k-fold
cross-validation, a text ingestion pipeline, and moment-propagation
diagnostics that verify the self-normalization property empirically.

The convolution and pooling inner loops have a compiled backend with a
pure-numpy fallback; see scnn.kernels.
"""

__version__ = "1.0.0"

from scnn.errors import (
    ConfigError,
    DataError,
    FormatError,
    GraphError,
    NonFiniteError,
    ScnnError,
    ShapeError,
    VocabularyMismatchError,
)
from scnn.layers import (
    ACTIVATIONS,
    DEFAULT_SELU,
    INITIALIZERS,
    SELU_ALPHA,
    SELU_LAMBDA,
    DropoutSpec,
    SeluConstants,
    alpha_dropout,
    elu,
    glorot_uniform,
    lecun_normal,
    relu,
    selu,
    sigmoid,
    softmax,
    standard_dropout,
)
from scnn.model import (
    VARIANTS,
    ModelConfig,
    ModelParams,
    build,
    embedding_parameter_count,
    forward,
    parameter_count,
    predict,
    variant_defaults,
)
from scnn.moments import MomentReport, compare, propagate
from scnn.tensor import Tensor, no_grad
from scnn.text import (
    Dataset,
    EmbeddingTable,
    EncodedDataset,
    Example,
    Vocabulary,
    build_vocab,
    decode,
    encode,
    encode_dataset,
    load_dataset,
    load_embeddings,
    random_embeddings,
    tokenize,
)
from scnn.train import (
    AdamState,
    CVResult,
    Metrics,
    TrainConfig,
    adam_step,
    cross_entropy,
    evaluate,
    kfold_cv,
    stratified_folds,
    train,
)

__all__ = [
    "__version__",
    "ScnnError",
    "ShapeError",
    "GraphError",
    "NonFiniteError",
    "DataError",
    "ConfigError",
    "FormatError",
    "VocabularyMismatchError",
    "Tensor",
    "no_grad",
    "SELU_ALPHA",
    "SELU_LAMBDA",
    "DEFAULT_SELU",
    "SeluConstants",
    "DropoutSpec",
    "ACTIVATIONS",
    "INITIALIZERS",
    "selu",
    "elu",
    "relu",
    "sigmoid",
    "softmax",
    "glorot_uniform",
    "lecun_normal",
    "standard_dropout",
    "alpha_dropout",
    "VARIANTS",
    "ModelConfig",
    "ModelParams",
    "variant_defaults",
    "build",
    "forward",
    "predict",
    "parameter_count",
    "embedding_parameter_count",
    "tokenize",
    "Vocabulary",
    "build_vocab",
    "encode",
    "decode",
    "EmbeddingTable",
    "random_embeddings",
    "load_embeddings",
    "Example",
    "Dataset",
    "EncodedDataset",
    "load_dataset",
    "encode_dataset",
    "TrainConfig",
    "AdamState",
    "adam_step",
    "cross_entropy",
    "Metrics",
    "train",
    "evaluate",
    "stratified_folds",
    "kfold_cv",
    "CVResult",
    "MomentReport",
    "propagate",
    "compare",
]
