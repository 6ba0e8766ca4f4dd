"""Training and evaluation: cross-entropy, Adam, metrics, k-fold CV.

One master seed feeds independent derived streams (init, shuffle, dropout,
folds), so toggling dropout never perturbs fold assignment and fold i's
training is reproducible no matter how many workers run the folds.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from scnn import model as M
from scnn import rng as R
from scnn.errors import ConfigError, DataError, NonFiniteError, ShapeError
from scnn.tensor import Tensor
from scnn.text import EmbeddingTable, EncodedDataset

_CLAMP = 1e-12


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 50
    epochs: int = 25
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if not 0.0 < self.beta1 < 1.0 or not 0.0 < self.beta2 < 1.0:
            raise ConfigError(f"betas must lie in (0, 1), got {self.beta1}, {self.beta2}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")


def cross_entropy(probs: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of `labels` under the model head.

    Binary heads give probs of shape (B, 1): loss is
    -[y log p + (1-y) log(1-p)]. Softmax heads give (B, C): loss is
    -log p[label]. Probabilities are clamped to [1e-12, 1-1e-12] before
    the log; the clamp passes no gradient where it is active.
    """
    y = np.asarray(labels, dtype=np.int64)
    p = probs.data
    if p.ndim != 2 or y.ndim != 1 or y.shape[0] != p.shape[0]:
        raise ShapeError(f"probs shape {p.shape} does not align with labels shape {y.shape}")
    n, width = p.shape
    if width == 1:
        if y.size and (y.min() < 0 or y.max() > 1):
            raise DataError(f"binary labels must be 0 or 1, got range [{y.min()}, {y.max()}]")
        raw = p[:, 0]
        inside = (raw > _CLAMP) & (raw < 1.0 - _CLAMP)
        pc = np.clip(raw, _CLAMP, 1.0 - _CLAMP)
        value = -np.mean(y * np.log(pc) + (1 - y) * np.log1p(-pc))
        out = Tensor._from_op(value, (probs,), "cross_entropy")

        if out.requires_grad:

            def _backward():
                g = np.zeros_like(p)
                g[:, 0] = np.where(inside, (pc - y) / (pc * (1.0 - pc) * n), 0.0)
                probs._accum(out.grad * g)

            out._backward = _backward
        return out

    if y.size and (y.min() < 0 or y.max() >= width):
        raise DataError(f"labels must lie in [0, {width}), got range [{y.min()}, {y.max()}]")
    raw = p[np.arange(n), y]
    inside = raw > _CLAMP
    pc = np.clip(raw, _CLAMP, None)
    value = -np.mean(np.log(pc))
    out = Tensor._from_op(value, (probs,), "cross_entropy")

    if out.requires_grad:

        def _backward():
            g = np.zeros_like(p)
            g[np.arange(n), y] = np.where(inside, -1.0 / (pc * n), 0.0)
            probs._accum(out.grad * g)

        out._backward = _backward
    return out


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """First/second moment accumulators per parameter name plus a step count."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(named_params, state: AdamState, cfg: TrainConfig) -> None:
    """One Adam update, in place.

    m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  bias-correct both;
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps). A missing gradient
    counts as zero.
    """
    state.t += 1
    t = state.t
    correct1 = 1.0 - cfg.beta1**t
    correct2 = 1.0 - cfg.beta2**t
    for name, param in named_params:
        g = param.grad if param.grad is not None else np.zeros_like(param.data)
        if g.shape != param.data.shape:
            raise ShapeError(
                f"gradient shape {g.shape} does not match parameter {name!r} "
                f"shape {param.data.shape}"
            )
        if name not in state.m:
            state.m[name] = np.zeros_like(param.data)
            state.v[name] = np.zeros_like(param.data)
        m, v = state.m[name], state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        m_hat = m / correct1
        v_hat = v / correct2
        param.data -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass
class Metrics:
    """Accuracy, per-class precision/recall/F1, macro-F1, confusion matrix."""

    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float
    positive_f1: float | None
    confusion: np.ndarray
    n_examples: int
    class_names: list[str] | None = None

    @classmethod
    def from_predictions(cls, y_true, y_pred, num_classes: int, class_names=None) -> "Metrics":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape:
            raise ShapeError(
                f"labels shape {y_true.shape} does not match predictions shape {y_pred.shape}"
            )
        if y_true.size == 0:
            raise DataError("cannot compute metrics on zero examples")
        for arr, what in ((y_true, "labels"), (y_pred, "predictions")):
            if arr.min() < 0 or arr.max() >= num_classes:
                raise DataError(f"{what} outside [0, {num_classes})")
        confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
        np.add.at(confusion, (y_true, y_pred), 1)
        return cls.from_confusion(confusion, class_names=class_names)

    @classmethod
    def from_confusion(cls, confusion, class_names=None) -> "Metrics":
        confusion = np.asarray(confusion, dtype=np.int64)
        if confusion.ndim != 2 or confusion.shape[0] != confusion.shape[1]:
            raise ShapeError(f"confusion matrix must be square, got {confusion.shape}")
        n = int(confusion.sum())
        diag = np.diag(confusion).astype(np.float64)
        pred_totals = confusion.sum(axis=0).astype(np.float64)
        true_totals = confusion.sum(axis=1).astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            precision = np.where(pred_totals > 0, diag / pred_totals, 0.0)
            recall = np.where(true_totals > 0, diag / true_totals, 0.0)
            denom = precision + recall
            f1 = np.where(denom > 0, 2.0 * precision * recall / np.where(denom > 0, denom, 1.0), 0.0)
        accuracy = float(diag.sum() / n)
        positive_f1 = float(f1[1]) if confusion.shape[0] == 2 else None
        return cls(
            accuracy=accuracy,
            precision=precision,
            recall=recall,
            f1=f1,
            macro_f1=float(f1.mean()),
            positive_f1=positive_f1,
            confusion=confusion,
            n_examples=n,
            class_names=list(class_names) if class_names is not None else None,
        )

    def scalars(self) -> dict[str, float]:
        out = {"accuracy": self.accuracy, "macro_f1": self.macro_f1}
        if self.positive_f1 is not None:
            out["positive_f1"] = self.positive_f1
        return out

    def to_dict(self) -> dict:
        names = self.class_names or [str(i) for i in range(self.confusion.shape[0])]
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "positive_f1": self.positive_f1,
            "n_examples": self.n_examples,
            "per_class": [
                {
                    "class": names[c],
                    "precision": float(self.precision[c]),
                    "recall": float(self.recall[c]),
                    "f1": float(self.f1[c]),
                }
                for c in range(self.confusion.shape[0])
            ],
            "confusion": self.confusion.tolist(),
        }


def evaluate(
    params: M.ModelParams,
    model_cfg: M.ModelConfig,
    dataset: EncodedDataset,
    batch_size: int = 256,
) -> Metrics:
    """Eval-mode predictions over the whole dataset, reduced to Metrics."""
    preds = np.empty(len(dataset), dtype=np.int64)
    for start in range(0, len(dataset), batch_size):
        stop = min(start + batch_size, len(dataset))
        preds[start:stop] = M.predict(params, model_cfg, dataset.ids[start:stop])
    return Metrics.from_predictions(
        dataset.labels, preds, model_cfg.num_classes, class_names=dataset.class_names
    )


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


def train(
    train_cfg: TrainConfig,
    model_cfg: M.ModelConfig,
    dataset: EncodedDataset,
    embeddings: EmbeddingTable,
    val: EncodedDataset | None = None,
    stream_key: tuple[int, ...] = (),
    init_params: M.ModelParams | None = None,
):
    """Run the full loop: shuffle, minibatch, forward, loss, backward, Adam.

    Returns (params, history) where history holds one record per epoch with
    the mean train loss and, when `val` is given, its evaluation metrics.
    Deterministic given (config, seed, stream_key); `stream_key` namespaces
    the derived RNG streams so CV folds stay independent.
    """
    if len(dataset) == 0:
        raise DataError("cannot train on an empty dataset")
    if dataset.num_classes != model_cfg.num_classes:
        raise ConfigError(
            f"dataset has {dataset.num_classes} classes but the model is configured "
            f"for {model_cfg.num_classes}"
        )
    seed = train_cfg.seed
    if init_params is None:
        params = M.build(model_cfg, embeddings, R.stream(seed, *stream_key, R.INIT))
    else:
        params = init_params
    shuffle_rng = R.stream(seed, *stream_key, R.SHUFFLE)
    dropout_rng = R.stream(seed, *stream_key, R.DROPOUT)
    named = list(params.named(model_cfg.trainable_embeddings))
    state = AdamState()
    history: list[dict] = []
    n = len(dataset)
    for epoch in range(train_cfg.epochs):
        order = shuffle_rng.permutation(n) if train_cfg.shuffle else np.arange(n)
        total_loss = 0.0
        for start in range(0, n, train_cfg.batch_size):
            batch = order[start : start + train_cfg.batch_size]
            probs = M.forward(
                params, model_cfg, dataset.ids[batch], train=True, rng=dropout_rng
            )
            loss = cross_entropy(probs, dataset.labels[batch])
            if not np.isfinite(loss.data):
                raise NonFiniteError(
                    f"training loss became non-finite at epoch {epoch + 1}, "
                    f"batch starting at {start}"
                )
            params.zero_grads()
            loss.backward()
            adam_step(named, state, train_cfg)
            total_loss += loss.item() * len(batch)
        record = {"epoch": epoch + 1, "train_loss": total_loss / n}
        if val is not None:
            metrics = evaluate(params, model_cfg, val)
            for key, value in metrics.scalars().items():
                record[f"val_{key}"] = value
        history.append(record)
    return params, history


def history_rows(history: list[dict], fold: int | None = None) -> list[tuple]:
    """Long-format (fold, epoch, split, metric, value) rows for CSV export."""
    rows = []
    fold_label = "" if fold is None else fold
    for record in history:
        epoch = record["epoch"]
        for key, value in record.items():
            if key == "epoch":
                continue
            if key.startswith("val_"):
                split, metric = "val", key[4:]
            else:
                split, metric = "train", key.removeprefix("train_")
            rows.append((fold_label, epoch, split, metric, value))
    return rows


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


def stratified_folds(labels, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Partition indices into k disjoint, exhaustive, class-balanced folds.

    Per class: shuffle that class's indices, deal them round-robin, so each
    fold's share of every class is within one example of every other
    fold's. A class with fewer than k members forces a plain unstratified
    split, with a warning.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if n < k:
        raise DataError(f"cannot make {k} folds from {n} examples")
    classes, counts = np.unique(labels, return_counts=True)
    if counts.min() < k:
        rare = classes[counts < k]
        warnings.warn(
            f"classes {rare.tolist()} have fewer than {k} examples; "
            "falling back to unstratified folds",
            stacklevel=2,
        )
        order = rng.permutation(n)
        return [np.sort(part) for part in np.array_split(order, k)]
    folds: list[list[int]] = [[] for _ in range(k)]
    for c in classes:
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.shape[0])]
        for j in range(k):
            folds[j].extend(members[j::k].tolist())
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


@dataclass
class CVResult:
    fold_metrics: list[Metrics]
    histories: list[list[dict]]
    mean: dict[str, float]
    std: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "folds": [m.to_dict() for m in self.fold_metrics],
            "mean": self.mean,
            "std": self.std,
        }


def _run_fold(args):
    fold_idx, test_idx, train_cfg, model_cfg, dataset, embeddings = args
    mask = np.ones(len(dataset), dtype=bool)
    mask[test_idx] = False
    train_part = dataset.subset(np.flatnonzero(mask))
    test_part = dataset.subset(test_idx)
    params, history = train(
        train_cfg,
        model_cfg,
        train_part,
        embeddings,
        stream_key=(R.FOLDS, fold_idx),
    )
    return evaluate(params, model_cfg, test_part), history


def kfold_cv(
    train_cfg: TrainConfig,
    model_cfg: M.ModelConfig,
    dataset: EncodedDataset,
    embeddings: EmbeddingTable,
    k: int = 10,
    jobs: int = 1,
) -> CVResult:
    """Stratified k-fold CV: train on k-1 folds, evaluate on the held-out
    one, aggregate by the fold mean (sample stddev alongside).

    Fold assignment and each fold's training draw from streams derived
    only from (seed, fold index), so results are identical whether folds
    run sequentially or in parallel.
    """
    folds = stratified_folds(dataset.labels, k, R.stream(train_cfg.seed, R.FOLDS))
    work = [
        (i, fold, train_cfg, model_cfg, dataset, embeddings) for i, fold in enumerate(folds)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_fold, work))
    else:
        outcomes = [_run_fold(item) for item in work]
    fold_metrics = [m for m, _ in outcomes]
    histories = [h for _, h in outcomes]
    keys = fold_metrics[0].scalars().keys()
    values = {key: np.array([m.scalars()[key] for m in fold_metrics]) for key in keys}
    mean = {key: float(v.mean()) for key, v in values.items()}
    std = {key: float(v.std(ddof=1)) if k > 1 else 0.0 for key, v in values.items()}
    return CVResult(fold_metrics=fold_metrics, histories=histories, mean=mean, std=std)
