"""Moment propagation probes.

Sends a large sample through an untrained fully connected stack and
records each layer's activation mean and variance. With selu activations
and lecun_normal weights the moments should hug (0, 1) at every depth;
with relu/glorot or unnormalized inputs they drift. The fully connected
probe isolates the effect from pooling and convolution.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from scnn import tensor as T
from scnn.errors import ConfigError
from scnn.layers import ACTIVATIONS, DEFAULT_SELU, INITIALIZERS, DropoutSpec, alpha_dropout, standard_dropout
from scnn.tensor import Tensor

INPUT_DISTS = ("standard_normal", "scaled_normal")
_CHUNK = 10_000


def _zeros_init(fan_in, fan_out, rng, shape=None):
    shape = (fan_in, fan_out) if shape is None else shape
    return Tensor(np.zeros(shape), requires_grad=True)


# The zero-weight probe pins the degenerate fixed point (every layer emits
# exactly activation(0)); it exists for diagnostics only and is not a model
# initializer.
PROBE_INITS = dict(INITIALIZERS, zeros=_zeros_init)


@dataclass
class MomentReport:
    """Per-layer activation moments plus an echo of the probe setup."""

    depth: int
    width: int
    activation: str
    init: str
    dropout: DropoutSpec | None
    input_dist: str
    input_sigma: float
    n_samples: int
    means: np.ndarray  # (depth,), layer i stored at index i-1
    variances: np.ndarray  # (depth,)

    def label(self) -> str:
        tag = f"{self.activation}+{self.init}"
        if self.dropout is not None:
            tag += f"+{self.dropout.kind}_dropout{self.dropout.rate:g}"
        return tag

    def layer(self, index: int) -> tuple[float, float]:
        """(mean, variance) of layer `index`, layers counted from 1."""
        if not 1 <= index <= self.depth:
            raise ConfigError(f"layer index {index} outside [1, {self.depth}]")
        return float(self.means[index - 1]), float(self.variances[index - 1])

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "width": self.width,
            "activation": self.activation,
            "init": self.init,
            "dropout_kind": None if self.dropout is None else self.dropout.kind,
            "dropout_rate": None if self.dropout is None else self.dropout.rate,
            "input_dist": self.input_dist,
            "input_sigma": self.input_sigma,
            "n_samples": self.n_samples,
            "layers": [
                {"layer": i + 1, "mean": float(self.means[i]), "variance": float(self.variances[i])}
                for i in range(self.depth)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["layer", "mean", "variance"])
        for i in range(self.depth):
            writer.writerow([i + 1, repr(float(self.means[i])), repr(float(self.variances[i]))])
        return buf.getvalue()


def propagate(
    depth: int,
    width: int,
    activation: str,
    init: str,
    dropout: DropoutSpec | None = None,
    input_dist: str = "standard_normal",
    input_sigma: float = 1.0,
    n_samples: int = 10_000,
    rng: np.random.Generator | None = None,
) -> MomentReport:
    """Feed n_samples width-dimensional inputs through `depth` FC layers.

    Layer l computes act(x @ W_l) with zero bias; if `dropout` is given it
    runs in train mode after the activation, so its effect on the moments
    is part of what the probe measures. Inputs are N(0, sigma^2) i.i.d.
    Samples stream through in fixed-size chunks, so memory stays flat and
    the same seed always reproduces the same report.
    """
    if depth < 1:
        raise ConfigError(f"depth must be >= 1, got {depth}")
    if width < 8:
        raise ConfigError(f"width must be >= 8, got {width}")
    if n_samples < 10_000:
        raise ConfigError(f"n_samples must be >= 10000 for stable moments, got {n_samples}")
    if activation not in ACTIVATIONS:
        raise ConfigError(
            f"unknown activation {activation!r}; expected one of {sorted(ACTIVATIONS)}"
        )
    if init not in PROBE_INITS:
        raise ConfigError(f"unknown initializer {init!r}; expected one of {sorted(PROBE_INITS)}")
    if input_dist not in INPUT_DISTS:
        raise ConfigError(f"unknown input_dist {input_dist!r}; expected one of {INPUT_DISTS}")
    if input_dist == "standard_normal":
        input_sigma = 1.0
    elif input_sigma <= 0:
        raise ConfigError(f"input_sigma must be > 0, got {input_sigma}")
    if rng is None:
        raise ConfigError("propagate requires an explicit RNG for reproducibility")

    act = ACTIVATIONS[activation]
    weights = [PROBE_INITS[init](width, width, rng) for _ in range(depth)]
    total = np.zeros(depth)
    total_sq = np.zeros(depth)
    count = 0
    remaining = n_samples
    with T.no_grad():
        while remaining > 0:
            rows = min(_CHUNK, remaining)
            remaining -= rows
            x = Tensor(rng.standard_normal((rows, width)) * input_sigma)
            for layer in range(depth):
                x = act(T.matmul(x, weights[layer]))
                if dropout is not None:
                    if dropout.kind == "alpha":
                        x = alpha_dropout(x, dropout, DEFAULT_SELU, train=True, rng=rng)
                    else:
                        x = standard_dropout(x, dropout, train=True, rng=rng)
                total[layer] += x.data.sum()
                total_sq[layer] += np.square(x.data).sum()
            count += rows * width
    means = total / count
    variances = total_sq / count - means**2
    return MomentReport(
        depth=depth,
        width=width,
        activation=activation,
        init=init,
        dropout=dropout,
        input_dist=input_dist,
        input_sigma=input_sigma,
        n_samples=n_samples,
        means=means,
        variances=np.maximum(variances, 0.0),
    )


def compare(reports: Sequence[MomentReport]) -> list[dict]:
    """Side-by-side per-layer moment table.

    Rows are dicts keyed by "layer" plus "<label>.mean" and
    "<label>.variance" per report; with exactly two reports, difference
    columns (second minus first) are appended.
    """
    reports = list(reports)
    if len(reports) < 2:
        raise ConfigError(f"compare needs at least 2 reports, got {len(reports)}")
    depth = reports[0].depth
    for r in reports[1:]:
        if r.depth != depth:
            raise ConfigError(f"depth mismatch: {depth} vs {r.depth}")
    labels = [r.label() for r in reports]
    if len(set(labels)) != len(labels):
        labels = [f"{lab}#{i}" for i, lab in enumerate(labels)]
    rows = []
    for layer in range(1, depth + 1):
        row: dict = {"layer": layer}
        for label, report in zip(labels, reports):
            mean, var = report.layer(layer)
            row[f"{label}.mean"] = mean
            row[f"{label}.variance"] = var
        if len(reports) == 2:
            (m0, v0), (m1, v1) = reports[0].layer(layer), reports[1].layer(layer)
            row["mean_diff"] = m1 - m0
            row["variance_diff"] = v1 - v0
        rows.append(row)
    return rows


def comparison_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(
            {k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()}
        )
    return buf.getvalue()
