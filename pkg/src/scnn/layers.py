"""Activations, weight initializers, and dropout variants.

Every function here accepts either a plain float/ndarray (returning an
ndarray) or a `Tensor` (returning a differentiable `Tensor` node), so the
same definitions serve both the training graph and the graph-free moment
probes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scnn.errors import ConfigError, ShapeError
from scnn.tensor import Tensor

# High-precision defaults; they round to the conventional 4-significant-figure
# values 1.6733 and 1.0507. The self-normalizing fixed point degrades if the
# constants are truncated.
SELU_ALPHA = 1.6732632423543772
SELU_LAMBDA = 1.0507009873554805


@dataclass(frozen=True)
class SeluConstants:
    """The (alpha, lambda) pair of the scaled exponential linear unit."""

    alpha: float = SELU_ALPHA
    lam: float = SELU_LAMBDA

    def __post_init__(self):
        if not (self.alpha > 0 and self.lam > 1):
            raise ConfigError(f"selu constants require alpha > 0 and lambda > 1, got {self}")

    @property
    def saturation(self) -> float:
        """Negative-limit value -lambda*alpha, the replacement used by alpha dropout."""
        return -self.lam * self.alpha


DEFAULT_SELU = SeluConstants()


@dataclass(frozen=True)
class DropoutSpec:
    """kind is "standard" (zeroing) or "alpha" (saturation-value replacement)."""

    kind: str
    rate: float

    def __post_init__(self):
        if self.kind not in ("standard", "alpha"):
            raise ConfigError(f"dropout kind must be 'standard' or 'alpha', got {self.kind!r}")
        if not 0.0 <= self.rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {self.rate}")


def _unary(x, fn, grad_fn, what):
    if isinstance(x, Tensor):
        out = Tensor._from_op(fn(x.data), (x,), what)
        if out.requires_grad:

            def backward():
                x._accum(grad_fn(x.data) * out.grad)

            out._backward = backward
        return out
    return fn(np.asarray(x, dtype=np.float64))


# -- activations ---------------------------------------------------------


def selu(x, consts: SeluConstants = DEFAULT_SELU):
    """lambda*x for x > 0, lambda*alpha*(e^x - 1) for x <= 0."""
    return _unary(
        x,
        lambda a: consts.lam * np.where(a > 0, a, consts.alpha * np.expm1(a)),
        lambda a: selu_grad(a, consts),
        "selu",
    )


def selu_grad(x: np.ndarray, consts: SeluConstants = DEFAULT_SELU) -> np.ndarray:
    """Derivative of selu: lambda for x > 0, lambda*alpha*e^x for x <= 0."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, consts.lam, consts.lam * consts.alpha * np.exp(np.minimum(x, 0.0)))


def elu(x, alpha: float = 1.0):
    """x for x > 0, alpha*(e^x - 1) for x <= 0."""
    if alpha <= 0:
        raise ConfigError(f"elu alpha must be positive, got {alpha}")
    return _unary(
        x,
        lambda a: np.where(a > 0, a, alpha * np.expm1(a)),
        lambda a: elu_grad(a, alpha),
        "elu",
    )


def elu_grad(x: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, 1.0, alpha * np.exp(np.minimum(x, 0.0)))


def relu(x):
    """max(x, 0)."""
    return _unary(x, lambda a: np.maximum(a, 0.0), relu_grad, "relu")


def relu_grad(x: np.ndarray) -> np.ndarray:
    return (np.asarray(x) > 0).astype(np.float64)


def sigmoid(x):
    """1/(1+e^-x), stable for large |x|."""
    return _unary(x, _sigmoid_arr, lambda a: _sigmoid_arr(a) * (1.0 - _sigmoid_arr(a)), "sigmoid")


def _sigmoid_arr(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def softmax(x):
    """Row-wise softmax over the last axis, computed with max-subtraction."""
    if isinstance(x, Tensor):
        y = _softmax_arr(x.data)
        out = Tensor._from_op(y, (x,), "softmax")
        if out.requires_grad:

            def backward():
                g = out.grad
                dot = np.sum(g * y, axis=-1, keepdims=True)
                x._accum(y * (g - dot))

            out._backward = backward
        return out
    return _softmax_arr(np.asarray(x, dtype=np.float64))


def _softmax_arr(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# -- initializers ----------------------------------------------------------


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator, shape=None) -> Tensor:
    """Uniform samples centered on 0 with stddev sqrt(2/(fan_in+fan_out)).

    The uniform bounds are +/- sqrt(6/(fan_in+fan_out)). `shape` defaults to
    (fan_in, fan_out) but may be overridden, e.g. (filters, h, d) for a
    convolution bank whose fan_in is h*d.
    """
    if fan_in < 1 or fan_out < 1:
        raise ConfigError(f"fan_in and fan_out must be >= 1, got {fan_in}, {fan_out}")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    shape = (fan_in, fan_out) if shape is None else shape
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True)


def lecun_normal(fan_in: int, fan_out: int, rng: np.random.Generator, shape=None) -> Tensor:
    """Normal samples with mean 0 and stddev sqrt(1/fan_in)."""
    if fan_in < 1:
        raise ConfigError(f"fan_in must be >= 1, got {fan_in}")
    shape = (fan_in, fan_out) if shape is None else shape
    return Tensor(rng.normal(0.0, np.sqrt(1.0 / fan_in), size=shape), requires_grad=True)


INITIALIZERS = {"glorot_uniform": glorot_uniform, "lecun_normal": lecun_normal}


# -- dropout ---------------------------------------------------------------


def standard_dropout(x, spec: DropoutSpec, train: bool, rng: np.random.Generator | None = None):
    """Zero each element with probability spec.rate; scale survivors by 1/(1-rate).

    Inverted scaling keeps the expectation unchanged, so evaluation mode is
    the identity.
    """
    if spec.kind != "standard":
        raise ConfigError(f"standard_dropout got a {spec.kind!r} spec")
    if not train or spec.rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("train-mode dropout requires an rng")
    shape = x.data.shape if isinstance(x, Tensor) else np.shape(x)
    keep = rng.random(shape) >= spec.rate
    scale = 1.0 / (1.0 - spec.rate)
    if isinstance(x, Tensor):
        out = Tensor._from_op(np.where(keep, x.data * scale, 0.0), (x,), "standard_dropout")
        if out.requires_grad:

            def backward():
                x._accum(np.where(keep, out.grad * scale, 0.0))

            out._backward = backward
        return out
    return np.where(keep, np.asarray(x, dtype=np.float64) * scale, 0.0)


def alpha_dropout(
    x,
    spec: DropoutSpec,
    consts: SeluConstants = DEFAULT_SELU,
    train: bool = True,
    rng: np.random.Generator | None = None,
):
    """Replace dropped elements with the selu saturation value a' = -lambda*alpha,
    then apply the affine correction y -> a*y + b with

        q = 1 - rate
        a = (q + a'^2 * q * (1 - q)) ** -0.5
        b = -a * (1 - q) * a'

    so a zero-mean unit-variance input keeps zero mean and unit variance.
    Evaluation mode is the identity.
    """
    if spec.kind != "alpha":
        raise ConfigError(f"alpha_dropout got a {spec.kind!r} spec")
    if not train or spec.rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("train-mode dropout requires an rng")
    ap = consts.saturation
    q = 1.0 - spec.rate
    a = (q + ap * ap * q * (1.0 - q)) ** -0.5
    b = -a * (1.0 - q) * ap
    shape = x.data.shape if isinstance(x, Tensor) else np.shape(x)
    keep = rng.random(shape) >= spec.rate
    if isinstance(x, Tensor):
        out = Tensor._from_op(a * np.where(keep, x.data, ap) + b, (x,), "alpha_dropout")
        if out.requires_grad:

            def backward():
                x._accum(np.where(keep, a * out.grad, 0.0))

            out._backward = backward
        return out
    return a * np.where(keep, np.asarray(x, dtype=np.float64), ap) + b


ACTIVATIONS = {"selu": selu, "elu": elu, "relu": relu}
ACTIVATION_GRADS = {"selu": selu_grad, "elu": elu_grad, "relu": relu_grad}
