"""Dense feed-forward networks with hand-written reverse-mode gradients.

Everything runs in float64 so that the analytic gradients can be checked
against central finite differences at tight tolerances.

Layout conventions
------------------
* A batch is a ``(rows, width)`` matrix.
* Layer ``i`` holds ``weights[i]`` of shape ``(width_{i+1}, width_i)`` and
  ``biases[i]`` of length ``width_{i+1}``; the layer computes ``x @ W.T + b``.
* Hidden layers use the activation listed for them; the last layer uses
  ``output_activation``.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import make_rng

HIDDEN_ACTIVATIONS = ("relu", "none")
OUTPUT_ACTIVATIONS = ("none", "sigmoid", "softmax")
LOSSES = ("mse", "bce", "cross_entropy")

BCE_CLAMP = 1e-12

_model_ids = itertools.count()


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    layer_widths: tuple[int, ...]
    activation: tuple[str, ...] | str = "relu"
    output_activation: str = "none"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 2:
            raise ValueError(f"model spec has fewer than 2 layers: {widths}")
        if any(w < 1 for w in widths):
            raise ValueError(f"layer widths must be >= 1, got {widths}")
        object.__setattr__(self, "layer_widths", widths)
        n_hidden = len(widths) - 2
        act = self.activation
        if isinstance(act, str):
            act = (act,) * n_hidden
        act = tuple(a.lower() for a in act)
        if len(act) != n_hidden:
            raise ValueError(f"need {n_hidden} hidden activations, got {len(act)}")
        bad = [a for a in act if a not in HIDDEN_ACTIVATIONS]
        if bad:
            raise ValueError(f"unknown hidden activation(s) {bad}")
        object.__setattr__(self, "activation", act)
        out = self.output_activation.lower()
        if out not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        object.__setattr__(self, "output_activation", out)

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def input_width(self) -> int:
        return self.layer_widths[0]

    @property
    def output_width(self) -> int:
        return self.layer_widths[-1]

    def layer_activation(self, i: int) -> str:
        return self.activation[i] if i < self.n_layers - 1 else self.output_activation

    def to_dict(self) -> dict:
        return {
            "layer_widths": list(self.layer_widths),
            "activation": list(self.activation),
            "output_activation": self.output_activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(tuple(d["layer_widths"]), tuple(d["activation"]), d["output_activation"])


@dataclass
class Model:
    spec: ModelSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    mode: str = "train"
    # bumped by every parameter update; tapes remember the value they saw
    version: int = 0
    uid: int = field(default_factory=lambda: next(_model_ids))

    def __post_init__(self):
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            n_in, n_out = self.spec.layer_widths[i], self.spec.layer_widths[i + 1]
            if w.shape != (n_out, n_in) or b.shape != (n_out,):
                raise ShapeError(f"layer {i}: expected W {(n_out, n_in)}, b {(n_out,)}; got {w.shape}, {b.shape}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)[0]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def train(self) -> "Model":
        self.mode = "train"
        return self

    def eval(self) -> "Model":
        self.mode = "eval"
        return self

    def copy(self) -> "Model":
        return Model(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.mode)

    def load_parameters(self, other: "Model") -> None:
        if other.spec != self.spec:
            raise ShapeError("cannot load parameters from a model with a different spec")
        for dst, src in zip(self.parameters(), other.parameters()):
            dst[...] = src
        self.version += 1

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for p in self.parameters():
            h.update(np.ascontiguousarray(p).tobytes())
        return h.hexdigest()


@dataclass
class Tape:
    model_uid: int
    model_version: int
    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    output: np.ndarray


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_gradient: np.ndarray

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


@dataclass(frozen=True)
class TrainHyper:
    batch_size: int = 64
    epochs: int = 30
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int | None = None  # overrides epochs when set
    min_iterations: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def n_iterations(self, n_rows: int) -> int:
        if self.iterations is not None:
            return self.iterations
        per_epoch = -(-n_rows // self.batch_size)
        return max(self.min_iterations, self.epochs * per_epoch)


def init_model(spec: ModelSpec, seed: int) -> Model:
    """Glorot-uniform weights, zero biases."""
    if not isinstance(spec, ModelSpec):
        spec = ModelSpec(*spec)
    rng = make_rng(seed, "init_model")
    weights, biases = [], []
    for n_in, n_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-limit, limit, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return Model(spec, weights, biases)


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        # split by sign to avoid overflow in exp
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if kind == "softmax":
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)
    return z


def forward(model: Model, batch: np.ndarray) -> tuple[np.ndarray, Tape]:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.spec.input_width:
        raise ShapeError(f"expected batch with {model.spec.input_width} columns, got shape {x.shape}")
    inputs, pres = [], []
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(x)
        z = x @ w.T + b
        pres.append(z)
        x = _activate(model.spec.layer_activation(i), z)
    return x, Tape(model.uid, model.version, inputs, pres, x)


def backward(model: Model, tape: Tape, upstream: np.ndarray) -> Gradients:
    """Propagate ``upstream`` = dL/d(output) back through the recorded pass."""
    if tape.model_uid != model.uid or tape.model_version != model.version:
        raise ShapeError("tape was recorded on a different model or before a parameter update")
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != tape.output.shape:
        raise ShapeError(f"upstream shape {g.shape} does not match output shape {tape.output.shape}")
    n = model.spec.n_layers
    gw: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for i in reversed(range(n)):
        kind = model.spec.layer_activation(i)
        z = tape.pre_activations[i]
        if kind == "relu":
            g = g * (z > 0)
        elif kind == "sigmoid":
            s = tape.output if i == n - 1 else _activate("sigmoid", z)
            g = g * s * (1.0 - s)
        elif kind == "softmax":
            s = tape.output
            g = s * (g - np.sum(g * s, axis=1, keepdims=True))
        gw[i] = g.T @ tape.inputs[i]
        gb[i] = g.sum(axis=0)
        g = g @ model.weights[i]
    return Gradients(gw, gb, g)


def loss_eval(kind: str, prediction: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Batch-mean loss and its gradient with respect to ``prediction``.

    ``mse`` is the squared L2 distance per row averaged over rows, the form
    used to fit inversion networks.  ``bce`` expects probabilities and clamps
    them to ``[1e-12, 1 - 1e-12]``.  ``cross_entropy`` expects softmax
    probabilities and one-hot targets.
    """
    p = np.asarray(prediction, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"prediction shape {p.shape} != target shape {t.shape}")
    m = p.shape[0] if p.ndim else 1
    if kind == "mse":
        d = p - t
        return float(np.sum(d * d) / m), 2.0 * d / m
    if kind == "bce":
        if np.any((p < 0.0) | (p > 1.0)) or np.any(np.isnan(p)):
            raise ValueError("binary cross-entropy needs predictions inside (0, 1)")
        q = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
        value = -np.sum(t * np.log(q) + (1.0 - t) * np.log1p(-q)) / m
        grad = (q - t) / (q * (1.0 - q)) / m
        return float(value), grad
    if kind == "cross_entropy":
        q = np.clip(p, BCE_CLAMP, None)
        return float(-np.sum(t * np.log(q)) / m), -t / q / m
    raise ValueError(f"unknown loss {kind!r}")


class SGD:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, model: Model, grads: Gradients) -> None:
        _check_grads(model, grads)
        if self.learning_rate != 0.0:
            for p, g in zip(model.parameters(), grads.parameters()):
                p -= self.learning_rate * g
        model.version += 1


class Adam:
    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def step(self, model: Model, grads: Gradients) -> None:
        _check_grads(model, grads)
        params = model.parameters()
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.learning_rate * np.sqrt(1.0 - b2**self.t) / (1.0 - b1**self.t)
        for p, g, m, v in zip(params, grads.parameters(), self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            if self.learning_rate != 0.0:
                # eps is scaled to keep the textbook form eps / (1 - b2^t)^(1/2)
                p -= lr_t * m / (np.sqrt(v) + self.eps * np.sqrt(1.0 - b2**self.t))
        model.version += 1


def _check_grads(model: Model, grads: Gradients) -> None:
    for p, g in zip(model.parameters(), grads.parameters()):
        if p.shape != g.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
    if len(grads.weights) != model.spec.n_layers:
        raise ShapeError("gradient layer count does not match model")


def make_optimizer(hyper: TrainHyper):
    if hyper.optimizer == "sgd":
        return SGD(hyper.learning_rate)
    return Adam(hyper.learning_rate, hyper.beta1, hyper.beta2, hyper.eps)


def minibatches(n_rows: int, batch_size: int, n_iterations: int, rng: np.random.Generator):
    """Yield index arrays: shuffled passes over ``range(n_rows)``, cut to ``n_iterations`` batches."""
    done = 0
    while done < n_iterations:
        order = rng.permutation(n_rows)
        for start in range(0, n_rows, batch_size):
            if done == n_iterations:
                return
            yield order[start : start + batch_size]
            done += 1


def fit(model: Model, inputs: np.ndarray, targets: np.ndarray, loss: str, hyper: TrainHyper, seed: int) -> list[float]:
    """Plain supervised minibatch training; returns the per-iteration loss."""
    if len(inputs) == 0:
        raise ValueError("empty training pairs")
    if len(inputs) != len(targets):
        raise ShapeError("inputs and targets have different row counts")
    opt = make_optimizer(hyper)
    rng = make_rng(seed, "fit")
    history = []
    model.train()
    for idx in minibatches(len(inputs), hyper.batch_size, hyper.n_iterations(len(inputs)), rng):
        out, tape = forward(model, inputs[idx])
        value, grad = loss_eval(loss, out, targets[idx])
        opt.step(model, backward(model, tape, grad))
        history.append(value)
    model.eval()
    return history


def predict(model: Model, x: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """Forward in fixed chunks; row results do not depend on the chunk size."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        return np.zeros((0, model.spec.output_width))
    return np.concatenate([forward(model, x[i : i + chunk])[0] for i in range(0, len(x), chunk)])


def mlp_spec(input_width: int, hidden: Sequence[int], output_width: int, output_activation: str = "none") -> ModelSpec:
    return ModelSpec((input_width, *hidden, output_width), "relu", output_activation)
