"""The implicit-function network h: R^d -> R^l as plain weight/bias
arrays, with forward pass, input Jacobian, and text-file persistence.
Hidden layers use tanh; the output layer is linear."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ParseError

HIDDEN_DIMS = (36, 24, 18, 10)


@dataclass
class MlpModel:
    weights: list  # per-layer (out, in) matrices
    biases: list  # per-layer (out,) vectors

    @property
    def layer_dims(self):
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    def copy(self) -> "MlpModel":
        return MlpModel([W.copy() for W in self.weights], [b.copy() for b in self.biases])


def init_model(d: int, l: int, seed: int, hidden=HIDDEN_DIMS) -> MlpModel:
    """Seeded Glorot-uniform initialization: U(+-sqrt(6/(fan_in+fan_out)))."""
    rng = np.random.default_rng(seed)
    dims = [d, *hidden, l]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def _check_input(model: MlpModel, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != model.layer_dims[0]:
        raise ParameterError(
            f"input dimension {q.shape[-1]} != model input {model.layer_dims[0]}"
        )
    if not np.all(np.isfinite(q)):
        raise ParameterError("non-finite input")
    return q


def forward(model: MlpModel, q: np.ndarray) -> np.ndarray:
    return forward_batch(model, _check_input(model, q)[None, :])[0]


def forward_batch(model: MlpModel, Q: np.ndarray) -> np.ndarray:
    a = _check_input(model, Q)
    last = len(model.weights) - 1
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        a = a @ W.T + b
        if k != last:
            a = np.tanh(a)
    return a


def jacobian(model: MlpModel, q: np.ndarray) -> np.ndarray:
    return jacobian_batch(model, _check_input(model, q)[None, :])[0]


def jacobian_batch(model: MlpModel, Q: np.ndarray) -> np.ndarray:
    """Exact d h / d q per row, shape (N, l, d), via the chain rule
    J = W_L D_{L-1} W_{L-1} ... D_1 W_1 with D_k = diag(1 - a_k^2)."""
    a = _check_input(model, Q)
    last = len(model.weights) - 1
    J = None
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W.T + b
        if k != last:
            a = np.tanh(z)
            D = 1.0 - a * a  # (N, out)
            M = D[:, :, None] * W[None, :, :]  # (N, out, in)
        else:
            M = np.broadcast_to(W, (len(a), *W.shape))
        J = M if J is None else M @ J
    return J


def save_model(model: MlpModel, path: str) -> None:
    dims = ",".join(str(v) for v in model.layer_dims)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# ecomann dims={dims}\n")
        for W, b in zip(model.weights, model.biases):
            for row in W:
                f.write(",".join(f"{v:.17g}" for v in row) + "\n")
            f.write(",".join(f"{v:.17g}" for v in b) + "\n")


def load_model(path: str) -> MlpModel:
    with open(path, encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# ecomann dims="):
        raise ParseError("line 1: missing model header")
    try:
        dims = [int(v) for v in lines[0].split("dims=", 1)[1].split(",")]
    except ValueError as e:
        raise ParseError(f"line 1: bad dims ({e})") from e
    if len(dims) < 2:
        raise ParseError("line 1: need at least input and output dims")
    weights, biases = [], []
    pos = 1
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        need = fan_out + 1
        if pos + need > len(lines) + 1 and pos + need > len(lines):
            raise ParseError(f"truncated file: expected {need} rows at line {pos + 1}")
        block = lines[pos : pos + need]
        if len(block) != need:
            raise ParseError(f"truncated file: expected {need} rows at line {pos + 1}")
        try:
            rows = [[float(v) for v in ln.split(",")] for ln in block]
        except ValueError as e:
            raise ParseError(f"bad float near line {pos + 1} ({e})") from e
        W = np.array(rows[:-1])
        b = np.array(rows[-1])
        if W.shape != (fan_out, fan_in) or b.shape != (fan_out,):
            raise ParseError(f"layer shape mismatch near line {pos + 1}")
        weights.append(W)
        biases.append(b)
        pos += need
    if pos != len(lines):
        raise ParseError(f"trailing data at line {pos + 1}")
    return MlpModel(weights, biases)
