"""Three-linear-layer perceptron for eight-way credential classification.

Forward pass, backpropagation, and the decoupled-weight-decay Adam update are
written out explicitly in float64 numpy; no autograd. Training is
single-threaded over the batch loop so a (data, seed, config) triple fully
determines the run.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError
from .taxonomy import CredentialCategory, category_from_id

CHECKPOINT_MAGIC = b"CSFTMLP1"
CHECKPOINT_VERSION = 1

EPS_LOG = 1e-12  # numerical floor inside -log(p)


@dataclass(frozen=True)
class MlpArchitecture:
    input_dim: int = 768
    hidden1: int = 256
    hidden2: int = 64
    num_classes: int = 8
    dropout_rate: float = 0.2

    def __post_init__(self):
        for dim in (self.input_dim, self.hidden1, self.hidden2, self.num_classes):
            if dim < 1:
                raise DomainError(f"all layer dims must be positive, got {dim}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise DomainError(f"dropout_rate must be in [0,1): {self.dropout_rate}")


@dataclass(frozen=True)
class MlpParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        for name in TENSOR_NAMES:
            tensor = getattr(self, name)
            if not np.all(np.isfinite(tensor)):
                raise DomainError(f"parameter tensor {name} contains non-finite values")

    @property
    def architecture_dims(self) -> tuple[int, int, int, int]:
        return (self.W1.shape[1], self.W1.shape[0], self.W2.shape[0], self.W3.shape[0])

    @staticmethod
    def initialize(arch: MlpArchitecture, rng: np.random.Generator) -> "MlpParams":
        """He-uniform weights (bound sqrt(6/fan_in)) and zero biases."""
        def he(rows, cols):
            bound = np.sqrt(6.0 / cols)
            return rng.uniform(-bound, bound, size=(rows, cols))

        return MlpParams(
            W1=he(arch.hidden1, arch.input_dim),
            b1=np.zeros(arch.hidden1),
            W2=he(arch.hidden2, arch.hidden1),
            b2=np.zeros(arch.hidden2),
            W3=he(arch.num_classes, arch.hidden2),
            b3=np.zeros(arch.num_classes),
        )

    @staticmethod
    def zeros(arch: MlpArchitecture) -> "MlpParams":
        return MlpParams(
            W1=np.zeros((arch.hidden1, arch.input_dim)),
            b1=np.zeros(arch.hidden1),
            W2=np.zeros((arch.hidden2, arch.hidden1)),
            b2=np.zeros(arch.hidden2),
            W3=np.zeros((arch.num_classes, arch.hidden2)),
            b3=np.zeros(arch.num_classes),
        )


TENSOR_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")
_WEIGHT_NAMES = ("W1", "W2", "W3")  # decoupled decay applies to these only


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.01
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise DomainError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise DomainError("betas must lie in [0, 1)")
        if self.epsilon <= 0:
            raise DomainError("epsilon must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise DomainError("epochs must be >= 0 and batch_size >= 1")


# Hyperparameter bundles for the two supported embedding families.
PRESETS = {
    "bert-mlp": TrainConfig(learning_rate=1e-3, epochs=10),
    "gpt2-mlp": TrainConfig(learning_rate=1e-4, epochs=4),
}


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @staticmethod
    def zeros(params: MlpParams) -> "AdamState":
        m = {name: np.zeros_like(getattr(params, name)) for name in TENSOR_NAMES}
        v = {name: np.zeros_like(getattr(params, name)) for name in TENSOR_NAMES}
        return AdamState(m=m, v=v, t=0)


def forward(x: np.ndarray, params: MlpParams, *, mode: str = "infer",
            dropout_rate: float = 0.0,
            rng: np.random.Generator | None = None) -> tuple[np.ndarray, dict]:
    """Compute logits for one vector or a batch; returns a cache for backward.

    Inverted dropout: train mode scales kept units by 1/(1-p), so infer mode
    applies no dropout and no rescaling.
    """
    if mode not in ("train", "infer"):
        raise DomainError(f"mode must be 'train' or 'infer': {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.W1.shape[1]:
        raise DomainError(
            f"input dim {x.shape[-1]} does not match model input dim {params.W1.shape[1]}")

    use_dropout = mode == "train" and dropout_rate > 0.0
    if use_dropout and rng is None:
        raise DomainError("train-mode dropout requires a seeded generator")

    def make_mask(shape):
        if not use_dropout:
            return np.ones(shape)
        keep = rng.random(shape) >= dropout_rate
        return keep.astype(np.float64) / (1.0 - dropout_rate)

    z1 = x @ params.W1.T + params.b1
    a1 = np.maximum(z1, 0.0)
    m1 = make_mask(a1.shape)
    h1 = a1 * m1
    z2 = h1 @ params.W2.T + params.b2
    a2 = np.maximum(z2, 0.0)
    m2 = make_mask(a2.shape)
    h2 = a2 * m2
    logits = h2 @ params.W3.T + params.b3
    cache = {"x": x, "z1": z1, "m1": m1, "h1": h1, "z2": z2, "m2": m2, "h2": h2,
             "logits": logits, "mode": mode, "single": single}
    return (logits[0] if single else logits), cache


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax along the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def cross_entropy(probabilities: np.ndarray, label: int) -> float:
    """-log p(label) with a 1e-12 floor inside the log."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if not 0 <= label < probabilities.shape[-1]:
        raise DomainError(f"label {label} out of range for {probabilities.shape[-1]} classes")
    return float(-np.log(probabilities[label] + EPS_LOG))


def batch_cross_entropy(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Mean of the per-sample losses."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= probabilities.shape[-1]:
        raise DomainError("label out of range")
    picked = probabilities[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(picked + EPS_LOG)))


def backward(params: MlpParams, cache: dict,
             labels: np.ndarray | int) -> dict[str, np.ndarray]:
    """Exact analytic gradients of the mean batch cross-entropy.

    Takes the cache of a train-mode forward pass; dropout masks are re-applied
    exactly as sampled there.
    """
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    logits = cache["logits"]
    batch = logits.shape[0]
    if labels.shape[0] != batch:
        raise DomainError(f"{labels.shape[0]} labels for a batch of {batch}")
    probs = softmax(logits)
    onehot = np.zeros_like(probs)
    onehot[np.arange(batch), labels] = 1.0
    dz3 = (probs - onehot) / batch

    grads = {}
    grads["W3"] = dz3.T @ cache["h2"]
    grads["b3"] = dz3.sum(axis=0)
    dh2 = dz3 @ params.W3
    dz2 = dh2 * cache["m2"] * (cache["z2"] > 0.0)
    grads["W2"] = dz2.T @ cache["h1"]
    grads["b2"] = dz2.sum(axis=0)
    dh1 = dz2 @ params.W2
    dz1 = dh1 * cache["m1"] * (cache["z1"] > 0.0)
    grads["W1"] = dz1.T @ cache["x"]
    grads["b1"] = dz1.sum(axis=0)
    return grads


def adamw_step(params: MlpParams, grads: dict[str, np.ndarray], state: AdamState,
               config: TrainConfig) -> tuple[MlpParams, AdamState]:
    """One decoupled-weight-decay Adam update; decay touches weights, not biases."""
    t = state.t + 1
    new_m, new_v, updated = {}, {}, {}
    bias1 = 1.0 - config.beta1 ** t
    bias2 = 1.0 - config.beta2 ** t
    for name in TENSOR_NAMES:
        g = grads[name]
        theta = getattr(params, name)
        m = config.beta1 * state.m[name] + (1.0 - config.beta1) * g
        v = config.beta2 * state.v[name] + (1.0 - config.beta2) * g * g
        m_hat = m / bias1
        v_hat = v / bias2
        step = config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
        if name in _WEIGHT_NAMES and config.weight_decay:
            step = step + config.learning_rate * config.weight_decay * theta
        new_m[name] = m
        new_v[name] = v
        updated[name] = theta - step
    return MlpParams(**updated), AdamState(m=new_m, v=new_v, t=t)


def _evaluate(X: np.ndarray, y: np.ndarray, params: MlpParams) -> tuple[float, float]:
    logits, _ = forward(X, params, mode="infer")
    probs = softmax(logits)
    loss = batch_cross_entropy(probs, y)
    accuracy = float(np.mean(np.argmax(probs, axis=-1) == y))
    return loss, accuracy


def train(train_xy: tuple[np.ndarray, np.ndarray],
          valid_xy: tuple[np.ndarray, np.ndarray] | None,
          arch: MlpArchitecture,
          config: TrainConfig) -> tuple[MlpParams, list[dict]]:
    """Seeded mini-batch training; history holds per-epoch loss/accuracy."""
    X, y = train_xy
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DomainError("training set must contain at least one sample")
    if X.shape[1] != arch.input_dim:
        raise DomainError(f"embedding dim {X.shape[1]} != architecture input {arch.input_dim}")
    if y.shape[0] != X.shape[0]:
        raise DomainError("X and y length mismatch")

    rng = np.random.default_rng(config.seed)
    params = MlpParams.initialize(arch, rng)
    state = AdamState.zeros(params)
    history: list[dict] = []

    for epoch in range(config.epochs):
        order = rng.permutation(X.shape[0])
        for start in range(0, X.shape[0], config.batch_size):
            batch_idx = order[start:start + config.batch_size]
            _, cache = forward(X[batch_idx], params, mode="train",
                               dropout_rate=arch.dropout_rate, rng=rng)
            grads = backward(params, cache, y[batch_idx])
            params, state = adamw_step(params, grads, state, config)
        train_loss, train_acc = _evaluate(X, y, params)
        entry = {"epoch": epoch + 1, "train_loss": train_loss, "train_accuracy": train_acc}
        if valid_xy is not None and len(valid_xy[1]) > 0:
            valid_loss, valid_acc = _evaluate(
                np.asarray(valid_xy[0], dtype=np.float64),
                np.asarray(valid_xy[1], dtype=np.int64), params)
            entry["valid_loss"] = valid_loss
            entry["valid_accuracy"] = valid_acc
        history.append(entry)
    return params, history


def predict(x: np.ndarray, params: MlpParams) -> tuple[CredentialCategory, np.ndarray]:
    """Infer-mode argmax category; ties resolve to the lowest class id."""
    logits, _ = forward(x, params, mode="infer")
    probs = softmax(logits)
    return category_from_id(int(np.argmax(probs))), probs


def predict_batch(X: np.ndarray, params: MlpParams) -> tuple[np.ndarray, np.ndarray]:
    logits, _ = forward(np.atleast_2d(X), params, mode="infer")
    probs = softmax(logits)
    return np.argmax(probs, axis=-1), probs


def save_checkpoint(path: str | Path, params: MlpParams, arch: MlpArchitecture,
                    *, seed: int = 0, preset: str = "") -> None:
    """Versioned binary checkpoint; tensors as raw little-endian float64."""
    preset_bytes = preset.encode("utf-8")
    header = CHECKPOINT_MAGIC + struct.pack(
        "<IIIIIdQH",
        CHECKPOINT_VERSION,
        arch.input_dim, arch.hidden1, arch.hidden2, arch.num_classes,
        arch.dropout_rate, seed, len(preset_bytes))
    blob = bytearray(header + preset_bytes)
    for name in TENSOR_NAMES:
        blob += np.ascontiguousarray(getattr(params, name), dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path: str | Path) -> tuple[MlpParams, MlpArchitecture, dict]:
    blob = Path(path).read_bytes()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise ParseError(f"{path}: not a credsift checkpoint")
    fields = struct.unpack_from("<IIIIIdQH", blob, 8)
    version, input_dim, hidden1, hidden2, num_classes, dropout, seed, preset_len = fields
    if version != CHECKPOINT_VERSION:
        raise ParseError(f"{path}: unsupported checkpoint version {version}")
    pos = 8 + struct.calcsize("<IIIIIdQH")
    preset = blob[pos:pos + preset_len].decode("utf-8")
    pos += preset_len
    arch = MlpArchitecture(input_dim=input_dim, hidden1=hidden1, hidden2=hidden2,
                           num_classes=num_classes, dropout_rate=dropout)
    shapes = {
        "W1": (hidden1, input_dim), "b1": (hidden1,),
        "W2": (hidden2, hidden1), "b2": (hidden2,),
        "W3": (num_classes, hidden2), "b3": (num_classes,),
    }
    tensors = {}
    for name in TENSOR_NAMES:
        count = int(np.prod(shapes[name]))
        end = pos + 8 * count
        if end > len(blob):
            raise ParseError(f"{path}: truncated checkpoint")
        tensors[name] = np.frombuffer(blob[pos:end], dtype="<f8").reshape(shapes[name]).copy()
        pos = end
    if pos != len(blob):
        raise ParseError(f"{path}: trailing bytes in checkpoint")
    return MlpParams(**tensors), arch, {"seed": seed, "preset": preset}
