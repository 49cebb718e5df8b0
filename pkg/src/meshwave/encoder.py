"""Stacked denoising autoencoder for compressing embedding rows.

The encoder half maps an input row through successively narrower
arctan-activated layers down to a small code; the decoder mirrors the
layer sizes back up (weights untied) and ends in a linear reconstruction
layer.  Training is plain full-batch gradient descent on

    mean squared reconstruction error (against the uncorrupted input)
  + weight_decay * sum of squared weights (every layer)
  + sparsity_weight * sum of KL(rho || rho_hat) over encoder-side units,

where rho_hat rescales the arctan activations into (0, 1) via
a/pi + 1/2 and averages over the batch.  Inputs are corrupted by
Bernoulli masking noise, resampled every epoch.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

_MAGIC = b"SDAE\0"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SdaeConfig:
    """Architecture and training knobs.

    ``layer_sizes`` lists the encoder stack including the input width,
    e.g. [400, 500, 64, 21, 7]; the decoder mirrors it automatically.
    """

    layer_sizes: tuple[int, ...] = (400, 500, 64, 21, 7)
    rho: float = 0.001
    sparsity_weight: float = 0.1
    weight_decay: float = 0.00055
    corruption: float = 0.20
    corruption_mode: str = "mask"
    learning_rate: float = 0.01
    epochs: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if len(self.layer_sizes) < 2:
            raise ValueError("need an input width and at least one hidden layer")
        if min(self.layer_sizes) < 1:
            raise ValueError("layer sizes must be positive")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if not 0.0 <= self.corruption < 1.0:
            raise ValueError("corruption must lie in [0, 1)")
        if self.corruption_mode not in ("mask", "column"):
            raise ValueError("corruption_mode must be 'mask' or 'column'")
        if self.sparsity_weight < 0 or self.weight_decay < 0:
            raise ValueError("penalty weights must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    @property
    def chain(self) -> tuple[int, ...]:
        """Layer widths of the full encoder+decoder chain."""
        return self.layer_sizes + tuple(reversed(self.layer_sizes[:-1]))

    @property
    def n_encoder_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def code_size(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class SdaeParams:
    """Weights and biases of the full chain; layer l maps dims[l] -> dims[l+1]."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("weights/biases length mismatch")
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError("inconsistent layer shapes")

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def code_layer(self) -> int:
        # the chain is an encoder mirrored by a decoder
        return len(self.weights) // 2

    def copy(self) -> "SdaeParams":
        return SdaeParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class FeatureMatrix:
    """Rows of per-window features (codes or any other representation)."""

    features: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("feature matrix contains non-finite values")

    @property
    def n_windows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass
class TrainResult:
    params: SdaeParams
    trajectory: np.ndarray = field(default_factory=lambda: np.zeros(0))


def init_params(config: SdaeConfig, rng: np.random.Generator) -> SdaeParams:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    chain = config.chain
    weights, biases = [], []
    for n_in, n_out in zip(chain[:-1], chain[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return SdaeParams(weights, biases)


def forward(params: SdaeParams, x: np.ndarray) -> list[np.ndarray]:
    """Activations [a_0 .. a_P]; arctan everywhere except the last layer."""
    acts, _ = _forward_full(params, x)
    return acts


def _forward_full(params: SdaeParams, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    a = np.asarray(x, dtype=float)
    if a.ndim != 2:
        raise ValueError("input must be 2-D (rows x features)")
    acts = [a]
    preacts = []
    last = params.n_layers - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = acts[-1] @ w + b
        preacts.append(z)
        acts.append(z if l == last else np.arctan(z))
    return acts, preacts


def corrupt(x: np.ndarray, level: float, rng: np.random.Generator, mode: str = "mask") -> np.ndarray:
    """Zero out entries (mode='mask') or whole columns (mode='column')."""
    x = np.asarray(x, dtype=float)
    if level == 0.0:
        return x.copy()
    if mode == "mask":
        keep = rng.random(x.shape) >= level
        return x * keep
    if mode == "column":
        keep = rng.random(x.shape[1]) >= level
        return x * keep[None, :]
    raise ValueError(f"unknown corruption mode {mode!r}")


def _mean_activation(a: np.ndarray) -> np.ndarray:
    """Batch-mean activation rescaled from (-pi/2, pi/2) into (0, 1)."""
    rho_hat = (a / np.pi + 0.5).mean(axis=0)
    # saturated units would push the KL term to infinity
    return np.clip(rho_hat, 1e-12, 1.0 - 1e-12)


def loss_terms(
    params: SdaeParams, x_in: np.ndarray, x_target: np.ndarray, config: SdaeConfig
) -> tuple[float, float, float]:
    """(reconstruction MSE, weight penalty, sparsity penalty) — pre-weighting
    by nothing: each term already carries its coefficient."""
    acts, _ = _forward_full(params, x_in)
    recon = acts[-1]
    mse = float(np.mean((recon - x_target) ** 2))
    weight_pen = config.weight_decay * float(sum(np.sum(w**2) for w in params.weights))
    rho = config.rho
    kl_total = 0.0
    for l in range(1, params.code_layer + 1):
        rho_hat = _mean_activation(acts[l])
        kl_total += float(
            np.sum(rho * np.log(rho / rho_hat) + (1 - rho) * np.log((1 - rho) / (1 - rho_hat)))
        )
    return mse, weight_pen, config.sparsity_weight * kl_total


def loss(params: SdaeParams, x_in: np.ndarray, x_target: np.ndarray, config: SdaeConfig) -> float:
    mse, weight_pen, sparsity_pen = loss_terms(params, x_in, x_target, config)
    return mse + weight_pen + sparsity_pen


def grad(
    params: SdaeParams, x_in: np.ndarray, x_target: np.ndarray, config: SdaeConfig
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Exact gradients of :func:`loss` w.r.t. every weight and bias."""
    acts, preacts = _forward_full(params, x_in)
    batch, n_out = acts[-1].shape
    n_layers = params.n_layers
    code_layer = params.code_layer
    rho = config.rho

    grad_w = [np.zeros_like(w) for w in params.weights]
    grad_b = [np.zeros_like(b) for b in params.biases]

    # linear output layer
    delta = 2.0 / (batch * n_out) * (acts[-1] - x_target)
    grad_w[-1] = acts[-2].T @ delta + 2.0 * config.weight_decay * params.weights[-1]
    grad_b[-1] = delta.sum(axis=0)

    for l in range(n_layers - 1, 0, -1):  # hidden layers, chain index l maps acts[l-1]->acts[l]
        upstream = delta @ params.weights[l].T
        if 1 <= l <= code_layer and config.sparsity_weight > 0:
            rho_hat = _mean_activation(acts[l])
            kl_slope = -rho / rho_hat + (1 - rho) / (1 - rho_hat)
            upstream = upstream + config.sparsity_weight * kl_slope[None, :] / (np.pi * batch)
        delta = upstream / (1.0 + preacts[l - 1] ** 2)
        grad_w[l - 1] = acts[l - 1].T @ delta + 2.0 * config.weight_decay * params.weights[l - 1]
        grad_b[l - 1] = delta.sum(axis=0)
    return grad_w, grad_b


def train(x: np.ndarray, config: SdaeConfig, seed: int | np.random.SeedSequence = 0) -> TrainResult:
    """Full-batch gradient descent; returns params plus the per-epoch
    objective evaluated on the uncorrupted input."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("training input must be 2-D")
    if x.shape[1] != config.layer_sizes[0]:
        raise ValueError(
            f"input width {x.shape[1]} does not match layer_sizes[0]={config.layer_sizes[0]}"
        )
    rng = np.random.default_rng(seed)
    params = init_params(config, rng)
    lr = config.learning_rate
    trajectory = np.zeros(config.epochs)
    for epoch in range(config.epochs):
        noisy = corrupt(x, config.corruption, rng, config.corruption_mode)
        grad_w, grad_b = grad(params, noisy, x, config)
        for l in range(params.n_layers):
            params.weights[l] -= lr * grad_w[l]
            params.biases[l] -= lr * grad_b[l]
        trajectory[epoch] = loss(params, x, x, config)
    return TrainResult(params, trajectory)


def encode_features(params: SdaeParams, x: np.ndarray) -> FeatureMatrix:
    """Clean forward pass truncated at the bottleneck."""
    acts = forward(params, np.asarray(x, dtype=float))
    return FeatureMatrix(acts[params.code_layer])


def concat_features(parts: list[FeatureMatrix]) -> FeatureMatrix:
    """Column-wise fusion of per-band feature matrices."""
    if not parts:
        raise ValueError("nothing to concatenate")
    rows = {p.n_windows for p in parts}
    if len(rows) != 1:
        raise ValueError(f"row counts differ: {sorted(rows)}")
    return FeatureMatrix(np.hstack([p.features for p in parts]))


def save_params(path, params: SdaeParams) -> None:
    """Binary dump: magic, format version, layer dims, then per layer the
    row-major float64 weight matrix followed by its bias vector."""
    dims = params.dims
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _FORMAT_VERSION))
        fh.write(struct.pack("<i", len(dims)))
        fh.write(struct.pack(f"<{len(dims)}i", *dims))
        for w, b in zip(params.weights, params.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_params(path) -> SdaeParams:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a saved autoencoder parameter file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        (n_dims,) = struct.unpack("<i", fh.read(4))
        if n_dims < 2:
            raise ValueError(f"{path}: corrupt header")
        dims = struct.unpack(f"<{n_dims}i", fh.read(4 * n_dims))
        weights, biases = [], []
        for n_in, n_out in zip(dims[:-1], dims[1:]):
            w = np.frombuffer(fh.read(8 * n_in * n_out), dtype="<f8").reshape(n_in, n_out)
            b = np.frombuffer(fh.read(8 * n_out), dtype="<f8")
            weights.append(w.astype(float))
            biases.append(b.astype(float))
    return SdaeParams(weights, biases)
