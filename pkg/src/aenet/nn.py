"""ReLU feedforward networks with hand-rolled reverse-mode gradients and Adam.

The networks alternate affine maps and ReLU, with an affine final layer.
Everything is plain numpy: parameters are lists of (W, b) pairs, batches
are (m, dim) arrays, and gradients are accumulated by explicit
backpropagation so they can be checked against finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass
class MLP:
    """Dense ReLU network; ``layers`` is a list of (W, b) with W shaped (out, in)."""

    layers: list

    def __post_init__(self):
        for i, (W, b) in enumerate(self.layers):
            if b.shape != (W.shape[0],):
                raise ValueError(f"layer {i}: bias shape {b.shape} vs W {W.shape}")
            if i > 0 and W.shape[1] != self.layers[i - 1][0].shape[0]:
                raise ValueError(f"layer {i}: input dim does not chain")

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def dims(self) -> list:
        return [self.input_dim] + [W.shape[0] for W, _ in self.layers]

    def params(self) -> list:
        """Flat list of parameter arrays (W1, b1, W2, b2, ...), shared storage."""
        out = []
        for W, b in self.layers:
            out.extend((W, b))
        return out

    def copy(self) -> "MLP":
        return MLP([(W.copy(), b.copy()) for W, b in self.layers])


def mlp_init(dims: Sequence[int], seed: int) -> MLP:
    """He-uniform initialization: W ~ U(+-sqrt(6/fan_in)), biases zero."""
    dims = list(dims)
    if len(dims) < 2 or any(d <= 0 for d in dims):
        raise ValueError(f"need at least two positive layer dims, got {dims}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / fan_in)
        W = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append((W, np.zeros(fan_out)))
    return MLP(layers)


def forward(net: MLP, x: np.ndarray) -> np.ndarray:
    """Apply the network to a single vector or a (m, input_dim) batch."""
    single = np.ndim(x) == 1
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.shape[1] != net.input_dim:
        raise ValueError(f"input dim {a.shape[1]} != network input {net.input_dim}")
    for W, b in net.layers[:-1]:
        a = np.maximum(a @ W.T + b, 0.0)
    W, b = net.layers[-1]
    a = a @ W.T + b
    return a[0] if single else a


def forward_cached(net: MLP, x: np.ndarray):
    """Batch forward pass keeping post-activation values for backprop."""
    a = np.atleast_2d(np.asarray(x, dtype=float))
    acts = [a]
    for W, b in net.layers[:-1]:
        a = np.maximum(a @ W.T + b, 0.0)
        acts.append(a)
    W, b = net.layers[-1]
    out = a @ W.T + b
    return out, acts


def backward(net: MLP, acts: list, grad_out: np.ndarray):
    """Backpropagate an upstream gradient through the network.

    Returns (param_grads, grad_input) where param_grads matches
    ``net.params()`` ordering.  ReLU uses the subgradient 0 at the kink.
    """
    grads = [None] * (2 * len(net.layers))
    g = grad_out
    for li in range(len(net.layers) - 1, -1, -1):
        W, _ = net.layers[li]
        a_in = acts[li]
        grads[2 * li] = g.T @ a_in
        grads[2 * li + 1] = g.sum(axis=0)
        g = g @ W
        if li > 0:
            g = g * (acts[li] > 0)
    return grads, g


def mse_and_grad(
    net: MLP,
    inputs: np.ndarray,
    targets: np.ndarray,
    sample_weights: Optional[np.ndarray] = None,
):
    """Weighted MSE loss and its parameter gradients.

    loss = (1/m) * sum_samples sum_coords w_c (pred - target)^2, with
    uniform unit weights this is output-summed MSE.
    """
    inputs = np.atleast_2d(inputs)
    targets = np.atleast_2d(targets)
    m = inputs.shape[0]
    if m == 0:
        raise ValueError("empty batch")
    pred, acts = forward_cached(net, inputs)
    resid = pred - targets
    if sample_weights is None:
        loss = float(np.sum(resid * resid) / m)
        grad_out = 2.0 * resid / m
    else:
        w = np.asarray(sample_weights, dtype=float)
        loss = float(np.sum(resid * resid @ w) / m)
        grad_out = 2.0 * resid * w / m
    grads, _ = backward(net, acts, grad_out)
    return loss, grads


@dataclass
class AdamState:
    """First/second moment buffers mirroring a parameter list."""

    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(params: list, grads: list, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


@dataclass
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 1e-3
    batch_size: int = 64
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 0 or self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError(f"bad training config: {self}")


class DivergenceError(RuntimeError):
    pass


def _minibatches(n: int, batch_size: int, rng, shuffle: bool):
    order = rng.permutation(n) if shuffle else np.arange(n)
    for s in range(0, n, batch_size):
        yield order[s : s + batch_size]


def train(
    net: MLP,
    inputs: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    weights: Optional[np.ndarray] = None,
):
    """Mini-batch Adam training; returns (net, per-epoch mean loss history).

    Mutates the given network.  Shuffling draws from a dedicated stream
    split off the config seed, so runs are reproducible bit for bit.
    """
    inputs = np.atleast_2d(inputs)
    targets = np.atleast_2d(targets)
    n = inputs.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    params = net.params()
    state = AdamState.for_params(params)
    history = []
    for epoch in range(cfg.epochs):
        losses = []
        for bi, idx in enumerate(_minibatches(n, cfg.batch_size, shuffle_rng, cfg.shuffle)):
            loss, grads = mse_and_grad(net, inputs[idx], targets[idx], weights)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {bi}"
                )
            adam_step(params, grads, state, cfg.learning_rate)
            losses.append(loss * len(idx))
        history.append(float(np.sum(losses) / n))
    return net, history


def train_composite(
    nets: Sequence[MLP],
    inputs: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    weights: Optional[np.ndarray] = None,
):
    """Train a chain of networks applied in sequence (e.g. encoder then decoder).

    Gradients flow through the whole composition; all networks' parameters
    are updated jointly.  Returns (nets, loss history).
    """
    inputs = np.atleast_2d(inputs)
    targets = np.atleast_2d(targets)
    n = inputs.shape[0]
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    params = [p for net in nets for p in net.params()]
    state = AdamState.for_params(params)
    history = []
    for epoch in range(cfg.epochs):
        losses = []
        for bi, idx in enumerate(_minibatches(n, cfg.batch_size, shuffle_rng, cfg.shuffle)):
            x = inputs[idx]
            caches = []
            for net in nets:
                x, acts = forward_cached(net, x)
                caches.append(acts)
            resid = x - targets[idx]
            m = len(idx)
            if weights is None:
                loss = float(np.sum(resid * resid) / m)
                g = 2.0 * resid / m
            else:
                w = np.asarray(weights, dtype=float)
                loss = float(np.sum(resid * resid @ w) / m)
                g = 2.0 * resid * w / m
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}, batch {bi}")
            grads = []
            for net, acts in zip(reversed(nets), reversed(caches)):
                pg, g = backward(net, acts, g)
                grads = pg + grads
            adam_step(params, grads, state, cfg.learning_rate)
            losses.append(loss * m)
        history.append(float(np.sum(losses) / n))
    return list(nets), history


@dataclass
class NetworkClassStats:
    """Size/magnitude statistics of a trained network.

    depth counts weight layers, width is the largest layer output,
    nonzero_params counts nonzero entries, max_abs_param is the largest
    parameter magnitude and sup_norm the largest output magnitude over a
    probe set.
    """

    depth: int
    width: int
    nonzero_params: int
    max_abs_param: float
    sup_norm: float


def network_class_stats(net: MLP, probe_inputs: np.ndarray) -> NetworkClassStats:
    probe_inputs = np.atleast_2d(probe_inputs)
    if probe_inputs.shape[0] == 0:
        raise ValueError("probe set must be non-empty")
    params = net.params()
    return NetworkClassStats(
        depth=len(net.layers),
        width=max(W.shape[0] for W, _ in net.layers),
        nonzero_params=int(sum(np.count_nonzero(p) for p in params)),
        max_abs_param=float(max(np.max(np.abs(p)) for p in params)),
        sup_norm=float(np.max(np.abs(forward(net, probe_inputs)))),
    )


# ---------------------------------------------------------------------------
# checkpoints

_MAGIC = b"MLPC"
_VERSION = 1


def save_mlp(net: MLP, path) -> None:
    """Versioned little-endian checkpoint: header, layer dims, W/b payload."""
    dims = net.dims
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        for W, b in net.layers:
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())


def load_mlp(path) -> MLP:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not an MLP checkpoint")
        version, ndims = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        dims = struct.unpack(f"<{ndims}I", fh.read(4 * ndims))
        layers = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            W = np.frombuffer(fh.read(8 * fan_in * fan_out), dtype="<f8")
            W = W.reshape(fan_out, fan_in).copy()
            b = np.frombuffer(fh.read(8 * fan_out), dtype="<f8").copy()
            layers.append((W, b))
    return MLP(layers)


def save_loss_history(history: Sequence[float], path) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(history):
            fh.write(f"{i},{loss!r}\n")
