"""Operator estimators: latent-space two-stage model and the two baselines.

All three models map a discretized input function to a discretized output
function.  The two-stage model composes a frozen autoencoder encoder with
a trained latent-to-output network; the PCA baseline replaces the
nonlinear encoder/decoder with principal subspaces; the branch/trunk
baseline predicts each output node as an inner product of a network of
the input function and a network of the node coordinate.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import nn
from .discretization import (
    DiscreteFunction,
    Grid1D,
    GridMismatchError,
    QuadratureRule,
    interpolate,
    weighted_norm_of,
)
from .pde_data import FunctionPairDataset
from .reduction import (
    AutoEncoder,
    PCAModel,
    fit_pca,
    load_autoencoder,
    load_pca,
    pca_decode,
    pca_encode,
    save_autoencoder,
    save_pca,
)

DEFAULT_OPERATOR_WIDTHS = (500, 500, 500)


def _global_scale(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) or 1.0


@dataclass
class AENetModel:
    """Frozen encoder plus trained latent-to-output network."""

    autoencoder: AutoEncoder
    gamma: nn.MLP
    output_scale: float
    grid_in: Grid1D
    grid_out: Grid1D

    def predict_values(self, u: np.ndarray) -> np.ndarray:
        z = self.autoencoder.encode(np.asarray(u, dtype=float))
        return nn.forward(self.gamma, z) * self.output_scale

    def predict(self, u: DiscreteFunction) -> DiscreteFunction:
        if u.grid != self.grid_in:
            raise GridMismatchError(
                "input grid differs from the training grid; use predict_on_foreign_grid"
            )
        return DiscreteFunction(self.grid_out, self.predict_values(u.values))


def train_aenet_stage2(
    autoencoder: AutoEncoder,
    train: FunctionPairDataset,
    cfg: nn.TrainConfig,
    rule_out: QuadratureRule,
    widths: Sequence[int] = DEFAULT_OPERATOR_WIDTHS,
):
    """Fit the latent-to-output network on (encoded input, noisy output) pairs.

    The encoder is used only to produce latent codes; its parameters are
    never updated.  Returns (AENetModel, loss history).
    """
    if len(train) == 0:
        raise ValueError("empty training set")
    latents = np.atleast_2d(autoencoder.encode(train.inputs))
    out_scale = _global_scale(train.noisy_outputs)
    targets = train.noisy_outputs / out_scale
    gamma = nn.mlp_init(
        [autoencoder.latent_dim, *widths, train.noisy_outputs.shape[1]], seed=cfg.seed
    )
    gamma, history = nn.train(gamma, latents, targets, cfg, weights=rule_out.weights)
    model = AENetModel(autoencoder, gamma, out_scale, train.grid_in, train.grid_out)
    return model, history


@dataclass
class PCANetModel:
    """PCA input encoder, PCA output decoder, and a network in between."""

    input_pca: PCAModel
    output_pca: PCAModel
    core: nn.MLP
    input_scale: float
    output_scale: float
    grid_in: Grid1D
    grid_out: Grid1D

    def predict_values(self, u: np.ndarray) -> np.ndarray:
        z = pca_encode(self.input_pca, np.asarray(u, dtype=float) / self.input_scale)
        w = nn.forward(self.core, z)
        return pca_decode(self.output_pca, w) * self.output_scale

    def predict(self, u: DiscreteFunction) -> DiscreteFunction:
        if u.grid != self.grid_in:
            raise GridMismatchError(
                "input grid differs from the training grid; use predict_on_foreign_grid"
            )
        return DiscreteFunction(self.grid_out, self.predict_values(u.values))


def train_pcanet(
    train: FunctionPairDataset,
    d_in: int,
    cfg: nn.TrainConfig,
    d_out: int = 40,
    widths: Sequence[int] = DEFAULT_OPERATOR_WIDTHS,
):
    """Fit input/output principal subspaces and the latent-to-latent network.

    The output subspace is fit on the noisy training outputs (the only
    outputs available).  Returns (PCANetModel, loss history).
    """
    s_in = _global_scale(train.inputs)
    s_out = _global_scale(train.noisy_outputs)
    d_out = min(d_out, len(train), train.noisy_outputs.shape[1])
    input_pca = fit_pca(train.inputs / s_in, d_in)
    output_pca = fit_pca(train.noisy_outputs / s_out, d_out)
    z_in = pca_encode(input_pca, train.inputs / s_in)
    z_out = pca_encode(output_pca, train.noisy_outputs / s_out)
    core = nn.mlp_init([d_in, *widths, d_out], seed=cfg.seed)
    core, history = nn.train(core, z_in, z_out, cfg)
    model = PCANetModel(input_pca, output_pca, core, s_in, s_out,
                        train.grid_in, train.grid_out)
    return model, history


@dataclass
class DeepONetModel:
    """Unstacked branch/trunk operator network.

    Prediction at node y_j is sum_k branch_k(u) * trunk_k(y_j) + bias,
    with the trunk fed node coordinates scaled to [-1, 1].
    """

    branch: nn.MLP
    trunk: nn.MLP
    bias: float
    input_scale: float
    output_scale: float
    grid_in: Grid1D
    grid_out: Grid1D

    def _trunk_inputs(self) -> np.ndarray:
        y = self.grid_out.nodes()
        mid = 0.5 * (self.grid_out.x_lo + self.grid_out.x_hi)
        return ((y - mid) / (self.grid_out.length / 2)).reshape(-1, 1)

    def predict_values(self, u: np.ndarray) -> np.ndarray:
        single = np.ndim(u) == 1
        B = np.atleast_2d(nn.forward(self.branch, np.asarray(u, dtype=float) / self.input_scale))
        T = nn.forward(self.trunk, self._trunk_inputs())
        out = (B @ T.T + self.bias) * self.output_scale
        return out[0] if single else out

    def predict(self, u: DiscreteFunction) -> DiscreteFunction:
        if u.grid != self.grid_in:
            raise GridMismatchError(
                "input grid differs from the training grid; use predict_on_foreign_grid"
            )
        return DiscreteFunction(self.grid_out, self.predict_values(u.values))


def train_deeponet(
    train: FunctionPairDataset,
    p: int,
    cfg: nn.TrainConfig,
    widths: Sequence[int] = (100, 100, 100),
):
    """Jointly train branch and trunk with MSE over every (sample, node) pair.

    Mini-batches range over samples; each step evaluates the trunk at all
    output nodes, so the loss covers the full (sample, node) product.
    Returns (DeepONetModel, loss history).
    """
    s_in = _global_scale(train.inputs)
    s_out = _global_scale(train.noisy_outputs)
    X = train.inputs / s_in
    Y = train.noisy_outputs / s_out
    n, D_out = Y.shape

    branch = nn.mlp_init([X.shape[1], *widths, p], seed=cfg.seed)
    trunk = nn.mlp_init([1, *widths, p], seed=cfg.seed + 1)
    bias = np.zeros(1)
    mid = 0.5 * (train.grid_out.x_lo + train.grid_out.x_hi)
    ty = ((train.grid_out.nodes() - mid) / (train.grid_out.length / 2)).reshape(-1, 1)

    params = branch.params() + trunk.params() + [bias]
    state = nn.AdamState.for_params(params)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    history = []
    for epoch in range(cfg.epochs):
        losses = []
        order = shuffle_rng.permutation(n) if cfg.shuffle else np.arange(n)
        for s in range(0, n, cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            m = len(idx)
            B, b_acts = nn.forward_cached(branch, X[idx])
            T, t_acts = nn.forward_cached(trunk, ty)
            pred = B @ T.T + bias[0]
            resid = pred - Y[idx]
            loss = float(np.mean(resid * resid))
            if not np.isfinite(loss):
                raise nn.DivergenceError(f"non-finite loss at epoch {epoch}")
            G = 2.0 * resid / resid.size
            b_grads, _ = nn.backward(branch, b_acts, G @ T)
            t_grads, _ = nn.backward(trunk, t_acts, G.T @ B)
            grads = b_grads + t_grads + [np.array([G.sum()])]
            nn.adam_step(params, grads, state, cfg.learning_rate)
            losses.append(loss * m)
        history.append(float(np.sum(losses) / n))
    model = DeepONetModel(branch, trunk, float(bias[0]), s_in, s_out,
                          train.grid_in, train.grid_out)
    return model, history


def predict_aenet(m: AENetModel, u: DiscreteFunction) -> DiscreteFunction:
    """Apply the two-stage model to an input on the training grid."""
    if not isinstance(m, AENetModel):
        raise TypeError(f"expected AENetModel, got {type(m).__name__}")
    return m.predict(u)


def predict_pcanet(m: PCANetModel, u: DiscreteFunction) -> DiscreteFunction:
    """Apply the PCA-based model to an input on the training grid."""
    if not isinstance(m, PCANetModel):
        raise TypeError(f"expected PCANetModel, got {type(m).__name__}")
    return m.predict(u)


def predict_deeponet(m: DeepONetModel, u: DiscreteFunction) -> DiscreteFunction:
    """Apply the branch/trunk model to an input on the training grid."""
    if not isinstance(m, DeepONetModel):
        raise TypeError(f"expected DeepONetModel, got {type(m).__name__}")
    return m.predict(u)


# ---------------------------------------------------------------------------
# metrics


def _predictions_and_targets(model, test: FunctionPairDataset):
    pred = np.atleast_2d(model.predict_values(test.inputs))
    return pred, test.clean_outputs


def relative_test_error(model, test: FunctionPairDataset, rule_out: QuadratureRule) -> float:
    """Mean per-sample relative error in the weighted norm, as a percent."""
    pred, target = _predictions_and_targets(model, test)
    norms = weighted_norm_of(target, rule_out.weights)
    keep = norms > 0
    if not np.all(keep):
        warnings.warn(f"excluding {int(np.sum(~keep))} zero-norm targets")
    err = weighted_norm_of(pred - target, rule_out.weights)
    return float(100.0 * np.mean(err[keep] / norms[keep]))


def squared_generalization_error(model, test: FunctionPairDataset,
                                 rule_out: QuadratureRule) -> float:
    """Mean squared weighted distance between predictions and clean outputs."""
    pred, target = _predictions_and_targets(model, test)
    return float(np.mean(weighted_norm_of(pred - target, rule_out.weights) ** 2))


def predict_on_foreign_grid(
    model,
    u: DiscreteFunction,
    method: str = "cubic",
) -> DiscreteFunction:
    """Interpolate a foreign-grid input onto the training grid, then predict."""
    if u.grid != model.grid_in:
        u = interpolate(u, model.grid_in, method)
    return model.predict(u)


# ---------------------------------------------------------------------------
# model bundles

_MODEL_KINDS = {"AENetModel": AENetModel, "PCANetModel": PCANetModel,
                "DeepONetModel": DeepONetModel}


def _grid_meta(g: Grid1D) -> dict:
    return {"x_lo": g.x_lo, "x_hi": g.x_hi, "n": g.n, "topology": g.topology}


def _grid_from_meta(m: dict) -> Grid1D:
    return Grid1D(m["x_lo"], m["x_hi"], int(m["n"]), m["topology"])


def save_model(model, directory) -> None:
    """Persist any of the three model kinds as a directory bundle."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = {
        "kind": type(model).__name__,
        "grid_in": _grid_meta(model.grid_in),
        "grid_out": _grid_meta(model.grid_out),
    }
    if isinstance(model, AENetModel):
        save_autoencoder(model.autoencoder, d / "autoencoder")
        nn.save_mlp(model.gamma, d / "gamma.mlp")
        meta["output_scale"] = model.output_scale
    elif isinstance(model, PCANetModel):
        save_pca(model.input_pca, d / "input_pca.npz")
        save_pca(model.output_pca, d / "output_pca.npz")
        nn.save_mlp(model.core, d / "core.mlp")
        meta["input_scale"] = model.input_scale
        meta["output_scale"] = model.output_scale
    elif isinstance(model, DeepONetModel):
        nn.save_mlp(model.branch, d / "branch.mlp")
        nn.save_mlp(model.trunk, d / "trunk.mlp")
        meta["bias"] = model.bias
        meta["input_scale"] = model.input_scale
        meta["output_scale"] = model.output_scale
    else:
        raise TypeError(f"cannot persist {type(model).__name__}")
    (d / "meta.json").write_text(json.dumps(meta, indent=2))


def load_model(directory):
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    grid_in = _grid_from_meta(meta["grid_in"])
    grid_out = _grid_from_meta(meta["grid_out"])
    kind = meta["kind"]
    if kind == "AENetModel":
        return AENetModel(load_autoencoder(d / "autoencoder"), nn.load_mlp(d / "gamma.mlp"),
                          meta["output_scale"], grid_in, grid_out)
    if kind == "PCANetModel":
        return PCANetModel(load_pca(d / "input_pca.npz"), load_pca(d / "output_pca.npz"),
                           nn.load_mlp(d / "core.mlp"), meta["input_scale"],
                           meta["output_scale"], grid_in, grid_out)
    if kind == "DeepONetModel":
        return DeepONetModel(nn.load_mlp(d / "branch.mlp"), nn.load_mlp(d / "trunk.mlp"),
                             meta["bias"], meta["input_scale"], meta["output_scale"],
                             grid_in, grid_out)
    raise ValueError(f"unknown model kind {kind!r}")
