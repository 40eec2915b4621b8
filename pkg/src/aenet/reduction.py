"""Linear (PCA) and nonlinear (autoencoder) reduction of discretized inputs.

The autoencoder is the first training stage of the two-stage operator
estimator: it learns a low-dimensional latent representation of the input
functions, against which the linear PCA baseline is compared.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import nn
from .discretization import QuadratureRule, weighted_norm_of


@dataclass
class PCAModel:
    """Affine projection onto the top-d principal subspace of the data."""

    mean: np.ndarray
    components: np.ndarray  # (D, d), orthonormal columns
    eigenvalues: np.ndarray  # (d,), nonincreasing
    spectrum: np.ndarray = field(repr=False, default=None)  # all singular values

    @property
    def dim(self) -> int:
        return self.components.shape[1]


def fit_pca(data: np.ndarray, d: int) -> PCAModel:
    """Mean-centered SVD; eigenvalues are squared singular values / (n - 1).

    If the data rank falls below ``d`` the basis is padded with an
    orthonormal completion carrying zero eigenvalues, so decoding stays
    well defined for any requested dimension.
    """
    data = np.asarray(data, dtype=float)
    n, D = data.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 samples")
    if d > min(n, D):
        raise ValueError(f"d={d} exceeds min(n_samples, D)={min(n, D)}")
    mean = data.mean(axis=0)
    _, s, vt = np.linalg.svd(data - mean, full_matrices=False)
    eig = s ** 2 / (n - 1)
    rank = int(np.sum(s > s[0] * 1e-12)) if s.size else 0
    comps = vt[:d].T.copy()
    eig_d = eig[:d].copy()
    if rank < d:
        # orthonormal completion of the deficient directions
        q, _ = np.linalg.qr(np.eye(D) - vt[:rank].T @ vt[:rank])
        comps[:, rank:] = q[:, : d - rank]
        eig_d[rank:] = 0.0
    return PCAModel(mean, comps, eig_d, spectrum=s)


def pca_encode(m: PCAModel, u: np.ndarray) -> np.ndarray:
    return (np.asarray(u) - m.mean) @ m.components


def pca_decode(m: PCAModel, z: np.ndarray) -> np.ndarray:
    return m.mean + np.asarray(z) @ m.components.T


@dataclass
class AutoEncoder:
    """Encoder/decoder network pair with the input scale used in training."""

    encoder: nn.MLP
    decoder: nn.MLP
    input_scale: float = 1.0

    @property
    def latent_dim(self) -> int:
        return self.encoder.output_dim

    def encode(self, u: np.ndarray) -> np.ndarray:
        return nn.forward(self.encoder, np.asarray(u) / self.input_scale)

    def decode(self, z: np.ndarray) -> np.ndarray:
        return nn.forward(self.decoder, z) * self.input_scale

    def reconstruct(self, u: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(u))


DEFAULT_ENCODER_WIDTHS = (500, 500, 500, 500)
DEFAULT_DECODER_WIDTHS = (500, 500, 500)


def train_autoencoder(
    data: np.ndarray,
    d_ae: int,
    cfg: nn.TrainConfig,
    rule: QuadratureRule,
    encoder_widths: Sequence[int] = DEFAULT_ENCODER_WIDTHS,
    decoder_widths: Sequence[int] = DEFAULT_DECODER_WIDTHS,
):
    """Jointly train encoder and decoder on the weighted reconstruction loss.

    Data is scaled by its global max magnitude into [-1, 1] before
    training; the scale is stored on the returned model so encode/decode
    work in original units.  Returns (AutoEncoder, loss history).
    """
    data = np.asarray(data, dtype=float)
    D = data.shape[1]
    if d_ae < 1:
        raise ValueError("latent dimension must be >= 1")
    scale = float(np.max(np.abs(data))) or 1.0
    scaled = data / scale

    enc = nn.mlp_init([D, *encoder_widths, d_ae], seed=cfg.seed)
    dec = nn.mlp_init([d_ae, *decoder_widths, D], seed=cfg.seed + 1)
    (enc, dec), history = nn.train_composite(
        [enc, dec], scaled, scaled, cfg, weights=rule.weights
    )
    return AutoEncoder(enc, dec, scale), history


def projection_error(model, data: np.ndarray, rule: QuadratureRule) -> float:
    """Mean relative reconstruction error in the weighted norm.

    ``model`` is a PCAModel or AutoEncoder.  Zero-norm samples are
    excluded (with a warning) since their relative error is undefined.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if isinstance(model, PCAModel):
        recon = pca_decode(model, pca_encode(model, data))
    else:
        recon = model.reconstruct(data)
    norms = weighted_norm_of(data, rule.weights)
    keep = norms > 0
    if not np.all(keep):
        import warnings

        warnings.warn(f"excluding {int(np.sum(~keep))} zero-norm samples")
    err = weighted_norm_of(data - recon, rule.weights)
    return float(np.mean(err[keep] / norms[keep]))


def latent_features(ae: AutoEncoder, data: np.ndarray, params: list) -> np.ndarray:
    """Table (z_1 .. z_d, a, h) joining latent codes with intrinsic parameters."""
    z = np.atleast_2d(ae.encode(data))
    ah = np.array([(p.a, p.h) for p in params])
    return np.hstack([z, ah])


# ---------------------------------------------------------------------------
# persistence


def save_autoencoder(ae: AutoEncoder, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    nn.save_mlp(ae.encoder, d / "encoder.mlp")
    nn.save_mlp(ae.decoder, d / "decoder.mlp")
    (d / "meta.json").write_text(
        json.dumps({"latent_dim": ae.latent_dim, "input_scale": ae.input_scale})
    )


def load_autoencoder(directory) -> AutoEncoder:
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    return AutoEncoder(
        nn.load_mlp(d / "encoder.mlp"), nn.load_mlp(d / "decoder.mlp"), meta["input_scale"]
    )


def save_pca(m: PCAModel, path) -> None:
    np.savez(path, mean=m.mean, components=m.components,
             eigenvalues=m.eigenvalues, spectrum=m.spectrum)


def load_pca(path) -> PCAModel:
    with np.load(path) as z:
        return PCAModel(z["mean"], z["components"], z["eigenvalues"], z["spectrum"])
