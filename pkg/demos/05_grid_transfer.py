"""Evaluating a trained model on inputs sampled at other resolutions.

The model is trained on a fixed 128-node grid, but at test time inputs may
arrive on coarser or finer grids.  Cubic interpolation onto the training
grid makes the model resolution-tolerant: accuracy plateaus once the
foreign grid resolves the input features, and degrades gracefully below
that.
"""

import numpy as np

from aenet.discretization import Grid1D, discretize, make_quadrature
from aenet.nn import TrainConfig
from aenet.pde_data import family_ic, make_dataset
from aenet.operators import predict_on_foreign_grid, train_aenet_stage2
from aenet.reduction import train_autoencoder

grid = Grid1D(0.0, 1.0, 128, "closed")
train, test = make_dataset("transport", 300, 50, seed=0,
                           grid_in=grid, grid_out=grid)
rule = make_quadrature(grid, "midpoint")
cfg = TrainConfig(epochs=150, learning_rate=1e-3, batch_size=64, seed=0)

ae, _ = train_autoencoder(train.inputs, 2, cfg, rule,
                          encoder_widths=(32,) * 4, decoder_widths=(32,) * 3)
model, _ = train_aenet_stage2(ae, train, TrainConfig(epochs=150, seed=1000),
                              rule, widths=(32,) * 3)

ics = [family_ic("transport", p) for p in test.params]
print("squared test error by input grid size (training grid: 128):")
for n in (16, 32, 64, 128, 256):
    foreign = Grid1D(0.0, 1.0, n, "closed")
    preds = np.stack([
        predict_on_foreign_grid(model, discretize(f, foreign)).values
        for f in ics
    ])
    err = float(np.mean((preds - test.clean_outputs) ** 2 @ rule.weights))
    print(f"  {n:4d} nodes: {err:.5f}")
print("\nonce the foreign grid resolves the bumps, interpolation onto the "
      "training grid recovers native accuracy")
