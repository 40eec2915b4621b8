"""The three PDE families behind the datasets.

Transport is solved exactly by shifting the initial profile.  Viscous
Burgers' and KdV are integrated pseudo-spectrally with a fourth-order
exponential time-differencing Runge-Kutta scheme.  The script draws one
input/output pair per family and writes a figure.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from aenet.discretization import Grid1D, discretize
from aenet.pde_data import (
    DEFAULT_GRIDS,
    IntrinsicParams,
    burgers_field_pair,
    burgers_ic,
    kdv_ic,
    solve_burgers,
    solve_kdv,
    solve_transport,
    transport_ic,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

fig, axes = plt.subplots(1, 3, figsize=(13, 3.5))

# transport: two triangular bumps shifted right by t = 0.3
grid_in, grid_out = DEFAULT_GRIDS["transport"]
p = IntrinsicParams("transport", 3.0, 0.5)
g = transport_ic(p)
u = solve_transport(g, grid_out, t=0.3)
axes[0].plot(grid_in.nodes(), g(grid_in.nodes()), label="initial")
axes[0].plot(grid_out.nodes(), u.values, label="t = 0.3")
axes[0].set_title("transport (exact shift)")
print(f"transport: bumps of height {p.a} and 2.5 moved right by 0.3")

# Burgers': a Gaussian-random-field profile steepens and dissipates
grid_in, grid_out = DEFAULT_GRIDS["burgers"]
w0, w1 = burgers_field_pair(grid_in)
pb = IntrinsicParams("burgers", 0.5, 0.3)
gb = discretize(burgers_ic(pb, w0, w1), grid_in)
ub = solve_burgers(gb)
axes[1].plot(grid_in.nodes(), gb.values, label="initial")
axes[1].plot(grid_out.nodes(), ub.values, label="t = 1")
axes[1].set_title("viscous Burgers'")
print(f"burgers: energy {np.sum(gb.values**2):.1f} -> {np.sum(ub.values**2):.1f} "
      "(viscous decay)")

# KdV: two solitary waves, the taller one catching up
grid_in, grid_out = DEFAULT_GRIDS["kdv"]
pk = IntrinsicParams("kdv", 12.0, 1.0)
gk = discretize(kdv_ic(pk), grid_in)
uk = solve_kdv(gk, dt=1e-6)
axes[2].plot(grid_in.nodes(), gk.values, label="initial")
axes[2].plot(grid_out.nodes(), uk.values, label="t = 0.01")
axes[2].set_title("KdV")
mass_drift = abs(uk.values.mean() - gk.values.mean())
print(f"kdv: mean (conserved mass) drift {mass_drift:.2e}")

for ax in axes:
    ax.legend()
    ax.set_xlabel("x")
fig.tight_layout()
path = out_dir / "pde_families.svg"
fig.savefig(path)
print(f"wrote {path}")
