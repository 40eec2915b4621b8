"""Grids, quadrature-weighted norms, and when discrete norms can be trusted.

Discretizing a function keeps only its values on a grid.  Weighting the
Euclidean inner product with quadrature weights makes the discrete norm
track the continuum L2 norm -- provided the grid resolves the function
class.  This script shows the weights, the norm agreement, the sampling
condition that guarantees a two-sided norm equivalence, and a box-counting
estimate of the intrinsic dimension of a function family.
"""

import numpy as np

from aenet.discretization import (
    DiscreteFunction,
    Grid1D,
    box_counting_dimension,
    discretize,
    make_quadrature,
    verify_norm_equivalence,
    weighted_norm,
)
from aenet.pde_data import make_dataset

# --- quadrature weights integrate exactly what they should -----------------

grid = Grid1D(0.0, 1.0, 101, "closed")
for kind, order in [("trapezoid", "linear"), ("simpson", "cubic")]:
    rule = make_quadrature(grid, kind)
    x = grid.nodes()
    integral = float(rule.weights @ (x ** 3))
    print(f"{kind:9s} integral of x^3 on [0,1]: {integral:.15f}  "
          f"(exact for {order} integrands, true value 0.25)")

# --- the weighted norm approximates the L2 norm ----------------------------

f = lambda x: np.sqrt(2) * np.cos(2 * np.pi * x)  # unit L2 norm
pgrid = Grid1D(0.0, 1.0, 64, "periodic")
prule = make_quadrature(pgrid, "midpoint")
n = weighted_norm(discretize(f, pgrid), prule)
print(f"\nweighted norm of a unit-norm Fourier mode on 64 nodes: {n:.12f}")

# --- sampling condition for two-sided norm equivalence ---------------------

# For trigonometric polynomials of degree N with coefficients bounded by a,
# spacing below a*sqrt(2N+1) / (2*pi*a*N*(N+1)) guarantees
#   0.5 * ||u||_L2  <=  ||sampled u||_w  <=  2 * ||u||_L2.
N, a = 4, 1.0
dx_max = a * np.sqrt(2 * N + 1) / (2 * np.pi * a * N * (N + 1))
eq_grid = Grid1D(0.0, 1.0, int(np.ceil(1 / dx_max)), "periodic")
eq_rule = make_quadrature(eq_grid, "midpoint")


def sampler(rng):
    c = rng.uniform(-a, a, size=2 * N + 1)

    def u(x):
        out = np.full_like(np.asarray(x, dtype=float), c[0])
        for k in range(1, N + 1):
            out = out + np.sqrt(2) * (c[2 * k - 1] * np.cos(2 * np.pi * k * x)
                                      + c[2 * k] * np.sin(2 * np.pi * k * x))
        return out

    return u, float(np.linalg.norm(c))


report = verify_norm_equivalence(sampler, eq_grid, eq_rule, trials=1000, seed=0)
print(f"\nnorm equivalence at {eq_grid.n} nodes: "
      f"{report.violations} violations in {report.trials} trials, "
      f"ratio range [{report.min_ratio:.4f}, {report.max_ratio:.4f}]")

# --- intrinsic dimension of a two-parameter function family ----------------

train, _ = make_dataset("transport", 2000, 0, seed=0)
est = box_counting_dimension(train.inputs, np.geomspace(0.3, 3.0, 10))
print(f"\nbox-counting dimension of 2000 two-bump profiles in R^512: "
      f"{est:.2f}  (the family has 2 free parameters)")
