"""Grids, quadrature-weighted inner products, interpolation and dimension diagnostics.

Functions are sampled pointwise on 1-D grids.  A quadrature rule attaches
positive weights to the grid nodes so that the weighted Euclidean inner
product approximates the continuum L2 inner product; all error metrics in
this package are computed in the induced weighted norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline


class GridMismatchError(ValueError):
    """Raised when two discrete functions (or a rule) live on different grids."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1-D grid on [x_lo, x_hi].

    ``closed`` grids include both endpoints (spacing (x_hi-x_lo)/(n-1));
    ``periodic`` grids are half-open [x_lo, x_hi) (spacing (x_hi-x_lo)/n).
    """

    x_lo: float
    x_hi: float
    n: int
    topology: str = "closed"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 nodes, got n={self.n}")
        if not self.x_hi > self.x_lo:
            raise ValueError(f"empty domain: [{self.x_lo}, {self.x_hi}]")
        if self.topology not in ("closed", "periodic"):
            raise ValueError(f"unknown topology {self.topology!r}")

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def spacing(self) -> float:
        if self.topology == "closed":
            return self.length / (self.n - 1)
        return self.length / self.n

    def nodes(self) -> np.ndarray:
        if self.topology == "closed":
            return np.linspace(self.x_lo, self.x_hi, self.n)
        return self.x_lo + self.spacing * np.arange(self.n)


@dataclass(frozen=True)
class QuadratureRule:
    """Positive node weights for a grid; defines the weighted inner product."""

    kind: str
    grid: Grid1D
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.n,):
            raise ValueError("weights must align with the grid nodes")
        if not np.all(w > 0):
            raise ValueError("quadrature weights must be strictly positive")
        if abs(w.sum() - self.grid.length) > 1e-12 * self.grid.length:
            raise ValueError("weights must sum to the domain length")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class DiscreteFunction:
    """A function sampled at the nodes of a Grid1D."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(
                f"values length {v.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("discrete function contains non-finite values")
        object.__setattr__(self, "values", v)


def discretize(f: Callable[[np.ndarray], np.ndarray], grid: Grid1D) -> DiscreteFunction:
    """Sample ``f`` pointwise at the grid nodes.

    ``f`` may be vectorized over numpy arrays or accept scalars.
    """
    x = grid.nodes()
    try:
        vals = np.asarray(f(x), dtype=float)
        if vals.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(f(xi)) for xi in x])
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise ValueError(f"f evaluated to a non-finite value at node x={x[bad[0]]}")
    return DiscreteFunction(grid, vals)


def make_quadrature(grid: Grid1D, kind: str = "midpoint") -> QuadratureRule:
    """Build midpoint, trapezoid or (composite) Simpson weights for a grid.

    Midpoint pairs with periodic grids (every node weight is the spacing);
    trapezoid and Simpson require closed topology, Simpson additionally an
    odd node count.
    """
    n, dx = grid.n, grid.spacing
    if kind == "midpoint":
        w = np.full(n, grid.length / n)
    elif kind == "trapezoid":
        if grid.topology != "closed":
            raise ValueError("trapezoid rule requires a closed grid")
        w = np.full(n, dx)
        w[0] = w[-1] = dx / 2
    elif kind == "simpson":
        if grid.topology != "closed":
            raise ValueError("simpson rule requires a closed grid")
        if n % 2 == 0:
            raise ValueError(f"simpson rule requires an odd node count, got n={n}")
        w = np.empty(n)
        w[0] = w[-1] = dx / 3
        w[1:-1:2] = 4 * dx / 3
        w[2:-1:2] = 2 * dx / 3
    else:
        raise ValueError(f"unknown quadrature kind {kind!r}")
    return QuadratureRule(kind, grid, w)


def _check_same_grid(*objs) -> Grid1D:
    grids = [o.grid for o in objs]
    g0 = grids[0]
    for g in grids[1:]:
        if g != g0:
            raise GridMismatchError(f"grid mismatch: {g0} vs {g}")
    return g0


def weighted_inner(u: DiscreteFunction, v: DiscreteFunction, rule: QuadratureRule) -> float:
    """Weighted inner product sum_i w_i u_i v_i (approximates the L2 product)."""
    _check_same_grid(u, v, rule)
    return float(np.dot(rule.weights, u.values * v.values))


def weighted_norm(u: DiscreteFunction, rule: QuadratureRule) -> float:
    return float(np.sqrt(weighted_inner(u, u, rule)))


def weighted_norm_of(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Row-wise weighted norm of a batch of value vectors (plumbing helper)."""
    values = np.atleast_2d(values)
    return np.sqrt((values * values) @ weights)


def interpolate(
    u: DiscreteFunction, target: Grid1D, method: str = "linear"
) -> DiscreteFunction:
    """Resample ``u`` onto ``target`` by piecewise-constant, linear or cubic rules.

    Periodic source grids wrap; closed grids clamp queries that fall at
    most one spacing beyond an endpoint and reject anything farther out.
    """
    src = u.grid
    x = src.nodes()
    y = u.values
    xt = target.nodes().copy()

    if src.topology == "periodic":
        xt = src.x_lo + np.mod(xt - src.x_lo, src.length)
        # wrap one period so every query sits inside a closed bracket
        x = np.concatenate([x, [src.x_lo + src.length]])
        y = np.concatenate([y, [u.values[0]]])
    else:
        dx = src.spacing
        if np.any(xt < src.x_lo - dx) or np.any(xt > src.x_hi + dx):
            raise ValueError("target node beyond the source domain by more than one spacing")
        xt = np.clip(xt, src.x_lo, src.x_hi)

    if method == "piecewise_constant":
        idx = np.clip(np.searchsorted(x, xt + 1e-12 * src.spacing) - 1, 0, len(x) - 1)
        vals = y[idx]
    elif method == "linear":
        vals = np.interp(xt, x, y)
    elif method == "cubic":
        bc = "periodic" if src.topology == "periodic" else "natural"
        vals = CubicSpline(x, y, bc_type=bc)(xt)
    else:
        raise ValueError(f"unknown interpolation method {method!r}")
    return DiscreteFunction(target, vals)


@dataclass
class NormEquivalenceReport:
    trials: int
    violations: int
    min_ratio: float
    max_ratio: float

    @property
    def worst_ratio(self) -> float:
        """The ratio farthest from 1 on a log scale."""
        if abs(np.log(self.max_ratio)) >= abs(np.log(self.min_ratio)):
            return self.max_ratio
        return self.min_ratio


def verify_norm_equivalence(
    sampler: Callable[[np.random.Generator], tuple],
    grid: Grid1D,
    rule: QuadratureRule,
    trials: int = 1000,
    seed: int = 0,
) -> NormEquivalenceReport:
    """Check 0.5*||u|| <= ||sampled u||_w <= 2*||u|| over random draws.

    ``sampler(rng)`` must return ``(f, l2_norm)`` where ``f`` is a callable
    and ``l2_norm`` its known continuum L2 norm.  Diagnostic: never raises
    on violations, only reports them.
    """
    rng = np.random.default_rng(seed)
    violations = 0
    ratios = np.empty(trials)
    for i in range(trials):
        f, cont_norm = sampler(rng)
        disc = weighted_norm(discretize(f, grid), rule)
        r = disc / cont_norm
        ratios[i] = r
        if not (0.5 <= r <= 2.0):
            violations += 1
    return NormEquivalenceReport(trials, violations, float(ratios.min()), float(ratios.max()))


def box_counting_dimension(points: np.ndarray, scales: Sequence[float]) -> float:
    """Box-counting (Minkowski) dimension estimate of a point cloud.

    Counts occupied axis-aligned boxes of side eps for each scale and
    returns the least-squares slope of log N(eps) against log(1/eps).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty (m, D) array")
    scales = np.asarray(scales, dtype=float)
    if len(scales) < 2 or np.ptp(scales) == 0:
        raise ValueError("need at least two distinct scales")
    if not np.all(scales > 0):
        raise ValueError("scales must be positive")

    lo = pts.min(axis=0)
    counts = []
    for eps in scales:
        cells = np.floor((pts - lo) / eps).astype(np.int64)
        counts.append(len(np.unique(cells, axis=0)))
    slope, _ = np.polyfit(np.log(1.0 / scales), np.log(counts), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# serialization

_TOPOLOGY_TAGS = {"closed": 0, "periodic": 1}
_TAG_TOPOLOGIES = {v: k for k, v in _TOPOLOGY_TAGS.items()}


def save_function(u: DiscreteFunction, path, fmt: str = "binary") -> None:
    """Write (grid descriptor, values) as flat binary or CSV."""
    g = u.grid
    if fmt == "binary":
        header = np.array(
            [g.x_lo, g.x_hi, float(g.n), float(_TOPOLOGY_TAGS[g.topology])], dtype="<f8"
        )
        with open(path, "wb") as fh:
            fh.write(header.tobytes())
            fh.write(u.values.astype("<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w") as fh:
            fh.write(f"# x_lo,x_hi,n,topology\n{g.x_lo!r},{g.x_hi!r},{g.n},{g.topology}\n")
            for v in u.values:
                fh.write(f"{float(v)!r}\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_function(path, fmt: str = "binary") -> DiscreteFunction:
    if fmt == "binary":
        with open(path, "rb") as fh:
            header = np.frombuffer(fh.read(32), dtype="<f8")
            x_lo, x_hi, n, tag = header
            grid = Grid1D(x_lo, x_hi, int(n), _TAG_TOPOLOGIES[int(tag)])
            values = np.frombuffer(fh.read(), dtype="<f8").copy()
        return DiscreteFunction(grid, values)
    if fmt == "csv":
        with open(path) as fh:
            fh.readline()
            x_lo, x_hi, n, topology = fh.readline().strip().split(",")
            grid = Grid1D(float(x_lo), float(x_hi), int(n), topology)
            values = np.array([float(line) for line in fh if line.strip()])
        return DiscreteFunction(grid, values)
    raise ValueError(f"unknown format {fmt!r}")
