"""Initial-condition families, spectral PDE solvers and dataset assembly.

Three function-to-function problems are covered: a linear transport
equation solved exactly by shifting, and the viscous Burgers' and KdV
equations integrated in Fourier space with ETDRK4.  Each input family is
parameterized by two scalars (a, h), so the inputs form a 2-parameter
manifold inside the discretized function space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .discretization import DiscreteFunction, Grid1D, discretize

HAT_WIDTH = 0.05

PARAM_RANGES = {
    "transport": ((1.0, 4.0), (0.0, 1.0)),
    "burgers": ((-0.9, 0.9), (0.0, 1.0)),
    "kdv": ((6.0, 18.0), (0.0, 3.0)),
}


@dataclass(frozen=True)
class IntrinsicParams:
    """The two latent parameters (a, h) of one input-family member."""

    family: str
    a: float
    h: float

    def __post_init__(self):
        if self.family not in PARAM_RANGES:
            raise ValueError(f"unknown family {self.family!r}")
        (a_lo, a_hi), (h_lo, h_hi) = PARAM_RANGES[self.family]
        if not (a_lo <= self.a <= a_hi):
            raise ValueError(f"{self.family}: a={self.a} outside [{a_lo}, {a_hi}]")
        if not (h_lo <= self.h <= h_hi):
            raise ValueError(f"{self.family}: h={self.h} outside [{h_lo}, {h_hi}]")


def hat(alpha: float, t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Triangular bump of height alpha supported on [t, t + 0.05]."""

    def f(x):
        x = np.asarray(x, dtype=float)
        relu = lambda y: np.maximum(y, 0.0)
        v = (2 * alpha / HAT_WIDTH) * (
            relu(x - t) - 2 * relu(x - t - HAT_WIDTH / 2) + relu(x - t - HAT_WIDTH)
        )
        # the hat cancels three ramps; clamp residual rounding noise at the feet
        return np.maximum(v, 0.0)

    return f


def transport_ic(p: IntrinsicParams) -> Callable[[np.ndarray], np.ndarray]:
    """Two-bump profile: height-a bump at 0.1 plus height-2.5 bump at 0.2 + 0.1h."""
    if p.family != "transport":
        raise ValueError("transport_ic needs transport-family params")
    h1 = hat(p.a, 0.1)
    h2 = hat(2.5, 0.2 + 0.1 * p.h)
    return lambda x: h1(x) + h2(x)


def solve_transport(
    g: Callable[[np.ndarray], np.ndarray], grid: Grid1D, t: float = 0.3
) -> DiscreteFunction:
    """Exact shift solution u(x, t) = g(x - t), zero inflow from the left."""
    x = grid.nodes()
    vals = np.where(x >= grid.x_lo + t, np.asarray(g(x - t), dtype=float), 0.0)
    return DiscreteFunction(grid, vals)


# ---------------------------------------------------------------------------
# Gaussian random fields (truncated Karhunen-Loeve expansion)


@dataclass(frozen=True)
class GRFSpec:
    """Spectral covariance amplitude * (laplacian + kappa^2)^(-decay)."""

    amplitude: float = 7.0 ** 4
    kappa: float = 7.0
    decay: float = 2.5
    n_modes: int = 256

    def eigenvalues(self) -> np.ndarray:
        k = np.arange(1, self.n_modes + 1)
        return self.amplitude * ((2 * np.pi * k) ** 2 + self.kappa ** 2) ** (-self.decay)


@dataclass(frozen=True)
class GRFDraw:
    """One realization, stored by its cosine/sine coefficients.

    Evaluable anywhere on the period, with exact (spectral) translation,
    so shifted copies carry no interpolation error.
    """

    spec: GRFSpec
    xi: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)

    def __call__(self, x, shift: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.spec.n_modes + 1)
        amp = np.sqrt(2.0 * self.spec.eigenvalues())
        phase = 2 * np.pi * np.outer(x - shift, k)
        return np.cos(phase) @ (amp * self.xi) + np.sin(phase) @ (amp * self.eta)


def grf_draw(spec: GRFSpec, seed: int) -> GRFDraw:
    rng = np.random.default_rng(seed)
    return GRFDraw(spec, rng.standard_normal(spec.n_modes), rng.standard_normal(spec.n_modes))


def sample_grf(spec: GRFSpec, grid: Grid1D, seed: int) -> DiscreteFunction:
    """Zero-mean stationary Gaussian field sampled at the grid nodes."""
    if grid.topology != "periodic":
        raise ValueError("GRF sampling requires a periodic grid")
    if spec.n_modes > grid.n // 2:
        raise ValueError("mode cutoff exceeds the grid Nyquist frequency")
    return DiscreteFunction(grid, grf_draw(spec, seed)(grid.nodes()))


def burgers_ic(p: IntrinsicParams, w0: GRFDraw, w1: GRFDraw) -> Callable:
    """Mixture a*w0(x-h) + sqrt(1-a^2)*w1(x-h) of two fixed field draws."""
    if p.family != "burgers":
        raise ValueError("burgers_ic needs burgers-family params")
    c0, c1 = p.a, np.sqrt(1.0 - p.a ** 2)
    return lambda x: c0 * w0(x, shift=p.h) + c1 * w1(x, shift=p.h)


def kdv_ic(p: IntrinsicParams) -> Callable[[np.ndarray], np.ndarray]:
    """Two-pulse profile: sech^2 pulse of height a^2/2 at x=1 and a narrow
    height-18 pulse at x = 2 + h."""
    if p.family != "kdv":
        raise ValueError("kdv_ic needs kdv-family params")

    def f(x):
        x = np.asarray(x, dtype=float)
        p1 = (p.a ** 2 / 2) / np.cosh((p.a / 2) * (x - 1.0)) ** 2
        p2 = 18.0 / np.cosh(18.0 * (x - 2.0 - p.h)) ** 2
        return p1 + p2

    return f


# ---------------------------------------------------------------------------
# ETDRK4 spectral time stepping


def _etdrk4_coeffs(L: np.ndarray, dt: float, n_contour: int = 32):
    """Kassam-Trefethen contour evaluation of the ETDRK4 phi coefficients."""
    L = np.asarray(L, dtype=complex)
    E = np.exp(dt * L)
    E2 = np.exp(dt * L / 2)
    # mean over a circle centered at each dt*L value; the coefficients stay
    # complex so dispersive (imaginary) symbols are handled correctly
    r = np.exp(2j * np.pi * (np.arange(1, n_contour + 1) - 0.5) / n_contour)
    LR = dt * L[:, None] + r[None, :]
    Q = dt * np.mean((np.exp(LR / 2) - 1) / LR, axis=1)
    f1 = dt * np.mean((-4 - LR + np.exp(LR) * (4 - 3 * LR + LR ** 2)) / LR ** 3, axis=1)
    f2 = dt * np.mean((2 + LR + np.exp(LR) * (-2 + LR)) / LR ** 3, axis=1)
    f3 = dt * np.mean((-4 - 3 * LR - LR ** 2 + np.exp(LR) * (4 - LR)) / LR ** 3, axis=1)
    return E, E2, Q, f1, f2, f3


class BlowUpError(RuntimeError):
    pass


def _etdrk4_solve(values: np.ndarray, grid: Grid1D, L: np.ndarray, T: float, dt: float):
    """Integrate u_t = L u - u u_x pseudo-spectrally; batched over rows.

    The quadratic term is dealiased with the 2/3 rule.  ``L`` holds the
    linear symbol per Fourier mode.
    """
    if grid.topology != "periodic":
        raise ValueError("spectral solver requires a periodic grid")
    n = grid.n
    k = 2 * np.pi * np.fft.fftfreq(n, d=grid.spacing)
    dealias = np.abs(k) <= (2.0 / 3.0) * np.max(np.abs(k))
    E, E2, Q, f1, f2, f3 = _etdrk4_coeffs(L, dt)

    def nonlin(vhat):
        u = np.real(np.fft.ifft(vhat, axis=-1))
        return -0.5j * k * dealias * np.fft.fft(u * u, axis=-1)

    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9 * max(T, dt):
        raise ValueError(f"dt={dt} does not divide the horizon T={T}")
    vhat = np.fft.fft(np.atleast_2d(values), axis=-1)
    for step in range(steps):
        Nv = nonlin(vhat)
        a = E2 * vhat + Q * Nv
        Na = nonlin(a)
        b = E2 * vhat + Q * Na
        Nb = nonlin(b)
        c = E2 * a + Q * (2 * Nb - Nv)
        Nc = nonlin(c)
        vhat = E * vhat + Nv * f1 + 2 * (Na + Nb) * f2 + Nc * f3
        if not np.all(np.isfinite(vhat.real)):
            raise BlowUpError(f"solution blew up at step {step}")
    out = np.real(np.fft.ifft(vhat, axis=-1))
    return out if np.ndim(values) == 2 else out[0]


def solve_burgers(
    g: DiscreteFunction, nu: float = 1e-3, T: float = 1.0, dt: float = 1e-3
) -> DiscreteFunction:
    """Viscous Burgers' u_t = nu*u_xx - u*u_x at time T on the periodic grid."""
    grid = g.grid
    k = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    return DiscreteFunction(grid, _etdrk4_solve(g.values, grid, -nu * k ** 2, T, dt))


def solve_kdv(g: DiscreteFunction, T: float = 0.01, dt: float = 1.25e-7) -> DiscreteFunction:
    """KdV u_t = -u_xxx - u*u_x at time T on the periodic grid."""
    grid = g.grid
    k = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    return DiscreteFunction(grid, _etdrk4_solve(g.values, grid, 1j * k ** 3, T, dt))


def solve_burgers_batch(values, grid, nu=1e-3, T=1.0, dt=1e-3) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    return _etdrk4_solve(values, grid, -nu * k ** 2, T, dt)


def solve_kdv_batch(values, grid, T=0.01, dt=1.25e-7) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    return _etdrk4_solve(values, grid, 1j * k ** 3, T, dt)


# ---------------------------------------------------------------------------
# datasets


@dataclass
class FunctionPairDataset:
    """Paired (input, output) samples; outputs exist in clean and noisy form."""

    grid_in: Grid1D
    grid_out: Grid1D
    inputs: np.ndarray  # (n, D_in)
    clean_outputs: np.ndarray  # (n, D_out)
    noisy_outputs: np.ndarray  # (n, D_out)
    params: list  # list[IntrinsicParams]
    noise_sigma: float = 0.0
    seed: Optional[int] = None
    family: str = ""

    def __post_init__(self):
        n = self.inputs.shape[0]
        if not (len(self.params) == n == self.clean_outputs.shape[0] == self.noisy_outputs.shape[0]):
            raise ValueError("dataset component lengths disagree")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def input_function(self, i: int) -> DiscreteFunction:
        return DiscreteFunction(self.grid_in, self.inputs[i])

    def clean_output_function(self, i: int) -> DiscreteFunction:
        return DiscreteFunction(self.grid_out, self.clean_outputs[i])


def add_noise(ds: FunctionPairDataset, sigma: float, seed: int) -> FunctionPairDataset:
    """Fresh dataset whose noisy outputs are clean + iid N(0, sigma^2) per node."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        noisy = ds.clean_outputs.copy()
    else:
        rng = np.random.default_rng(seed)
        noisy = ds.clean_outputs + sigma * rng.standard_normal(ds.clean_outputs.shape)
    return replace(ds, noisy_outputs=noisy, noise_sigma=sigma)


DEFAULT_GRIDS = {
    "transport": (Grid1D(0.0, 1.0, 512, "closed"), Grid1D(0.0, 1.0, 512, "closed")),
    "burgers": (Grid1D(0.0, 1.0, 512, "periodic"), Grid1D(0.0, 1.0, 512, "periodic")),
    "kdv": (Grid1D(0.0, 6.0, 512, "periodic"), Grid1D(0.0, 6.0, 512, "periodic")),
}

# seeds of the two fixed field draws entering every Burgers' input
BURGERS_FIELD_SEEDS = (101, 202)


def family_ic(family: str, p: IntrinsicParams, grf_pair=None) -> Callable:
    """The initial-condition callable for one parameter draw."""
    if family == "transport":
        return transport_ic(p)
    if family == "burgers":
        if grf_pair is None:
            raise ValueError("burgers ICs need the fixed GRF draw pair")
        return burgers_ic(p, *grf_pair)
    if family == "kdv":
        return kdv_ic(p)
    raise ValueError(f"unknown family {family!r}")


def burgers_field_pair(grid: Grid1D, seeds=BURGERS_FIELD_SEEDS):
    spec = GRFSpec(n_modes=grid.n // 2)
    return grf_draw(spec, seeds[0]), grf_draw(spec, seeds[1])


def make_dataset(
    family: str,
    n_train: int,
    n_test: int,
    grid_in: Optional[Grid1D] = None,
    grid_out: Optional[Grid1D] = None,
    sigma: float = 0.0,
    seed: int = 0,
    solver_opts: Optional[dict] = None,
):
    """Sample (a, h) pairs, build ICs, solve the PDE, and split train/test.

    Noise is injected into the training outputs only; test outputs stay
    clean so generalization error is measured against the true operator.
    """
    if n_train < 1 or n_test < 0:
        raise ValueError("need positive sample counts")
    if grid_in is None or grid_out is None:
        g_in, g_out = DEFAULT_GRIDS[family]
        grid_in = grid_in or g_in
        grid_out = grid_out or g_out
    solver_opts = dict(solver_opts or {})

    ss = np.random.SeedSequence(seed)
    param_rng = np.random.default_rng(ss.spawn(1)[0])
    noise_seed = int(np.random.default_rng(ss.spawn(2)[1]).integers(2 ** 31))
    n = n_train + n_test
    (a_lo, a_hi), (h_lo, h_hi) = PARAM_RANGES[family]
    a = param_rng.uniform(a_lo, a_hi, n)
    h = param_rng.uniform(h_lo, h_hi, n)
    params = [IntrinsicParams(family, float(ai), float(hi)) for ai, hi in zip(a, h)]

    grf_pair = burgers_field_pair(grid_in) if family == "burgers" else None
    ics = [family_ic(family, p, grf_pair) for p in params]
    inputs = np.stack([discretize(f, grid_in).values for f in ics])

    if family == "transport":
        t = solver_opts.get("t", 0.3)
        outputs = np.stack([solve_transport(f, grid_out, t).values for f in ics])
    elif grid_out != grid_in:
        raise ValueError(f"{family}: output grid must match the solver grid")
    elif family == "burgers":
        outputs = solve_burgers_batch(inputs, grid_in, **solver_opts)
    else:
        outputs = solve_kdv_batch(inputs, grid_in, **solver_opts)

    def split(lo, hi):
        return FunctionPairDataset(
            grid_in, grid_out, inputs[lo:hi], outputs[lo:hi], outputs[lo:hi].copy(),
            params[lo:hi], 0.0, seed, family,
        )

    train = add_noise(split(0, n_train), sigma, noise_seed)
    test = split(n_train, n)
    return train, test


# ---------------------------------------------------------------------------
# persistence

_GRID_KEYS = ("x_lo", "x_hi", "n", "topology")


def _grid_meta(g: Grid1D) -> dict:
    return {"x_lo": g.x_lo, "x_hi": g.x_hi, "n": g.n, "topology": g.topology}


def _grid_from_meta(m: dict) -> Grid1D:
    return Grid1D(m["x_lo"], m["x_hi"], int(m["n"]), m["topology"])


def save_dataset(ds: FunctionPairDataset, path, fmt: str = "binary") -> None:
    """Persist a dataset; ``binary`` is an npz archive, ``csv`` a directory."""
    meta = {
        "family": ds.family,
        "noise_sigma": ds.noise_sigma,
        "seed": ds.seed,
        "grid_in": _grid_meta(ds.grid_in),
        "grid_out": _grid_meta(ds.grid_out),
        "params": [(p.family, p.a, p.h) for p in ds.params],
    }
    if fmt == "binary":
        np.savez(
            path,
            meta=json.dumps(meta),
            inputs=ds.inputs,
            clean_outputs=ds.clean_outputs,
            noisy_outputs=ds.noisy_outputs,
        )
    elif fmt == "csv":
        from pathlib import Path

        d = Path(path)
        d.mkdir(parents=True, exist_ok=True)
        (d / "meta.json").write_text(json.dumps(meta, indent=2))
        for name in ("inputs", "clean_outputs", "noisy_outputs"):
            np.savetxt(d / f"{name}.csv", getattr(ds, name), fmt="%.17e", delimiter=",")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_dataset(path, fmt: str = "binary") -> FunctionPairDataset:
    if fmt == "binary":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            arrays = {k: z[k] for k in ("inputs", "clean_outputs", "noisy_outputs")}
    elif fmt == "csv":
        from pathlib import Path

        d = Path(path)
        meta = json.loads((d / "meta.json").read_text())
        arrays = {
            k: np.atleast_2d(np.loadtxt(d / f"{k}.csv", delimiter=","))
            for k in ("inputs", "clean_outputs", "noisy_outputs")
        }
    else:
        raise ValueError(f"unknown format {fmt!r}")
    params = [IntrinsicParams(f, a, h) for f, a, h in meta["params"]]
    return FunctionPairDataset(
        _grid_from_meta(meta["grid_in"]),
        _grid_from_meta(meta["grid_out"]),
        arrays["inputs"],
        arrays["clean_outputs"],
        arrays["noisy_outputs"],
        params,
        meta["noise_sigma"],
        meta["seed"],
        meta["family"],
    )
