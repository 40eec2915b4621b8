"""Sweep harness: dimension, sample-size, noise and grid-transfer studies.

Every sweep is a grid of independent cells (method x setting x repeat).
Cells are seeded deterministically from the master seed, may run on a
bounded worker pool, and individual failures are recorded without
aborting the rest of the sweep.
"""

from __future__ import annotations

import hashlib
import json
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import nn, operators, pde_data, reduction
from .discretization import DiscreteFunction, Grid1D, discretize, make_quadrature

SCHEMA_VERSION = 1

# desk-scale substitutions: smaller nets, fewer epochs, fewer samples
DESK_SCALE = {"width": 64, "epochs": 200, "n_train": 500, "grid_n": 256}


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment run (JSON round-trippable)."""

    family: str = "transport"
    grid_n: int = 512
    n_train: int = 2000
    n_test: int = 500
    reduced_dims: tuple = (1, 2, 4, 6, 8, 10, 20, 40, 100)
    methods: tuple = ("aenet", "pcanet", "deeponet")
    n_sweep: tuple = (125, 250, 500, 1000, 2000)
    sigma_list: tuple = (0.0, 0.1, 0.2, 0.3, 0.4)
    test_grids: tuple = (8, 16, 32, 64, 128, 256, 512)
    repeats: int = 3
    seed: int = 0
    sigma: float = 0.0
    epochs: int = 500
    width: int = 500
    deeponet_width: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    desk_scale: bool = False
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        for name in ("reduced_dims", "methods", "n_sweep", "sigma_list", "test_grids"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if any(d < 1 for d in self.reduced_dims):
            raise ValueError("reduced dims must be positive")

    def effective(self) -> "ExperimentConfig":
        """Apply the desk-scale substitutions (metric definitions untouched)."""
        if not self.desk_scale:
            return self
        return replace(
            self,
            width=DESK_SCALE["width"],
            deeponet_width=DESK_SCALE["width"],
            epochs=DESK_SCALE["epochs"],
            n_train=min(self.n_train, DESK_SCALE["n_train"]),
            grid_n=DESK_SCALE["grid_n"],
        )

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def to_json(self, path) -> None:
        payload = {"schema_version": SCHEMA_VERSION, **asdict(self)}
        Path(path).write_text(json.dumps(payload, indent=2, default=list))

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        payload = json.loads(Path(path).read_text())
        version = payload.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema version {version}")
        return cls(**payload)


@dataclass
class ResultRow:
    """One emitted metric: cell coordinates, value, spread and provenance."""

    family: str
    method: str
    metric: str
    value: float
    std: float = 0.0
    reduced_dim: Optional[int] = None
    n_train: Optional[int] = None
    sigma: Optional[float] = None
    test_grid: Optional[int] = None
    seed: Optional[int] = None
    wallclock: float = 0.0
    fingerprint: str = ""
    error: str = ""


def _grids(cfg: ExperimentConfig):
    g_in, g_out = pde_data.DEFAULT_GRIDS[cfg.family]
    scale = lambda g: Grid1D(g.x_lo, g.x_hi, cfg.grid_n, g.topology)
    return scale(g_in), scale(g_out)


def _train_cfg(cfg: ExperimentConfig, seed: int, epochs: Optional[int] = None) -> nn.TrainConfig:
    return nn.TrainConfig(
        epochs=epochs if epochs is not None else cfg.epochs,
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        seed=seed,
    )


def train_method(method, train_ds, d, cfg: ExperimentConfig, seed: int):
    """Train one operator model; returns the fitted model."""
    rule_in = make_quadrature(train_ds.grid_in, "midpoint")
    rule_out = make_quadrature(train_ds.grid_out, "midpoint")
    w = cfg.width
    if method == "aenet":
        ae, _ = reduction.train_autoencoder(
            train_ds.inputs, d, _train_cfg(cfg, seed), rule_in,
            encoder_widths=(w,) * 4, decoder_widths=(w,) * 3,
        )
        model, _ = operators.train_aenet_stage2(
            ae, train_ds, _train_cfg(cfg, seed + 1000), rule_out, widths=(w,) * 3
        )
        return model
    if method == "pcanet":
        model, _ = operators.train_pcanet(
            train_ds, d, _train_cfg(cfg, seed), widths=(w,) * 3
        )
        return model
    if method == "deeponet":
        model, _ = operators.train_deeponet(
            train_ds, d, _train_cfg(cfg, seed), widths=(cfg.deeponet_width,) * 3
        )
        return model
    raise ValueError(f"unknown method {method!r}")


def _eval_cell(args):
    """Train and evaluate one (method, dim, repeat) cell. Returns metric dict."""
    method, d, repeat_seed, train_ds, test_ds, cfg = args
    start = time.perf_counter()
    model = train_method(method, train_ds, d, cfg, repeat_seed)
    rule_out = make_quadrature(test_ds.grid_out, "midpoint")
    return {
        "rel_err_pct": operators.relative_test_error(model, test_ds, rule_out),
        "sq_err": operators.squared_generalization_error(model, test_ds, rule_out),
        "wallclock": time.perf_counter() - start,
    }


def _run_cells(jobs, workers: int):
    """Run cells serially or on a process pool; exceptions become error strings."""
    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_eval_cell, job) for job in jobs]
            for fut in futures:
                try:
                    results.append((fut.result(), ""))
                except Exception:
                    results.append((None, traceback.format_exc(limit=3)))
    else:
        for job in jobs:
            try:
                results.append((_eval_cell(job), ""))
            except Exception:
                results.append((None, traceback.format_exc(limit=3)))
    return results


def _aggregate(cell_results, base_row: ResultRow, metric: str):
    """Mean/std rows over repeats; failed repeats are reported separately."""
    ok = [r for r, err in cell_results if r is not None]
    errs = [err for r, err in cell_results if r is None]
    rows = []
    if ok:
        vals = np.array([r[metric] for r in ok])
        rows.append(replace(
            base_row, metric=metric, value=float(vals.mean()),
            std=float(vals.std(ddof=0)),
            wallclock=float(sum(r["wallclock"] for r in ok)),
        ))
    for err in errs:
        rows.append(replace(base_row, metric=metric, value=float("nan"), error=err))
    return rows


def _repeat_seeds(cfg: ExperimentConfig):
    return [cfg.seed + r for r in range(cfg.repeats)]


def run_dim_sweep(config: ExperimentConfig):
    """Relative test error for every (method, reduced dimension, repeat)."""
    cfg = config.effective()
    grid_in, grid_out = _grids(cfg)
    train_ds, test_ds = pde_data.make_dataset(
        cfg.family, cfg.n_train, cfg.n_test, grid_in, grid_out, cfg.sigma, cfg.seed
    )
    fp = config.fingerprint()
    rows = []
    for method in cfg.methods:
        for d in cfg.reduced_dims:
            jobs = [(method, d, s, train_ds, test_ds, cfg) for s in _repeat_seeds(cfg)]
            cells = _run_cells(jobs, cfg.workers)
            base = ResultRow(cfg.family, method, "", 0.0, reduced_dim=d,
                             n_train=cfg.n_train, sigma=cfg.sigma, seed=cfg.seed,
                             fingerprint=fp)
            rows += _aggregate(cells, base, "rel_err_pct")
            rows += _aggregate(cells, base, "sq_err")
    return rows


def run_sample_complexity(config: ExperimentConfig, d_ae: int = 2):
    """Squared test error of the two-stage model as training size varies."""
    cfg = config.effective()
    grid_in, grid_out = _grids(cfg)
    fp = config.fingerprint()
    rows = []
    n_max = max(cfg.n_sweep)
    train_full, test_ds = pde_data.make_dataset(
        cfg.family, n_max, cfg.n_test, grid_in, grid_out, cfg.sigma, cfg.seed
    )
    for n in sorted(cfg.n_sweep):
        sub = replace(
            train_full,
            inputs=train_full.inputs[:n],
            clean_outputs=train_full.clean_outputs[:n],
            noisy_outputs=train_full.noisy_outputs[:n],
            params=train_full.params[:n],
        )
        jobs = [("aenet", d_ae, s, sub, test_ds, cfg) for s in _repeat_seeds(cfg)]
        cells = _run_cells(jobs, cfg.workers)
        base = ResultRow(cfg.family, "aenet", "", 0.0, reduced_dim=d_ae,
                         n_train=n, sigma=cfg.sigma, seed=cfg.seed, fingerprint=fp)
        rows += _aggregate(cells, base, "sq_err")
    return rows


def run_noise_sweep(config: ExperimentConfig, d_ae: int = 2):
    """Squared test error against clean targets as output noise grows."""
    cfg = config.effective()
    if 0.0 not in cfg.sigma_list:
        raise ValueError("sigma_list must include 0")
    grid_in, grid_out = _grids(cfg)
    fp = config.fingerprint()
    train_clean, test_ds = pde_data.make_dataset(
        cfg.family, cfg.n_train, cfg.n_test, grid_in, grid_out, 0.0, cfg.seed
    )
    noise_seed = cfg.seed + 777
    rows = []
    for sigma in cfg.sigma_list:
        noisy = pde_data.add_noise(train_clean, sigma, noise_seed)
        jobs = [("aenet", d_ae, s, noisy, test_ds, cfg) for s in _repeat_seeds(cfg)]
        cells = _run_cells(jobs, cfg.workers)
        base = ResultRow(cfg.family, "aenet", "", 0.0, reduced_dim=d_ae,
                         n_train=cfg.n_train, sigma=sigma, seed=cfg.seed, fingerprint=fp)
        rows += _aggregate(cells, base, "sq_err")
    return rows


def run_projection_comparison(config: ExperimentConfig):
    """PCA vs autoencoder relative projection error across dimensions.

    Also returns the input-data singular value spectrum for scree export.
    """
    cfg = config.effective()
    grid_in, grid_out = _grids(cfg)
    train_ds, test_ds = pde_data.make_dataset(
        cfg.family, cfg.n_train, cfg.n_test, grid_in, grid_out, cfg.sigma, cfg.seed
    )
    rule_in = make_quadrature(grid_in, "midpoint")
    fp = config.fingerprint()
    rows = []
    spectrum = reduction.fit_pca(train_ds.inputs, 1).spectrum
    for d in cfg.reduced_dims:
        if d <= min(train_ds.inputs.shape):
            pca = reduction.fit_pca(train_ds.inputs, d)
            err = reduction.projection_error(pca, test_ds.inputs, rule_in)
            rows.append(ResultRow(cfg.family, "pca", "proj_err", err, reduced_dim=d,
                                  n_train=cfg.n_train, seed=cfg.seed, fingerprint=fp))
        vals = []
        t0 = time.perf_counter()
        for s in _repeat_seeds(cfg):
            ae, _ = reduction.train_autoencoder(
                train_ds.inputs, d, _train_cfg(cfg, s), rule_in,
                encoder_widths=(cfg.width,) * 4, decoder_widths=(cfg.width,) * 3,
            )
            vals.append(reduction.projection_error(ae, test_ds.inputs, rule_in))
        rows.append(ResultRow(cfg.family, "autoencoder", "proj_err",
                              float(np.mean(vals)), float(np.std(vals)), reduced_dim=d,
                              n_train=cfg.n_train, seed=cfg.seed,
                              wallclock=time.perf_counter() - t0, fingerprint=fp))
    return rows, spectrum


def run_grid_transfer(config: ExperimentConfig, d_ae: int = 2):
    """Squared test error when test inputs arrive on coarser/finer grids.

    The model is trained once on the native grid; test initial conditions
    are resampled on each foreign grid and enter through the cubic
    interpolation path.
    """
    cfg = config.effective()
    grid_in, grid_out = _grids(cfg)
    train_ds, test_ds = pde_data.make_dataset(
        cfg.family, cfg.n_train, cfg.n_test, grid_in, grid_out, cfg.sigma, cfg.seed
    )
    model = train_method("aenet", train_ds, d_ae, cfg, cfg.seed)
    rule_out = make_quadrature(grid_out, "midpoint")
    fp = config.fingerprint()

    grf_pair = (pde_data.burgers_field_pair(grid_in)
                if cfg.family == "burgers" else None)
    ics = [pde_data.family_ic(cfg.family, p, grf_pair) for p in test_ds.params]

    rows = []
    for gn in cfg.test_grids:
        t0 = time.perf_counter()
        foreign = Grid1D(grid_in.x_lo, grid_in.x_hi, gn, grid_in.topology)
        preds = np.stack([
            operators.predict_on_foreign_grid(
                model, discretize(f, foreign), method="cubic"
            ).values
            for f in ics
        ])
        err = float(np.mean(
            ((preds - test_ds.clean_outputs) ** 2 @ rule_out.weights)
        ))
        rows.append(ResultRow(cfg.family, "aenet", "sq_err", err, reduced_dim=d_ae,
                              n_train=cfg.n_train, test_grid=gn, seed=cfg.seed,
                              wallclock=time.perf_counter() - t0, fingerprint=fp))
    return rows


# ---------------------------------------------------------------------------
# output emission

_CSV_FIELDS = ["family", "method", "metric", "value", "std", "reduced_dim",
               "n_train", "sigma", "test_grid", "seed", "wallclock",
               "fingerprint", "error"]


def emit_outputs(rows: Sequence[ResultRow], out_dir, formats=("csv", "json"),
                 name: str = "results", plots: bool = False):
    """Write result rows as CSV/JSON (and optional SVG line plots)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out / f"{name}.csv"
        with open(path, "w") as fh:
            fh.write(",".join(_CSV_FIELDS) + "\n")
            for r in rows:
                d = asdict(r)
                fh.write(",".join(_csv_cell(d[k]) for k in _CSV_FIELDS) + "\n")
        written.append(path)
    if "json" in formats:
        path = out / f"{name}.json"
        path.write_text(json.dumps([asdict(r) for r in rows], indent=2))
        written.append(path)
    if plots and rows:
        written += _emit_plots(rows, out, name)
    return written


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def load_results(path) -> list:
    """Reimport a result CSV written by emit_outputs."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            cells = line.rstrip("\n").split(",")
            kw = dict(zip(header, cells))
            for k in ("value", "std", "sigma", "wallclock"):
                kw[k] = float(kw[k]) if kw[k] else None
            for k in ("reduced_dim", "n_train", "test_grid", "seed"):
                kw[k] = int(kw[k]) if kw[k] else None
            kw["value"] = kw["value"] if kw["value"] is not None else float("nan")
            kw["std"] = kw["std"] or 0.0
            kw["wallclock"] = kw["wallclock"] or 0.0
            rows.append(ResultRow(**kw))
    return rows


def _emit_plots(rows, out: Path, name: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    series_keys = [("reduced_dim", False), ("n_train", True), ("sigma", False),
                   ("test_grid", True)]
    for key, loglog in series_keys:
        groups = {}
        for r in rows:
            x = getattr(r, key)
            if x is None or not np.isfinite(r.value):
                continue
            groups.setdefault((r.method, r.metric), []).append((x, r.value, r.std))
        groups = {k: v for k, v in groups.items() if len({x for x, *_ in v}) > 1}
        if not groups:
            continue
        fig, ax = plt.subplots()
        for (method, metric), pts in sorted(groups.items()):
            pts.sort()
            xs, ys, ss = map(np.array, zip(*pts))
            ax.errorbar(xs, ys, yerr=ss, marker="o", label=f"{method} {metric}")
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(key)
        ax.legend()
        path = out / f"{name}_{key}.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def emit_latent_scatter(table: np.ndarray, out_dir, name: str = "latent"):
    """Two scatter SVGs of the first two latent coordinates, colored by a and h."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for label, col in (("a", -2), ("h", -1)):
        fig, ax = plt.subplots()
        sc = ax.scatter(table[:, 0], table[:, 1], c=table[:, col], s=8)
        fig.colorbar(sc, label=label)
        path = out / f"{name}_by_{label}.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def pivot_dim_table(rows) -> dict:
    """Nested {method: {dim: 'mean (std)'}} view of a dimension sweep."""
    table = {}
    for r in rows:
        if r.metric != "rel_err_pct" or not np.isfinite(r.value):
            continue
        table.setdefault(r.method, {})[r.reduced_dim] = f"{r.value:.1f} ({r.std:.1f})"
    return table
