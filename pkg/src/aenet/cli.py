"""Command-line entry points for data generation, training and sweeps.

Every subcommand takes a JSON experiment config (--config) plus
``--set key=value`` overrides.  Exit codes: 0 success, 1 fatal error,
2 partial cell failure within a sweep.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import experiments, nn, operators, pde_data, reduction
from .discretization import make_quadrature
from .experiments import ExperimentConfig


def _load_config(args) -> ExperimentConfig:
    cfg = (ExperimentConfig.from_json(args.config) if args.config
           else ExperimentConfig())
    overrides = {}
    for item in args.set or []:
        key, _, raw = item.partition("=")
        if key not in asdict(cfg):
            raise SystemExit(f"unknown config key {key!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        overrides[key] = value
    return replace(cfg, **overrides) if overrides else cfg


def _emit(rows, cfg: ExperimentConfig, name: str) -> int:
    out = Path(cfg.output_dir) / "tables"
    written = experiments.emit_outputs(rows, out, name=name, plots=True)
    for path in written:
        print(f"wrote {path}")
    failed = sum(1 for r in rows if r.error)
    if failed:
        print(f"{failed} cell(s) failed", file=sys.stderr)
        return 2
    return 0


def cmd_generate_data(args) -> int:
    cfg = _load_config(args).effective()
    grid_in, grid_out = experiments._grids(cfg)
    train, test = pde_data.make_dataset(
        cfg.family, cfg.n_train, cfg.n_test, grid_in, grid_out, cfg.sigma, cfg.seed
    )
    out = Path(cfg.output_dir) / "datasets"
    out.mkdir(parents=True, exist_ok=True)
    for split, ds in (("train", train), ("test", test)):
        path = out / f"{cfg.family}_{split}.npz"
        pde_data.save_dataset(ds, path)
        print(f"wrote {path} ({len(ds)} samples)")
    return 0


def _load_split(cfg: ExperimentConfig, split: str):
    path = Path(cfg.output_dir) / "datasets" / f"{cfg.family}_{split}.npz"
    if not path.exists():
        raise SystemExit(f"{path} not found; run generate-data first")
    return pde_data.load_dataset(path)


def cmd_train(args) -> int:
    cfg = _load_config(args).effective()
    train_ds = _load_split(cfg, "train")
    model = experiments.train_method(args.method, train_ds, args.dim, cfg, cfg.seed)
    out = Path(cfg.output_dir) / "models" / f"{cfg.family}_{args.method}_d{args.dim}"
    operators.save_model(model, out)
    print(f"wrote {out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args).effective()
    test_ds = _load_split(cfg, "test")
    bundle = Path(cfg.output_dir) / "models" / f"{cfg.family}_{args.method}_d{args.dim}"
    model = operators.load_model(bundle)
    rule_out = make_quadrature(test_ds.grid_out, "midpoint")
    rel = operators.relative_test_error(model, test_ds, rule_out)
    sq = operators.squared_generalization_error(model, test_ds, rule_out)
    print(f"relative test error: {rel:.2f}%")
    print(f"squared test error: {sq:.6g}")
    return 0


def cmd_sweep_dims(args) -> int:
    cfg = _load_config(args)
    rows = experiments.run_dim_sweep(cfg)
    table = experiments.pivot_dim_table(rows)
    for method, cells in table.items():
        print(method, {d: v for d, v in sorted(cells.items())})
    return _emit(rows, cfg, "dim_sweep")


def cmd_sweep_n(args) -> int:
    cfg = _load_config(args)
    rows = experiments.run_sample_complexity(cfg)
    return _emit(rows, cfg, "sample_complexity")


def cmd_sweep_noise(args) -> int:
    cfg = _load_config(args)
    rows = experiments.run_noise_sweep(cfg)
    return _emit(rows, cfg, "noise_sweep")


def cmd_sweep_grid(args) -> int:
    cfg = _load_config(args)
    rows = experiments.run_grid_transfer(cfg)
    return _emit(rows, cfg, "grid_transfer")


def cmd_project_compare(args) -> int:
    cfg = _load_config(args)
    rows, spectrum = experiments.run_projection_comparison(cfg)
    out = Path(cfg.output_dir) / "tables"
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "singular_values.csv", spectrum, fmt="%.17e")
    print(f"wrote {out / 'singular_values.csv'}")
    return _emit(rows, cfg, "projection_comparison")


def cmd_emit_plots(args) -> int:
    cfg = _load_config(args)
    table_dir = Path(cfg.output_dir) / "tables"
    emitted = []
    for path in sorted(table_dir.glob("*.csv")):
        if path.name == "singular_values.csv":
            continue
        rows = experiments.load_results(path)
        emitted += experiments._emit_plots(rows, table_dir, path.stem)
    for path in emitted:
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "generate-data": cmd_generate_data,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep-dims": cmd_sweep_dims,
    "sweep-n": cmd_sweep_n,
    "sweep-noise": cmd_sweep_noise,
    "sweep-grid": cmd_sweep_grid,
    "project-compare": cmd_project_compare,
    "emit-plots": cmd_emit_plots,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aenet", description="operator learning experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field")
        if name in ("train", "evaluate"):
            p.add_argument("--method", required=True,
                           choices=("aenet", "pcanet", "deeponet"))
            p.add_argument("--dim", type=int, required=True,
                           help="reduced dimension / branch width")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit:
        raise
    except Exception as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
