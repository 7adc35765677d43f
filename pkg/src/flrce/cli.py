"""Command line entry point.

    flrce run --config exp.ini --out results/ [--seed N] [--strategies flrce,random_fedavg]
    flrce sweep-psi --config exp.ini --values 1.0,1.5,2.0 [--out results/]
    flrce export --bundle results/results.json --out plots/
    flrce show-config [--config exp.ini]

``FLRCE_OUT_DIR`` supplies the output directory when ``--out`` is omitted.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import STRATEGIES, ExperimentConfig, dump_config, load_config
from .errors import ConfigurationError, ParseError
from .orchestrator import build_federation, load_dataset
from .results import (
    build_bundle,
    export_plot_data,
    run_strategies,
    sweep_csv,
    sweep_psi,
    write_bundle,
)

OUT_ENV = "FLRCE_OUT_DIR"
log = logging.getLogger("flrce")


def _out_dir(arg: str | None, required: bool = True) -> Path | None:
    value = arg or os.environ.get(OUT_ENV)
    if not value:
        if required:
            raise ConfigurationError(f"no output directory; pass --out or set {OUT_ENV}", "--out")
        return None
    return Path(value)


def _csv_list(raw: str, flag: str, cast=str) -> list:
    items = [p.strip() for p in raw.split(",") if p.strip()]
    if not items:
        raise ConfigurationError("expected a comma-separated list", flag)
    try:
        return [cast(p) for p in items]
    except ValueError:
        raise ConfigurationError(f"cannot parse {raw!r}", flag) from None


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "strategies", None):
        names = _csv_list(args.strategies, "--strategies")
        for n in names:
            if n not in STRATEGIES:
                raise ConfigurationError(f"unknown strategy {n!r}; choose from {STRATEGIES}", "--strategies")
        changes["strategies"] = tuple(names)
    if getattr(args, "label_column", None):
        changes["data"] = replace(cfg.data, label_column=args.label_column)
    cfg = replace(cfg, **changes) if changes else cfg
    if cfg.data.source == "csv" and not cfg.data.label_column:
        raise ConfigurationError("CSV data needs the label column name", "--label-column")
    return cfg


def cmd_run(args) -> int:
    cfg = _resolve(args)
    out = _out_dir(args.out)
    fed = build_federation(cfg, load_dataset(cfg))
    results = run_strategies(cfg, fed)
    bundle = build_bundle(cfg, results)
    path = write_bundle(bundle, out)
    export_plot_data(bundle, out)
    for name, res in results.items():
        stop = f"stopped at round {res.stop_round}" if res.es_triggered else f"ran {res.stop_round} rounds"
        print(f"{name:14s} accuracy={res.final_accuracy:.4f} {stop}")
    print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve(args)
    values = _csv_list(args.values, "--values", float)
    rows = sweep_psi(cfg, values, build_federation(cfg, load_dataset(cfg)))
    text = sweep_csv(rows)
    out = _out_dir(args.out, required=False)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "psi_sweep.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_export(args) -> int:
    out = _out_dir(args.out)
    try:
        bundle = json.loads(Path(args.bundle).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(str(exc), "--bundle") from None
    for kind, path in export_plot_data(bundle, out).items():
        print(f"{kind}: {path}")
    return 0


def cmd_show_config(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    sys.stdout.write(dump_config(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flrce", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every configured strategy and write results.json + CSVs")
    run.add_argument("--config", required=True)
    run.add_argument("--out")
    run.add_argument("--seed", type=int)
    run.add_argument("--strategies", help="comma-separated subset of " + ",".join(STRATEGIES))
    run.add_argument("--label-column", dest="label_column", help="label column for CSV data")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep-psi", help="FLrce stop round / accuracy per early-stopping threshold")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--values", required=True, help="comma-separated thresholds")
    sweep.add_argument("--out")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--label-column", dest="label_column")
    sweep.set_defaults(func=cmd_sweep)

    export = sub.add_parser("export", help="re-export plot CSVs from a results.json")
    export.add_argument("--bundle", required=True)
    export.add_argument("--out")
    export.set_defaults(func=cmd_export)

    show = sub.add_parser("show-config", help="print the resolved configuration")
    show.add_argument("--config")
    show.set_defaults(func=cmd_show_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
