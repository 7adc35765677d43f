"""Results bundle (versioned JSON), psi sweeps, and CSV export for plotting."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .accounting import efficiency, normalize
from .config import ExperimentConfig, config_to_dict
from .orchestrator import FLRCE, Federation, RunResult, build_federation, run_experiment

SCHEMA_VERSION = 1

ACCURACY_COLUMNS = ["strategy", "round", "mode", "mean_accuracy", "conflicts", "es_triggered", "energy_J", "bytes"]
EFFICIENCY_COLUMNS = [
    "strategy",
    "final_accuracy",
    "rounds",
    "es_triggered",
    "energy_J",
    "bytes",
    "comp_eff",
    "comm_eff",
    "norm_comp_eff",
    "norm_comm_eff",
    "accuracy_per_round",
]
SWEEP_COLUMNS = ["psi", "stop_round", "es_triggered", "final_accuracy", "comp_eff", "comm_eff"]


def run_strategies(cfg: ExperimentConfig, federation: Federation | None = None) -> dict[str, RunResult]:
    fed = federation if federation is not None else build_federation(cfg)
    return {s: run_experiment(cfg, s, fed) for s in cfg.strategies}


def build_bundle(cfg: ExperimentConfig, results: dict[str, RunResult]) -> dict:
    comp: dict[str, float] = {}
    comm: dict[str, float] = {}
    series = {}
    for name, res in results.items():
        ce, me = efficiency(res.final_accuracy, res.totals)
        comp[name], comm[name] = ce, me
        entry = {
            "rounds": [r.to_dict() for r in res.records],
            "final_accuracy": res.final_accuracy,
            "stop_round": res.stop_round,
            "es_triggered": res.es_triggered,
            "totals": {
                "energy_J": res.totals.energy_J,
                "bytes": res.totals.bytes,
                "rounds": res.totals.rounds,
            },
            "efficiency": {"comp_eff": ce, "comm_eff": me},
        }
        if res.maps is not None:
            entry["omega"] = res.maps.omega.tolist()
            entry["heuristics"] = res.maps.H.tolist()
        series[name] = entry
    for name, v in normalize(comp).items():
        series[name]["efficiency"]["norm_comp_eff"] = v
    for name, v in normalize(comm).items():
        series[name]["efficiency"]["norm_comm_eff"] = v
    return {"schema_version": SCHEMA_VERSION, "config": config_to_dict(cfg), "strategies": series}


def dumps_bundle(bundle: dict) -> str:
    return json.dumps(bundle, indent=2, allow_nan=False) + "\n"


def write_bundle(bundle: dict, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "results.json"
    path.write_text(dumps_bundle(bundle), encoding="utf-8")
    return path


def _csv_text(header: list[str], rows: Iterable[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def accuracy_rows(bundle: dict) -> list[list]:
    rows = []
    for name, s in bundle["strategies"].items():
        for r in s["rounds"]:
            rows.append([name, r["t"], r["mode"], repr(r["mean_accuracy"]),
                         None if r["conflicts"] is None else repr(r["conflicts"]),
                         int(r["es_triggered"]), repr(r["energy_J"]), r["bytes"]])
    return rows


def efficiency_rows(bundle: dict) -> list[list]:
    rows = []
    for name, s in bundle["strategies"].items():
        e = s["efficiency"]
        rows.append([
            name,
            repr(s["final_accuracy"]),
            s["stop_round"],
            int(s["es_triggered"]),
            repr(s["totals"]["energy_J"]),
            s["totals"]["bytes"],
            repr(e["comp_eff"]),
            repr(e["comm_eff"]),
            repr(e["norm_comp_eff"]),
            repr(e["norm_comm_eff"]),
            repr(s["final_accuracy"] / s["stop_round"]),
        ])
    return rows


def export_plot_data(bundle: dict, out_dir: str | Path) -> dict[str, Path]:
    """Write ``accuracy.csv`` (one row per round per strategy) and ``efficiency.csv`` (one row per strategy)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"accuracy": out / "accuracy.csv", "efficiency": out / "efficiency.csv"}
    paths["accuracy"].write_text(_csv_text(ACCURACY_COLUMNS, accuracy_rows(bundle)), encoding="utf-8")
    paths["efficiency"].write_text(_csv_text(EFFICIENCY_COLUMNS, efficiency_rows(bundle)), encoding="utf-8")
    return paths


@dataclass(frozen=True)
class SweepRow:
    psi: float
    stop_round: int
    es_triggered: bool
    final_accuracy: float
    comp_eff: float
    comm_eff: float

    def as_list(self) -> list:
        return [repr(self.psi), self.stop_round, int(self.es_triggered),
                repr(self.final_accuracy), repr(self.comp_eff), repr(self.comm_eff)]


def sweep_psi(
    cfg: ExperimentConfig,
    psi_values: Iterable[float],
    federation: Federation | None = None,
) -> list[SweepRow]:
    """Run FLrce once per threshold on the same federation and seed.

    Runs where early stopping never fires report ``stop_round = T`` and
    ``es_triggered = False``.
    """
    values = [float(v) for v in psi_values]
    if not values:
        raise ValueError("sweep_psi needs at least one threshold")
    fed = federation if federation is not None else build_federation(cfg)
    rows = []
    for psi in values:
        res = run_experiment(replace(cfg, psi=psi), FLRCE, fed)
        ce, me = efficiency(res.final_accuracy, res.totals)
        rows.append(SweepRow(psi, res.stop_round, res.es_triggered, res.final_accuracy, ce, me))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    return _csv_text(SWEEP_COLUMNS, (r.as_list() for r in rows))
