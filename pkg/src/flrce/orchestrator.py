"""Server loop: select, broadcast, train, record, aggregate, relate, score, early-stop.

Three strategies share the loop. ``flrce`` and ``flrce_no_es`` differ only in
whether the early-stopping check may end the run; ``random_fedavg`` samples
clients uniformly and never touches the relationship maps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .accounting import ResourceTotals, round_bandwidth, round_energy
from .config import ExperimentConfig
from .data import Dataset, PartitionSpec, generate_synthetic, load_csv, partition_dirichlet
from .earlystop import EsConfig, count_conflicts, es_check
from .errors import ClientSkip, ConfigurationError
from .model import ClientState, ModelSpec, init_params, local_train, predict
from .relationship import ServerMaps, update_relationships_g
from .selection import EXPLOIT, random_p, select_clients_h

log = logging.getLogger(__name__)

FLRCE = "flrce"
FLRCE_NO_ES = "flrce_no_es"
RANDOM_FEDAVG = "random_fedavg"
RANDOM = "random"


@dataclass(frozen=True)
class RoundRecord:
    t: int
    mode: str
    selected: tuple[int, ...]
    mean_accuracy: float
    conflicts: float | None
    es_triggered: bool
    energy_J: float
    bytes: int

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "mode": self.mode,
            "selected": list(self.selected),
            "mean_accuracy": self.mean_accuracy,
            "conflicts": self.conflicts,
            "es_triggered": self.es_triggered,
            "energy_J": self.energy_J,
            "bytes": self.bytes,
        }


@dataclass
class Federation:
    spec: ModelSpec
    clients: list[ClientState]
    initial_w: np.ndarray

    @property
    def shards(self) -> list[Dataset]:
        return [c.data for c in self.clients]


@dataclass
class RunResult:
    strategy: str
    records: list[RoundRecord]
    final_w: np.ndarray
    totals: ResourceTotals
    weight_sums: list[float] = field(default_factory=list)
    maps: ServerMaps | None = None

    @property
    def stop_round(self) -> int:
        return self.records[-1].t

    @property
    def es_triggered(self) -> bool:
        return bool(self.records) and self.records[-1].es_triggered

    @property
    def final_accuracy(self) -> float:
        return self.records[-1].mean_accuracy


def _seeds(seed: int) -> dict[str, int]:
    children = np.random.SeedSequence(seed).spawn(4)
    names = ("data", "partition", "init", "select")
    return {n: int(c.generate_state(1)[0]) for n, c in zip(names, children)}


def load_dataset(cfg: ExperimentConfig, label_column: str | None = None) -> Dataset:
    d = cfg.data
    if d.source == "csv":
        column = label_column or d.label_column
        if not column:
            raise ConfigurationError("CSV data needs the label column name", "--label-column")
        return load_csv(d.csv_path, column)
    return generate_synthetic(d.classes, d.per_class, d.input_dim, d.spread, _seeds(cfg.seed)["data"])


def build_federation(cfg: ExperimentConfig, dataset: Dataset | None = None) -> Federation:
    """Dataset, Dirichlet shards, model spec and initial weights, all derived from ``cfg.seed``."""
    seeds = _seeds(cfg.seed)
    data = dataset if dataset is not None else load_dataset(cfg)
    shards = partition_dirichlet(data, PartitionSpec(cfg.alpha, cfg.num_clients, seeds["partition"]))
    spec = ModelSpec(data.input_dim, cfg.hidden_dims, data.num_classes, cfg.activation)
    clients = [ClientState(k, shard, cfg.train) for k, shard in enumerate(shards)]
    return Federation(spec, clients, init_params(spec, seeds["init"]))


def aggregation_weights(sample_counts: Sequence[int]) -> np.ndarray:
    n = np.asarray(sample_counts, dtype=np.float64)
    if n.size == 0:
        raise ConfigurationError("no updates to aggregate", "updates")
    total = n.sum()
    if total <= 0:
        raise ConfigurationError("all sample counts are zero", "updates")
    return n / total


def aggregate(global_w: np.ndarray, updates: Sequence[tuple[np.ndarray, int]]) -> np.ndarray:
    """w + sum_k p_k u_k with p_k = n_k / sum n."""
    if not updates:
        raise ConfigurationError("no updates to aggregate", "updates")
    w = np.asarray(global_w, dtype=np.float64)
    p = aggregation_weights([n for _, n in updates])
    step = np.zeros_like(w)
    for (u, _), pk in zip(updates, p):
        u = np.asarray(u, dtype=np.float64)
        if u.shape != w.shape:
            raise ConfigurationError("update dimension differs from the global model", "updates")
        step += pk * u
    return w + step


def client_accuracy(w: np.ndarray, spec: ModelSpec, data: Dataset) -> float:
    return float(np.mean(predict(w, spec, data.features) == data.labels))


def evaluate_global(w: np.ndarray, spec: ModelSpec, shards: Sequence[Dataset]) -> float:
    """Unweighted mean of per-client accuracies."""
    return float(np.mean([client_accuracy(w, spec, s) for s in shards]))


def run_experiment(
    cfg: ExperimentConfig,
    strategy: str,
    federation: Federation | None = None,
    on_round: Callable[[RoundRecord, dict[int, np.ndarray], ServerMaps | None], None] | None = None,
) -> RunResult:
    """Run up to ``cfg.rounds`` rounds of ``strategy``.

    ``on_round`` (if given) is called after each round's commit phase with the
    record, the round's updates by client id, and the server maps.
    """
    if strategy not in (FLRCE, FLRCE_NO_ES, RANDOM_FEDAVG):
        raise ConfigurationError(f"unknown strategy {strategy!r}", "strategy")
    fed = federation if federation is not None else build_federation(cfg)
    if len(fed.clients) != cfg.num_clients:
        raise ConfigurationError("federation size differs from num_clients", "experiment.num_clients")

    spec = fed.spec
    P = cfg.clients_per_round
    pool = list(range(cfg.num_clients))
    # same stream for every strategy so flrce/flrce_no_es replay identically
    rng = np.random.default_rng(_seeds(cfg.seed)["select"])
    relational = strategy != RANDOM_FEDAVG
    maps = ServerMaps(cfg.num_clients) if relational else None
    es_cfg = EsConfig(cfg.psi, enabled=strategy == FLRCE)
    per_round_bytes = round_bandwidth(P, spec.num_params, cfg.cost)

    w = fed.initial_w.copy()
    totals = ResourceTotals()
    records: list[RoundRecord] = []
    weight_sums: list[float] = []

    for t in range(1, cfg.rounds + 1):
        if relational:
            selected, mode = select_clients_h(maps.H, t, P, pool, cfg.explore, rng)
        else:
            selected, mode = random_p(P, pool, rng), RANDOM

        updates: dict[int, np.ndarray] = {}
        for k in selected:
            try:
                updates[k] = local_train(w, fed.clients[k], spec, seed=cfg.seed, round=t)
            except ClientSkip as exc:
                log.warning("round %d: %s", t, exc)
        if not updates:
            raise ConfigurationError(f"round {t}: no selected client could train", "data")
        ids = sorted(updates)

        if relational:
            for k in ids:
                maps.write(k, updates[k], w, t)

        counts = [fed.clients[k].num_samples for k in ids]
        weight_sums.append(float(aggregation_weights(counts).sum()))
        w_next = aggregate(w, [(updates[k], n) for k, n in zip(ids, counts)])

        if relational:
            for k in ids:
                update_relationships_g(k, updates[k], maps, w, t)
                maps.refresh_heuristic(k)

        ordered = [updates[k] for k in ids]
        conflicts = count_conflicts(ordered, P) if mode == EXPLOIT else None
        stop = len(ordered) == P and es_check(t, mode, ordered, P, es_cfg)

        energy = round_energy(counts, cfg.train.local_epochs, cfg.cost)
        totals.add(energy, per_round_bytes)
        records.append(
            RoundRecord(
                t=t,
                mode=mode,
                selected=tuple(selected),
                mean_accuracy=evaluate_global(w_next, spec, fed.shards),
                conflicts=conflicts,
                es_triggered=stop,
                energy_J=energy,
                bytes=per_round_bytes,
            )
        )
        if on_round is not None:
            on_round(records[-1], updates, maps)
        w = w_next
        if stop:
            log.info("%s: early stop at round %d (conflicts %.3f >= psi %.3f)", strategy, t, conflicts, cfg.psi)
            break

    return RunResult(strategy, records, w, totals, weight_sums, maps)
