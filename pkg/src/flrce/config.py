"""Experiment configuration: dataclasses plus an INI reader/writer.

File layout (every key optional; defaults are the desk-scale profile)::

    [experiment]
    rounds = 100
    num_clients = 20
    clients_per_round = 4
    seed = 0
    strategies = flrce, flrce_no_es, random_fedavg

    [train]
    learning_rate = 0.5
    local_epochs = 5
    batch_size = 16

    [model]
    hidden_dims = 16
    activation = tanh

    [data]
    source = synthetic          ; or csv
    classes = 4
    per_class = 500
    input_dim = 8
    spread = 0.5
    csv_path =
    label_column =

    [partition]
    alpha = 0.1

    [selection]
    initial_prob = 1.0
    decay = 0.98

    [earlystop]
    psi = 2.0                   ; defaults to clients_per_round / 2

    [cost]
    joules_per_sample_epoch = 0.01
    bytes_per_param = 4
    overhead_bytes_per_message = 0
"""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .accounting import CostModel
from .errors import ConfigurationError
from .model import TrainConfig
from .selection import ExploreSchedule

STRATEGIES = ("flrce", "flrce_no_es", "random_fedavg")
# tanh with a large step keeps the synthetic task learnable within a few dozen rounds
DESK_TRAIN = TrainConfig(learning_rate=0.5, local_epochs=5, batch_size=16)


@dataclass(frozen=True)
class DataSpec:
    source: str = "synthetic"
    classes: int = 4
    per_class: int = 500
    input_dim: int = 8
    spread: float = 0.5
    csv_path: str = ""
    label_column: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    rounds: int = 100
    num_clients: int = 20
    clients_per_round: int = 4
    seed: int = 0
    strategies: tuple[str, ...] = STRATEGIES
    train: TrainConfig = field(default_factory=lambda: DESK_TRAIN)
    hidden_dims: tuple[int, ...] = (16,)
    activation: str = "tanh"
    data: DataSpec = field(default_factory=DataSpec)
    alpha: float = 0.1
    explore: ExploreSchedule = field(default_factory=ExploreSchedule)
    psi: float | None = None
    cost: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if self.psi is None:
            object.__setattr__(self, "psi", self.clients_per_round / 2)
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        self.validate()

    def validate(self) -> None:
        if self.rounds < 1:
            raise ConfigurationError("must be >= 1", "experiment.rounds")
        if self.num_clients < 2:
            raise ConfigurationError("must be >= 2", "experiment.num_clients")
        if not 1 <= self.clients_per_round <= self.num_clients:
            raise ConfigurationError(
                f"must satisfy 1 <= clients_per_round <= num_clients ({self.num_clients})",
                "experiment.clients_per_round",
            )
        if not self.strategies:
            raise ConfigurationError("at least one strategy required", "experiment.strategies")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigurationError(f"unknown strategy {s!r}; choose from {STRATEGIES}", "experiment.strategies")
        if len(set(self.strategies)) != len(self.strategies):
            raise ConfigurationError("duplicate strategy", "experiment.strategies")
        if not self.alpha > 0:
            raise ConfigurationError("must be > 0", "partition.alpha")
        if self.psi < 0:
            raise ConfigurationError("must be >= 0", "earlystop.psi")
        if self.activation not in ("relu", "tanh"):
            raise ConfigurationError("must be relu or tanh", "model.activation")
        if any(h < 1 for h in self.hidden_dims):
            raise ConfigurationError("widths must be >= 1", "model.hidden_dims")
        d = self.data
        if d.source == "synthetic":
            if d.classes < 2:
                raise ConfigurationError("must be >= 2", "data.classes")
            if d.per_class < 1:
                raise ConfigurationError("must be >= 1", "data.per_class")
            if d.input_dim < 1:
                raise ConfigurationError("must be >= 1", "data.input_dim")
            if d.spread < 0:
                raise ConfigurationError("must be >= 0", "data.spread")
            if d.classes * d.per_class < self.num_clients:
                raise ConfigurationError(
                    "fewer samples than clients", "data.per_class"
                )
        elif d.source == "csv":
            if not d.csv_path:
                raise ConfigurationError("required when source = csv", "data.csv_path")
        else:
            raise ConfigurationError("must be synthetic or csv", "data.source")

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def _get(parser: configparser.ConfigParser, section: str, key: str, kind, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    if kind is str:
        return raw
    if raw == "":
        return default
    try:
        if kind is bool:
            return parser.getboolean(section, key)
        return kind(raw)
    except ValueError:
        raise ConfigurationError(f"cannot parse {raw!r} as {kind.__name__}", f"{section}.{key}") from None


def _split(raw: str) -> list[str]:
    return [p.strip() for p in raw.split(",") if p.strip()]


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(str(exc).splitlines()[0], "config") from None
    known = {"experiment", "train", "model", "data", "partition", "selection", "earlystop", "cost"}
    for section in parser.sections():
        if section not in known:
            raise ConfigurationError(f"unknown section; expected one of {sorted(known)}", section)

    dflt_train, dflt_data, dflt_sched, dflt_cost = DESK_TRAIN, DataSpec(), ExploreSchedule(), CostModel()
    g = lambda s, k, kind, d: _get(parser, s, k, kind, d)  # noqa: E731

    strategies = g("experiment", "strategies", str, None)
    hidden = g("model", "hidden_dims", str, None)
    try:
        hidden_dims = tuple(int(h) for h in _split(hidden)) if hidden is not None else (16,)
    except ValueError:
        raise ConfigurationError(f"cannot parse {hidden!r} as comma-separated ints", "model.hidden_dims") from None
    psi = g("earlystop", "psi", float, None)
    return ExperimentConfig(
        rounds=g("experiment", "rounds", int, 100),
        num_clients=g("experiment", "num_clients", int, 20),
        clients_per_round=g("experiment", "clients_per_round", int, 4),
        seed=g("experiment", "seed", int, 0),
        strategies=tuple(_split(strategies)) if strategies is not None else STRATEGIES,
        train=TrainConfig(
            learning_rate=g("train", "learning_rate", float, dflt_train.learning_rate),
            local_epochs=g("train", "local_epochs", int, dflt_train.local_epochs),
            batch_size=g("train", "batch_size", int, dflt_train.batch_size),
        ),
        hidden_dims=hidden_dims,
        activation=g("model", "activation", str, "tanh"),
        data=DataSpec(
            source=g("data", "source", str, dflt_data.source),
            classes=g("data", "classes", int, dflt_data.classes),
            per_class=g("data", "per_class", int, dflt_data.per_class),
            input_dim=g("data", "input_dim", int, dflt_data.input_dim),
            spread=g("data", "spread", float, dflt_data.spread),
            csv_path=g("data", "csv_path", str, dflt_data.csv_path),
            label_column=g("data", "label_column", str, dflt_data.label_column),
        ),
        alpha=g("partition", "alpha", float, 0.1),
        explore=ExploreSchedule(
            initial_prob=g("selection", "initial_prob", float, dflt_sched.initial_prob),
            decay=g("selection", "decay", float, dflt_sched.decay),
        ),
        psi=psi,
        cost=CostModel(
            joules_per_sample_epoch=g("cost", "joules_per_sample_epoch", float, dflt_cost.joules_per_sample_epoch),
            bytes_per_param=g("cost", "bytes_per_param", int, dflt_cost.bytes_per_param),
            overhead_bytes_per_message=g("cost", "overhead_bytes_per_message", int, dflt_cost.overhead_bytes_per_message),
        ),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"no such file: {path}", "--config")
    return parse_config(path.read_text(encoding="utf-8"))


def dump_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser()
    parser["experiment"] = {
        "rounds": str(cfg.rounds),
        "num_clients": str(cfg.num_clients),
        "clients_per_round": str(cfg.clients_per_round),
        "seed": str(cfg.seed),
        "strategies": ", ".join(cfg.strategies),
    }
    parser["train"] = {k: repr(v) for k, v in asdict(cfg.train).items()}
    parser["model"] = {"hidden_dims": ", ".join(map(str, cfg.hidden_dims)), "activation": cfg.activation}
    parser["data"] = {k: (v if isinstance(v, str) else repr(v)) for k, v in asdict(cfg.data).items()}
    parser["partition"] = {"alpha": repr(cfg.alpha)}
    parser["selection"] = {k: repr(v) for k, v in asdict(cfg.explore).items()}
    parser["earlystop"] = {"psi": repr(cfg.psi)}
    parser["cost"] = {k: repr(v) for k, v in asdict(cfg.cost).items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = asdict(cfg)
    out["strategies"] = list(cfg.strategies)
    out["hidden_dims"] = list(cfg.hidden_dims)
    return out
