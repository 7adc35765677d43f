"""Federated learning with relationship-based client selection and conflict-driven early stopping."""

from .accounting import CostModel, ResourceTotals, efficiency, round_bandwidth, round_energy
from .config import DataSpec, ExperimentConfig, dump_config, load_config, parse_config
from .data import Dataset, PartitionSpec, generate_synthetic, load_csv, partition_dirichlet, save_csv
from .earlystop import EsConfig, count_conflicts, es_check
from .errors import (
    ClientSkip,
    ConfigurationError,
    ParseError,
    UndefinedEfficiency,
    UndefinedGeometry,
    UndefinedSimilarity,
)
from .model import ClientState, ModelSpec, TrainConfig, forward_loss, gradient, init_params, local_train
from .orchestrator import RoundRecord, RunResult, aggregate, build_federation, evaluate_global, run_experiment
from .relationship import (
    AnchoredUpdate,
    ServerMaps,
    cossim,
    heuristic_of,
    orthdist,
    relate_async,
    update_relationships_g,
)
from .selection import ExploreSchedule, explore_prob, select_clients_h

__version__ = "0.1.0"
