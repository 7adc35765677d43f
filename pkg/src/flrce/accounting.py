"""Simulated energy and bandwidth costs, and accuracy-per-resource efficiency."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import ConfigurationError, UndefinedEfficiency


@dataclass(frozen=True)
class CostModel:
    """Linear energy model plus fixed-width parameter encoding.

    ``bytes_per_param`` defaults to 4 (float32 on the wire).
    """

    joules_per_sample_epoch: float = 0.01
    bytes_per_param: int = 4
    overhead_bytes_per_message: int = 0

    def __post_init__(self):
        if self.joules_per_sample_epoch < 0:
            raise ConfigurationError("must be >= 0", "cost.joules_per_sample_epoch")
        if self.bytes_per_param < 0:
            raise ConfigurationError("must be >= 0", "cost.bytes_per_param")
        if self.overhead_bytes_per_message < 0:
            raise ConfigurationError("must be >= 0", "cost.overhead_bytes_per_message")


@dataclass
class ResourceTotals:
    energy_J: float = 0.0
    bytes: int = 0
    rounds: int = 0

    def add(self, energy_J: float, nbytes: int) -> None:
        self.energy_J += energy_J
        self.bytes += int(nbytes)
        self.rounds += 1


def round_bandwidth(P: int, d: int, cm: CostModel) -> int:
    """Download plus upload of a d-parameter model for each of P clients."""
    if P < 1 or d < 1:
        raise ConfigurationError("P and d must be >= 1", "round_bandwidth")
    return 2 * P * d * cm.bytes_per_param + 2 * P * cm.overhead_bytes_per_message


def round_energy(sample_counts: Iterable[int], E: int, cm: CostModel) -> float:
    return sum(cm.joules_per_sample_epoch * E * n for n in sample_counts)


def efficiency(final_accuracy: float, totals: ResourceTotals) -> tuple[float, float]:
    """(accuracy / joules, accuracy / bytes)."""
    if totals.energy_J <= 0 or totals.bytes <= 0:
        raise UndefinedEfficiency(
            f"efficiency needs positive totals (energy={totals.energy_J}, bytes={totals.bytes})"
        )
    return final_accuracy / totals.energy_J, final_accuracy / totals.bytes


def normalize(values: dict[str, float]) -> dict[str, float]:
    """Scale so the best entry is 1.0 (all zeros stay zeros)."""
    top = max(values.values(), default=0.0)
    if top <= 0:
        return {k: 0.0 for k in values}
    return {k: v / top for k, v in values.items()}
