"""Conflict-counting early stopping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, UndefinedSimilarity
from .relationship import cossim
from .selection import EXPLOIT


@dataclass(frozen=True)
class EsConfig:
    threshold: float = 2.0
    enabled: bool = True

    def __post_init__(self):
        if not self.threshold >= 0:
            raise ConfigurationError("must be >= 0", "earlystop.psi")


def count_conflicts(updates: Sequence[np.ndarray], P: int | None = None) -> float:
    """Ordered pairs with strictly negative cosine, divided by P.

    Zero-norm updates take part in no pair but still count towards P.
    """
    P = len(updates) if P is None else P
    if P < 1:
        raise ConfigurationError("must be >= 1", "P")
    total = 0
    n = len(updates)
    for i in range(n):
        for j in range(i + 1, n):
            try:
                c = cossim(updates[i], updates[j])
            except UndefinedSimilarity:
                continue
            if c < 0:
                total += 2  # (i, j) and (j, i)
    return total / P


def es_check(t: int, mode: str, updates: Sequence[np.ndarray], P: int, cfg: EsConfig) -> bool:
    if not cfg.enabled or mode != EXPLOIT:
        return False
    if len(updates) != P:
        raise ConfigurationError(f"expected {P} updates, got {len(updates)}", "updates")
    return count_conflicts(updates, P) >= cfg.threshold
