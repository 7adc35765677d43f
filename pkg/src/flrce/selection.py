"""Explore/exploit client selection driven by heuristic values."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

EXPLORE = "explore"
EXPLOIT = "exploit"


@dataclass(frozen=True)
class ExploreSchedule:
    initial_prob: float = 1.0
    decay: float = 0.98

    def __post_init__(self):
        if not 0.0 <= self.initial_prob <= 1.0:
            raise ConfigurationError("must lie in [0, 1]", "selection.initial_prob")
        if not 0.0 < self.decay <= 1.0:
            raise ConfigurationError("must lie in (0, 1]", "selection.decay")


def explore_prob(t: int, sched: ExploreSchedule) -> float:
    if t < 1:
        raise ConfigurationError("rounds are numbered from 1", "t")
    return sched.initial_prob * sched.decay ** (t - 1)


def top_p(H: np.ndarray, P: int, pool: Sequence[int]) -> list[int]:
    """The P pool members with the largest H, ties to the smaller id."""
    ranked = sorted(pool, key=lambda k: (-float(H[k]), k))
    return sorted(ranked[:P])


def random_p(P: int, pool: Sequence[int], rng: np.random.Generator) -> list[int]:
    """P distinct pool members drawn uniformly without replacement."""
    pool = sorted(pool)
    if P > len(pool):
        raise ConfigurationError(f"cannot pick {P} clients from a pool of {len(pool)}", "P")
    picked = rng.choice(len(pool), size=P, replace=False)
    return sorted(pool[i] for i in picked)


def select_clients_h(
    H: np.ndarray,
    t: int,
    P: int,
    pool: Sequence[int],
    sched: ExploreSchedule,
    rng: np.random.Generator,
) -> tuple[list[int], str]:
    """One explore/exploit coin per round, then random or top-heuristic selection.

    Returns the selected ids (ascending) and the round's mode.
    """
    if P < 1 or P > len(pool):
        raise ConfigurationError(f"need 1 <= P <= |pool| (P={P}, |pool|={len(pool)})", "P")
    if rng.random() < explore_prob(t, sched):
        return random_p(P, pool, rng), EXPLORE
    return top_p(H, P, pool), EXPLOIT
