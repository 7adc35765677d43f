"""Pairwise client relationships from parameter updates.

Clients seen in the same (or the previous) round are related by the cosine
similarity of their updates. A stale client is related through geometry: its
old update, anchored at the global model it was computed from, defines a ray
towards its presumed local optimum, and we measure whether a fresh update
moves the current global model closer to or further from that ray.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UndefinedGeometry, UndefinedSimilarity

GEO_EPS = 1e-9


@dataclass(frozen=True)
class AnchoredUpdate:
    update: np.ndarray
    anchor: np.ndarray
    round: int

    def __post_init__(self):
        u = np.asarray(self.update, dtype=np.float64)
        a = np.asarray(self.anchor, dtype=np.float64)
        if u.shape != a.shape or u.ndim != 1:
            raise ConfigurationError("update and anchor must be 1-D of equal size", "anchored_update")
        if self.round < 1:
            raise ConfigurationError("must be >= 1", "anchored_update.round")
        object.__setattr__(self, "update", u)
        object.__setattr__(self, "anchor", a)


def _scaled(v: np.ndarray) -> tuple[np.ndarray, float]:
    # Divide by the max-abs entry so squares cannot overflow or underflow.
    s = float(np.max(np.abs(v))) if v.size else 0.0
    if s == 0.0 or not np.isfinite(s):
        return v, s
    return v / s, s


def cossim(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity clamped to [-1, 1]. Raises UndefinedSimilarity for a zero vector."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigurationError(f"dimension mismatch {a.shape} vs {b.shape}", "cossim")
    a, sa = _scaled(a)
    b, sb = _scaled(b)
    if sa == 0.0 or sb == 0.0:
        raise UndefinedSimilarity("cosine similarity of a zero-norm vector")
    c = float(a @ b) / (float(np.linalg.norm(a)) * float(np.linalg.norm(b)))
    return min(1.0, max(-1.0, c))


def orthdist(p: np.ndarray, line: AnchoredUpdate) -> float:
    """Distance from ``p`` to the line through ``line.anchor`` along ``line.update``."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != line.update.shape:
        raise ConfigurationError("point and line differ in dimension", "orthdist")
    u, su = _scaled(line.update)
    if su == 0.0:
        raise UndefinedGeometry("zero-length update defines no direction")
    u_hat = u / np.linalg.norm(u)
    r, sr = _scaled(p - line.anchor)
    if sr == 0.0:
        return 0.0
    resid = r - (r @ u_hat) * u_hat
    return float(np.linalg.norm(resid)) * sr


def relate_async(global_w: np.ndarray, u_p: np.ndarray, stored: AnchoredUpdate) -> float:
    """max(1 - d_p/d_o, -1) where d_o, d_p are distances to the stored ray before/after applying ``u_p``."""
    d_o = orthdist(global_w, stored)
    if d_o < GEO_EPS:
        raise UndefinedGeometry(f"global model lies on the stored ray (d_o={d_o:.3g})")
    d_p = orthdist(np.asarray(global_w, dtype=np.float64) + np.asarray(u_p, dtype=np.float64), stored)
    return max(1.0 - d_p / d_o, -1.0)


def heuristic_of(omega_row: np.ndarray, k: int | None = None) -> float:
    """Sum of a relationship row, skipping the self entry ``k`` when given."""
    row = np.asarray(omega_row, dtype=np.float64)
    total = float(row.sum())
    if k is not None:
        total -= float(row[k])
    return total


@dataclass
class ServerMaps:
    """Server-side state: heuristics H, last-active rounds R, anchored updates V, relationships omega."""

    num_clients: int
    omega: np.ndarray = field(init=False)
    H: np.ndarray = field(init=False)
    R: dict[int, int] = field(default_factory=dict)
    V: dict[int, AnchoredUpdate] = field(default_factory=dict)

    def __post_init__(self):
        self.omega = np.zeros((self.num_clients, self.num_clients))
        self.H = np.zeros(self.num_clients)

    def write(self, k: int, update: np.ndarray, anchor: np.ndarray, t: int) -> None:
        self.V[k] = AnchoredUpdate(np.array(update, dtype=np.float64), np.array(anchor, dtype=np.float64), t)
        self.R[k] = t

    def refresh_heuristic(self, k: int) -> float:
        self.H[k] = heuristic_of(self.omega[k], k)
        return float(self.H[k])


def update_relationships_g(
    k: int,
    u_k: np.ndarray,
    maps: ServerMaps,
    global_w: np.ndarray,
    t: int,
) -> np.ndarray:
    """Overwrite row ``k`` of omega against every other client that has a stored update.

    ``global_w`` is the model broadcast in round ``t``. Pairs whose kernel is
    undefined (zero-norm update, global model already on the stored ray) keep
    their previous value. Returns a copy of the new row.
    """
    u_k = np.asarray(u_k, dtype=np.float64)
    row = maps.omega[k]
    if not np.any(u_k):
        return row.copy()
    for j in sorted(maps.V):
        if j == k:
            continue
        stored = maps.V[j]
        try:
            if maps.R[j] >= t - 1:
                row[j] = cossim(stored.update, u_k)
            else:
                row[j] = relate_async(global_w, u_k, stored)
        except (UndefinedSimilarity, UndefinedGeometry):
            continue
    return row.copy()
