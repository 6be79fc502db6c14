"""Ground-truth activation probabilities and corruption schedules.

Normal users activate out-neighbors with probability x_e . theta (a linear
model over known edge features). Corrupted users perturb their out-edge
probabilities during the first `rounds` rounds according to a strategy;
afterwards they act normally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import Graph

STRATEGIES = ("flip", "none")


class ModelError(ValueError):
    """Invalid environment parameters or malformed model file."""


class LinearActivationModel:
    """Per-edge feature vectors and a hidden coefficient vector.

    x has shape (m, d) with unit-norm rows; theta has shape (d,) and is
    scaled so every x_e . theta lies in [0, 1]. theta_bound is ||theta||_2.
    """

    def __init__(self, x: np.ndarray, theta: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        theta = np.asarray(theta, dtype=np.float64)
        if x.ndim != 2 or theta.ndim != 1 or x.shape[1] != theta.shape[0]:
            raise ModelError(
                f"shape mismatch: x {x.shape} vs theta {theta.shape}"
            )
        self.x = x
        self.theta = theta
        self.m, self.d = x.shape
        self.theta_bound = float(np.linalg.norm(theta))
        self._probs = x @ theta
        if self.m and (self._probs.min() < -1e-12 or self._probs.max() > 1 + 1e-12):
            raise ModelError("x_e . theta must lie in [0,1] for every edge")
        np.clip(self._probs, 0.0, 1.0, out=self._probs)

    def true_probs(self) -> np.ndarray:
        """Vector of uncorrupted activation probabilities (length m)."""
        return self._probs.copy()


def gen_model(
    g: Graph,
    d: int,
    rng_seed,
    mean_prob: Optional[float] = None,
) -> LinearActivationModel:
    """Draw a random linear activation model for the edges of g.

    Every coordinate of every feature vector and of theta is i.i.d. uniform
    on (0, 0.1). Feature vectors are then scaled to unit L2 norm, and theta
    is scaled down, if needed, so that max_e x_e . theta <= 1 (theta is never
    scaled up). With mean_prob set, theta is instead calibrated so the
    average edge probability hits that target, still capped so no edge
    exceeds probability 1.
    """
    if d < 1:
        raise ModelError(f"feature dimension must be >= 1, got {d}")
    if mean_prob is not None and not (0.0 < mean_prob <= 1.0):
        raise ModelError(f"mean_prob must lie in (0,1], got {mean_prob}")
    rng = np.random.default_rng(rng_seed)
    x = rng.uniform(0.0, 0.1, size=(g.m, d))
    theta = rng.uniform(0.0, 0.1, size=d)
    if g.m:
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        # a uniform draw on (0,0.1)^d is never the zero vector in practice,
        # but guard the division anyway
        norms[norms == 0.0] = 1.0
        x = x / norms
        probs = x @ theta
        if mean_prob is not None and probs.mean() > 0:
            theta = theta * (mean_prob / probs.mean())
            probs = x @ theta
        peak = probs.max()
        if peak > 1.0:
            theta = theta / peak
    return LinearActivationModel(x, theta)


@dataclass(frozen=True)
class CorruptionSchedule:
    """Which users are corrupted, how, and for how long.

    strategy 'flip' replaces each corrupted out-edge probability p with
    max(0, floor - p) for rounds t <= rounds; 'none' never perturbs.
    """

    corrupted_users: frozenset[int] = frozenset()
    strategy: str = "none"
    rounds: int = 0
    floor: float = 0.05

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ModelError(f"unknown corruption strategy {self.strategy!r}")
        if self.rounds < 0:
            raise ModelError(f"corruption horizon must be >= 0, got {self.rounds}")


@dataclass(frozen=True)
class CorruptionBudget:
    """Per-user corruption budgets C_u and their maximum C."""

    per_user: dict[int, float]
    max_budget: float


def true_prob(model: LinearActivationModel, e: int) -> float:
    """Uncorrupted activation probability x_e . theta of edge e."""
    if not (0 <= e < model.m):
        raise ModelError(f"edge id {e} out of range for m={model.m}")
    return float(model._probs[e])


def _corrupted_edge_probs(
    model: LinearActivationModel, schedule: CorruptionSchedule, g: Graph
) -> np.ndarray:
    """Edge probability vector while the corruption window is active."""
    probs = model.true_probs()
    if schedule.strategy == "flip" and schedule.corrupted_users:
        mask = np.isin(g.tail, np.fromiter(schedule.corrupted_users, dtype=np.int64))
        probs[mask] = np.maximum(0.0, schedule.floor - probs[mask])
    return probs


def probs_at_round(
    model: LinearActivationModel, schedule: CorruptionSchedule, g: Graph, t: int
) -> np.ndarray:
    """Edge probability vector in effect at round t (1-based)."""
    if t < 1:
        raise ModelError(f"round index must be >= 1, got {t}")
    if schedule.strategy == "none" or t > schedule.rounds:
        return model.true_probs()
    return _corrupted_edge_probs(model, schedule, g)


def prob_at(
    model: LinearActivationModel,
    schedule: CorruptionSchedule,
    g: Graph,
    e: int,
    t: int,
) -> float:
    """Activation probability of edge e at round t under the schedule."""
    if t < 1:
        raise ModelError(f"round index must be >= 1, got {t}")
    p = true_prob(model, e)
    if schedule.strategy == "none" or t > schedule.rounds:
        return p
    if int(g.tail[e]) not in schedule.corrupted_users:
        return p
    return max(0.0, schedule.floor - p)


def total_budget(
    model: LinearActivationModel,
    schedule: CorruptionSchedule,
    g: Graph,
    horizon: int,
) -> CorruptionBudget:
    """Corruption budgets over rounds 1..horizon.

    A user's per-round corruption level is the largest absolute perturbation
    applied to any of its out-edges that round; C_u sums these levels and C
    is the maximum over users. The sum runs round by round so it matches a
    bookkeeping pass over an actual experiment bit for bit.
    """
    if horizon < 1:
        raise ModelError(f"horizon must be >= 1, got {horizon}")
    base = model.true_probs()
    per_user = {u: 0.0 for u in schedule.corrupted_users}
    if schedule.strategy != "none":
        corrupted = _corrupted_edge_probs(model, schedule, g)
        delta = np.abs(corrupted - base)
        for u in schedule.corrupted_users:
            eids = g.out_adj[u]
            if not eids:
                continue
            level = float(delta[eids].max())
            total = 0.0
            for _ in range(min(schedule.rounds, horizon)):
                total += level
            per_user[u] = total
    max_budget = max(per_user.values()) if per_user else 0.0
    return CorruptionBudget(per_user=per_user, max_budget=max_budget)


MODEL_FORMAT_VERSION = 1


def save_model(model: LinearActivationModel, path: str) -> None:
    """Write a model to a text sidecar file (exact float round-trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"cwim-model {MODEL_FORMAT_VERSION}\n")
        fh.write(f"dims {model.m} {model.d}\n")
        fh.write("theta " + " ".join("%.17g" % v for v in model.theta) + "\n")
        for eid in range(model.m):
            fh.write(
                f"edge {eid} " + " ".join("%.17g" % v for v in model.x[eid]) + "\n"
            )


def load_model(path: str) -> LinearActivationModel:
    """Read a model written by save_model."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "cwim-model":
            raise ModelError(f"{path}: not a model file")
        if int(header[1]) != MODEL_FORMAT_VERSION:
            raise ModelError(f"{path}: unsupported version {header[1]}")
        tag, m_s, d_s = fh.readline().split()
        if tag != "dims":
            raise ModelError(f"{path}: missing dims line")
        m, d = int(m_s), int(d_s)
        parts = fh.readline().split()
        if parts[0] != "theta" or len(parts) != d + 1:
            raise ModelError(f"{path}: malformed theta line")
        theta = np.array([float(v) for v in parts[1:]])
        x = np.zeros((m, d))
        for _ in range(m):
            parts = fh.readline().split()
            if len(parts) != d + 2 or parts[0] != "edge":
                raise ModelError(f"{path}: malformed edge line")
            x[int(parts[1])] = [float(v) for v in parts[2:]]
    return LinearActivationModel(x, theta)
