"""Round-based bandit policies: propose seeds, receive cascade feedback, update.

CwImLinUcb runs the confidence-weighted ridge recursion: every observed edge
sample is weighted by min{1, lambda / ||x_e||_{M^-1}} before entering the
Gram matrix, which bounds how much a corrupted stretch of feedback can bend
the estimate. ImLinUcb is the unweighted special case. CucbLearner and
EpsGreedyLearner estimate each edge independently from success counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .diffusion import CascadeFeedback
from .graph import Graph, GraphStats
from .linalg import SpdState
from .oracle import OracleSpec

SNAPSHOT_VERSION = 1


def _snapshot_path(path: str) -> str:
    # np.savez appends .npz when missing; normalize so save/restore agree
    return path if path.endswith(".npz") else path + ".npz"


class LearnerError(ValueError):
    """Invalid learner parameters or malformed feedback."""


@dataclass(frozen=True)
class CwParams:
    """Hyper-parameters of the confidence-weighted learner.

    lam and beta may be given explicitly; leaving either as None selects the
    theory value: lam = sqrt(d) / (c_bar * e_c) (infinite when c_bar * e_c
    is zero, making every weight 1) and beta the confidence radius

        sigma^-2 sqrt(d log(1 + e_star T / d) + 2 log(n T))
        + sigma^-2 lam e_c c_bar + theta_bound

    whose middle term drops out when there is no assumed corruption budget.
    """

    sigma: float = 1.0
    lam: Optional[float] = None
    beta: Optional[float] = None
    c_bar: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise LearnerError(f"sigma must be > 0, got {self.sigma}")
        if self.c_bar < 0:
            raise LearnerError(f"c_bar must be >= 0, got {self.c_bar}")

    @property
    def lambda_auto(self) -> bool:
        return self.lam is None

    @property
    def beta_auto(self) -> bool:
        return self.beta is None


def beta_base(sigma: float, d: int, n: int, horizon: int, e_star: int) -> float:
    """Corruption-free part of the confidence radius (without theta bound)."""
    return math.sqrt(d * math.log(1.0 + e_star * horizon / d) + 2.0 * math.log(n * horizon)) / sigma**2


def resolve_cw_params(
    params: CwParams,
    stats: GraphStats,
    d: int,
    n: int,
    horizon: int,
    theta_bound: float,
) -> tuple[float, float]:
    """Concrete (lam, beta) for CwImLinUcb on a given graph and horizon."""
    if params.lam is not None:
        lam = params.lam
    elif params.c_bar * stats.e_c == 0:
        lam = math.inf
    else:
        lam = math.sqrt(d) / (params.c_bar * stats.e_c)
    if params.beta is not None:
        beta = params.beta
    else:
        corruption = 0.0
        if math.isfinite(lam) and params.c_bar * stats.e_c > 0:
            corruption = lam * stats.e_c * params.c_bar / params.sigma**2
        beta = beta_base(params.sigma, d, n, horizon, stats.e_star) + corruption + theta_bound
    return lam, beta


def resolve_imlinucb_params(
    params: CwParams,
    stats: GraphStats,
    d: int,
    n: int,
    horizon: int,
    theta_bound: float,
) -> tuple[float, float]:
    """Concrete (lam, beta) for ImLinUcb: all weights 1, no corruption term."""
    beta = params.beta
    if beta is None:
        beta = beta_base(params.sigma, d, n, horizon, stats.e_star) + theta_bound
    return math.inf, beta


class CwImLinUcb:
    """Confidence-weighted linear UCB over edge features.

    State: Gram matrix M (starts at identity), summary vector b, estimate
    theta_hat, and the UCB probability vector p_hat (starts at all ones).
    """

    kind = "cw"

    def __init__(self, x: np.ndarray, sigma: float, lam: float, beta: float):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise LearnerError(f"feature matrix must be 2-d, got shape {x.shape}")
        if sigma <= 0:
            raise LearnerError(f"sigma must be > 0, got {sigma}")
        if lam <= 0:
            raise LearnerError(f"lambda must be > 0, got {lam}")
        if beta < 0:
            raise LearnerError(f"beta must be >= 0, got {beta}")
        self.x = x
        self.m_edges, self.d = x.shape
        self.sigma = float(sigma)
        self.lam = float(lam)
        self.beta = float(beta)
        self.spd = SpdState(self.d)
        self.b = np.zeros(self.d)
        self.theta_hat = np.zeros(self.d)
        self.p_hat = np.ones(self.m_edges)

    def propose_seeds(
        self,
        g: Graph,
        k: int,
        oracle: OracleSpec,
        rng: Optional[np.random.Generator] = None,
    ) -> tuple[int, ...]:
        return oracle.select(g, k, self.p_hat, rng)

    def update(self, feedback: CascadeFeedback, t: int) -> None:
        eids = sorted(feedback.observed_edges)
        if eids and not (0 <= eids[0] and eids[-1] < self.m_edges):
            raise LearnerError(f"feedback references edge outside 0..{self.m_edges - 1}")
        if eids:
            # all weights are taken against the Gram state at the start of
            # the round, then updates apply in ascending edge-id order
            norms = self.spd.mahalanobis_inv_norms(self.x[eids])
            inv_sigma_sq = 1.0 / self.sigma**2
            for eid, norm in zip(eids, norms):
                w = 1.0 if norm <= self.lam else self.lam / norm
                xe = self.x[eid]
                if feedback.outcomes[eid]:
                    self.b = self.b + w * xe
                self.spd.rank1_update(xe, inv_sigma_sq * w)
        self.theta_hat = self.spd.solve_theta(self.b, self.sigma)
        self._recompute_p_hat()

    def _recompute_p_hat(self) -> None:
        ucb = self.x @ self.theta_hat + self.beta * self.spd.mahalanobis_inv_norms(self.x)
        self.p_hat = np.clip(ucb, 0.0, 1.0)

    def confidence_violations(self, theta: np.ndarray) -> int:
        """Count edges whose true mean escapes the current confidence interval."""
        gap = np.abs(self.x @ (self.theta_hat - theta))
        radius = self.beta * self.spd.mahalanobis_inv_norms(self.x)
        return int(np.sum(gap > radius))

    def save(self, path: str) -> None:
        np.savez(
            _snapshot_path(path),
            version=SNAPSHOT_VERSION,
            kind=self.kind,
            sigma=self.sigma,
            lam=self.lam,
            beta=self.beta,
            m=self.spd.m,
            m_inv=self.spd.m_inv,
            spd_updates=self.spd.updates,
            b=self.b,
            theta_hat=self.theta_hat,
            p_hat=self.p_hat,
        )

    @classmethod
    def restore(cls, path: str, x: np.ndarray) -> "CwImLinUcb":
        data = np.load(_snapshot_path(path))
        _check_snapshot(data, cls.kind)
        out = cls(x, float(data["sigma"]), float(data["lam"]), float(data["beta"]))
        out.spd.m = data["m"]
        out.spd.m_inv = data["m_inv"]
        out.spd.updates = int(data["spd_updates"])
        out.b = data["b"]
        out.theta_hat = data["theta_hat"]
        out.p_hat = data["p_hat"]
        return out


class ImLinUcb(CwImLinUcb):
    """Unweighted linear UCB: the lam -> infinity reduction of CwImLinUcb."""

    kind = "imlinucb"

    def __init__(self, x: np.ndarray, sigma: float, beta: float):
        super().__init__(x, sigma, math.inf, beta)

    @classmethod
    def restore(cls, path: str, x: np.ndarray) -> "ImLinUcb":
        data = np.load(_snapshot_path(path))
        _check_snapshot(data, cls.kind)
        out = cls(x, float(data["sigma"]), float(data["beta"]))
        out.spd.m = data["m"]
        out.spd.m_inv = data["m_inv"]
        out.spd.updates = int(data["spd_updates"])
        out.b = data["b"]
        out.theta_hat = data["theta_hat"]
        out.p_hat = data["p_hat"]
        return out


class CucbLearner:
    """Per-edge UCB from success counts; unobserved edges stay at p_hat = 1."""

    kind = "cucb"

    def __init__(self, m_edges: int):
        self.m_edges = m_edges
        self.n_obs = np.zeros(m_edges, dtype=np.int64)
        self.n_succ = np.zeros(m_edges, dtype=np.int64)
        self.p_hat = np.ones(m_edges)

    def propose_seeds(
        self,
        g: Graph,
        k: int,
        oracle: OracleSpec,
        rng: Optional[np.random.Generator] = None,
    ) -> tuple[int, ...]:
        return oracle.select(g, k, self.p_hat, rng)

    def update(self, feedback: CascadeFeedback, t: int) -> None:
        if t < 1:
            raise LearnerError(f"round index must be >= 1, got {t}")
        for eid in feedback.observed_edges:
            self.n_obs[eid] += 1
            self.n_succ[eid] += feedback.outcomes[eid]
        seen = self.n_obs > 0
        bonus = np.sqrt(3.0 * math.log(t) / (2.0 * self.n_obs[seen]))
        self.p_hat[seen] = np.clip(self.n_succ[seen] / self.n_obs[seen] + bonus, 0.0, 1.0)

    def save(self, path: str) -> None:
        np.savez(
            _snapshot_path(path),
            version=SNAPSHOT_VERSION,
            kind=self.kind,
            n_obs=self.n_obs,
            n_succ=self.n_succ,
            p_hat=self.p_hat,
        )

    @classmethod
    def restore(cls, path: str) -> "CucbLearner":
        data = np.load(_snapshot_path(path))
        _check_snapshot(data, cls.kind)
        out = cls(len(data["p_hat"]))
        out.n_obs = data["n_obs"]
        out.n_succ = data["n_succ"]
        out.p_hat = data["p_hat"]
        return out


class EpsGreedyLearner:
    """Empirical-mean exploitation with epsilon-probability random seed sets."""

    kind = "eps_greedy"

    def __init__(self, m_edges: int, epsilon: float = 0.1, prior: float = 0.5):
        if not (0.0 <= epsilon <= 1.0):
            raise LearnerError(f"epsilon must lie in [0,1], got {epsilon}")
        self.m_edges = m_edges
        self.epsilon = epsilon
        self.prior = prior
        self.n_obs = np.zeros(m_edges, dtype=np.int64)
        self.n_succ = np.zeros(m_edges, dtype=np.int64)
        self.p_hat = np.full(m_edges, prior)

    def propose_seeds(
        self,
        g: Graph,
        k: int,
        oracle: OracleSpec,
        rng: Optional[np.random.Generator] = None,
    ) -> tuple[int, ...]:
        if rng is None:
            rng = np.random.default_rng(0)
        if rng.random() < self.epsilon:
            return tuple(sorted(int(v) for v in rng.choice(g.n, size=k, replace=False)))
        return oracle.select(g, k, self.p_hat, rng)

    def update(self, feedback: CascadeFeedback, t: int) -> None:
        for eid in feedback.observed_edges:
            self.n_obs[eid] += 1
            self.n_succ[eid] += feedback.outcomes[eid]
        seen = self.n_obs > 0
        self.p_hat[seen] = self.n_succ[seen] / self.n_obs[seen]

    def save(self, path: str) -> None:
        np.savez(
            _snapshot_path(path),
            version=SNAPSHOT_VERSION,
            kind=self.kind,
            epsilon=self.epsilon,
            prior=self.prior,
            n_obs=self.n_obs,
            n_succ=self.n_succ,
            p_hat=self.p_hat,
        )

    @classmethod
    def restore(cls, path: str) -> "EpsGreedyLearner":
        data = np.load(_snapshot_path(path))
        _check_snapshot(data, cls.kind)
        out = cls(len(data["p_hat"]), float(data["epsilon"]), float(data["prior"]))
        out.n_obs = data["n_obs"]
        out.n_succ = data["n_succ"]
        out.p_hat = data["p_hat"]
        return out


Learner = Union[CwImLinUcb, ImLinUcb, CucbLearner, EpsGreedyLearner]


def _check_snapshot(data, kind: str) -> None:
    if int(data["version"]) != SNAPSHOT_VERSION:
        raise LearnerError(f"unsupported snapshot version {data['version']}")
    if str(data["kind"]) != kind:
        raise LearnerError(f"snapshot is for {data['kind']}, expected {kind}")
