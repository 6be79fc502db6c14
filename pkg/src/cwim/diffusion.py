"""Independent-cascade simulation with edge-level feedback, plus spread estimators.

A cascade starts from a seed set; each node activates at most once, and on
first activation every out-edge fires one independent coin with the edge's
probability. The learner observes the outcome bit of every out-edge of every
activated node (edge semi-bandit feedback) and nothing else.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .graph import Graph


class DiffusionError(ValueError):
    """Invalid simulation parameters."""


@dataclass
class CascadeFeedback:
    """One round's observation: activated nodes, observed edges, outcome bits.

    observed_edges holds exactly the out-edges of activated nodes, and
    outcomes maps each observed edge id to its coin result (0 or 1).
    """

    activated: set[int]
    observed_edges: set[int]
    outcomes: dict[int, int]


@dataclass
class SpreadEstimate:
    mean: float
    std: float
    values: Optional[np.ndarray] = None


def simulate_cascade(
    g: Graph,
    probs: np.ndarray,
    seeds: Iterable[int],
    rng: np.random.Generator,
    coupling: Optional[np.ndarray] = None,
) -> CascadeFeedback:
    """Run one independent cascade from `seeds` and collect edge feedback.

    Activation spreads breadth first (FIFO); when a node first activates, its
    out-edges fire coins in ascending edge-id order, drawing uniforms from
    `rng`. If `coupling` (a length-m uniform vector) is given, edge e fires
    iff coupling[e] < probs[e] instead, which lets callers reuse one vector
    across cascades for common-random-number pairing.
    """
    seed_list = sorted(set(int(s) for s in seeds))
    if not seed_list:
        raise DiffusionError("seed set must be non-empty")
    if seed_list[0] < 0 or seed_list[-1] >= g.n:
        raise DiffusionError(f"seed out of range for n={g.n}")

    activated = set(seed_list)
    observed: set[int] = set()
    outcomes: dict[int, int] = {}
    queue = deque(seed_list)
    out_adj = g.out_adj
    edges = g.edges
    while queue:
        u = queue.popleft()
        eids = out_adj[u]
        if not eids:
            continue
        if coupling is None:
            draws = rng.random(len(eids))
        else:
            draws = coupling[eids]
        for eid, draw in zip(eids, draws):
            hit = bool(draw < probs[eid])
            observed.add(eid)
            outcomes[eid] = int(hit)
            if hit:
                v = edges[eid][1]
                if v not in activated:
                    activated.add(v)
                    queue.append(v)
    return CascadeFeedback(activated=activated, observed_edges=observed, outcomes=outcomes)


def estimate_spread(
    g: Graph,
    probs: np.ndarray,
    seeds: Iterable[int],
    samples: int,
    rng: np.random.Generator,
    keep_values: bool = False,
) -> SpreadEstimate:
    """Monte-Carlo estimate of the expected activated-set size.

    Returns the sample mean and sample standard deviation over `samples`
    independent cascades; with keep_values the per-sample sizes are returned
    too so callers can pair samples across alternatives.
    """
    if samples < 1:
        raise DiffusionError(f"samples must be >= 1, got {samples}")
    seed_list = list(seeds)
    sizes = np.empty(samples, dtype=np.float64)
    for i in range(samples):
        fb = simulate_cascade(g, probs, seed_list, rng)
        sizes[i] = len(fb.activated)
    std = float(sizes.std(ddof=1)) if samples > 1 else 0.0
    return SpreadEstimate(
        mean=float(sizes.mean()),
        std=std,
        values=sizes if keep_values else None,
    )


def exact_spread_small(g: Graph, probs: np.ndarray, seeds: Iterable[int]) -> float:
    """Exact expected spread by enumerating every live-edge realization.

    Refuses graphs with more than 20 edges (2^m realizations).
    """
    if g.m > 20:
        raise DiffusionError(f"exact enumeration limited to m <= 20, got m={g.m}")
    seed_list = sorted(set(int(s) for s in seeds))
    if not seed_list:
        raise DiffusionError("seed set must be non-empty")
    if seed_list[0] < 0 or seed_list[-1] >= g.n:
        raise DiffusionError(f"seed out of range for n={g.n}")

    total = 0.0
    m = g.m
    for mask in range(1 << m):
        weight = 1.0
        for eid in range(m):
            weight *= probs[eid] if (mask >> eid) & 1 else 1.0 - probs[eid]
        if weight == 0.0:
            continue
        reached = set(seed_list)
        stack = list(seed_list)
        while stack:
            u = stack.pop()
            for eid in g.out_adj[u]:
                if (mask >> eid) & 1:
                    v = g.edges[eid][1]
                    if v not in reached:
                        reached.add(v)
                        stack.append(v)
        total += weight * len(reached)
    return total


def replay_activated(g: Graph, seeds: Iterable[int], outcomes: dict[int, int]) -> set[int]:
    """Reconstruct the activated set implied by recorded edge outcomes.

    Follows exactly the edges with outcome 1 from the seeds; used to check
    feedback soundness of simulated cascades.
    """
    reached = set(int(s) for s in seeds)
    stack = list(reached)
    while stack:
        u = stack.pop()
        for eid in g.out_adj[u]:
            if outcomes.get(eid) == 1:
                v = g.edges[eid][1]
                if v not in reached:
                    reached.add(v)
                    stack.append(v)
    return reached
