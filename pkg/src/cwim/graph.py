"""Directed graph container, generation, edge-list loading, and topology stats.

Nodes are dense integers 0..n-1 and edges carry stable integer ids: edge i is
the i-th entry of the edge list for the lifetime of the graph, so per-edge
quantities (features, probabilities, counters) can live in flat arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class GraphError(ValueError):
    """Invalid graph construction or malformed graph input."""


class Graph:
    """Immutable directed graph with stable edge ids.

    Attributes:
        n: node count, nodes are 0..n-1.
        edges: list of (tail, head) pairs; index in this list is the edge id.
        m: edge count.
        tail, head: int arrays of length m (tail[i], head[i] of edge i).
        out_adj: per node, ascending list of out-edge ids.
        in_adj: per node, ascending list of in-edge ids.
    """

    def __init__(self, n: int, edges: Sequence[tuple[int, int]]):
        if n < 1:
            raise GraphError(f"node count must be >= 1, got {n}")
        seen = set()
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop {u}->{v} not allowed")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge {u}->{v} out of range for n={n}")
            if (u, v) in seen:
                raise GraphError(f"duplicate edge {u}->{v}")
            seen.add((u, v))
        self.n = n
        self.edges = [(int(u), int(v)) for u, v in edges]
        self.m = len(self.edges)
        self.tail = np.fromiter((u for u, _ in self.edges), dtype=np.int64, count=self.m)
        self.head = np.fromiter((v for _, v in self.edges), dtype=np.int64, count=self.m)
        self.out_adj: list[list[int]] = [[] for _ in range(n)]
        self.in_adj: list[list[int]] = [[] for _ in range(n)]
        for eid, (u, v) in enumerate(self.edges):
            self.out_adj[u].append(eid)
            self.in_adj[v].append(eid)

    def out_degree(self, u: int) -> int:
        return len(self.out_adj[u])

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class GraphStats:
    """Topology quantities for a given seed budget K.

    components: weakly connected components, sorted by descending node count
        (ties: smaller minimum node id first).
    e_star: total edge count of the first min(l, K) components.
    e_c: sum over the first min(l, K) components of the per-component maximum
        descendant-edge count (edges whose tail is reachable from some node u,
        with u itself counting as reachable).
    n_tilde: largest reachable-set size over all nodes, counting the node itself.
    """

    k: int
    components: tuple[frozenset[int], ...]
    l: int
    e_star: int
    e_c: int
    n_tilde: int


def gen_erdos_renyi(n: int, p_edge: float, rng_seed: int) -> Graph:
    """Directed Erdos-Renyi graph: each ordered pair (u, v), u != v, is an
    edge independently with probability p_edge. Deterministic given rng_seed.
    """
    if n < 2:
        raise GraphError(f"need n >= 2, got {n}")
    if not (0.0 <= p_edge <= 1.0):
        raise GraphError(f"p_edge must lie in [0,1], got {p_edge}")
    rng = np.random.default_rng(rng_seed)
    coins = rng.random((n, n))
    np.fill_diagonal(coins, 1.0)  # no self-loops
    us, vs = np.nonzero(coins < p_edge)
    return Graph(n, list(zip(us.tolist(), vs.tolist())))


def load_edge_list(path: str, node_limit: Optional[int] = None) -> Graph:
    """Load a directed graph from a whitespace-separated edge-list file.

    Lines starting with '#' and blank lines are skipped. Each remaining line
    must hold two integer node ids. Original ids are relabeled to a dense
    0..n-1 range in first-appearance order. If node_limit is given, only
    edges with both original ids < node_limit are kept. Duplicate edges are
    dropped (first occurrence wins) and self-loops are removed.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise GraphError(f"cannot read edge list {path}: {exc}") from exc

    relabel: dict[int, int] = {}
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"{path}:{lineno}: expected two node ids, got {line!r}")
        try:
            u_orig, v_orig = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"{path}:{lineno}: non-integer node id in {line!r}")
        if node_limit is not None and (u_orig >= node_limit or v_orig >= node_limit):
            continue
        if u_orig == v_orig:
            continue
        if (u_orig, v_orig) in seen:
            continue
        seen.add((u_orig, v_orig))
        for orig in (u_orig, v_orig):
            if orig not in relabel:
                relabel[orig] = len(relabel)
        edges.append((relabel[u_orig], relabel[v_orig]))

    if not edges:
        raise GraphError(f"{path}: no edges left after filtering")
    return Graph(len(relabel), edges)


def save_edge_list(g: Graph, path: str) -> None:
    """Write a graph in the edge-list format accepted by load_edge_list."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# directed edge list: n={g.n} m={g.m}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def descendants(g: Graph, u: int) -> set[int]:
    """All nodes reachable from u by directed paths of length >= 1."""
    if not (0 <= u < g.n):
        raise GraphError(f"node {u} out of range for n={g.n}")
    desc: set[int] = set()
    expanded = {u}
    stack = [u]
    while stack:
        x = stack.pop()
        for eid in g.out_adj[x]:
            w = g.edges[eid][1]
            if w not in desc:
                desc.add(w)
                if w not in expanded:
                    expanded.add(w)
                    stack.append(w)
    return desc


def _weak_components(g: Graph) -> list[set[int]]:
    comps: list[set[int]] = []
    unseen = set(range(g.n))
    while unseen:
        start = unseen.pop()
        comp = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for eid in g.out_adj[x]:
                w = g.edges[eid][1]
                if w in unseen:
                    unseen.discard(w)
                    comp.add(w)
                    stack.append(w)
            for eid in g.in_adj[x]:
                w = g.edges[eid][0]
                if w in unseen:
                    unseen.discard(w)
                    comp.add(w)
                    stack.append(w)
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), min(c)))
    return comps


def analyze(g: Graph, k: int) -> GraphStats:
    """Weak components plus the budget-dependent edge counts e_star and e_c,
    and the reachability constant n_tilde.
    """
    if k < 1:
        raise GraphError(f"budget K must be >= 1, got {k}")
    comps = _weak_components(g)
    comp_of = {}
    for idx, comp in enumerate(comps):
        for node in comp:
            comp_of[node] = idx
    edge_count = [0] * len(comps)
    for u, _ in g.edges:
        edge_count[comp_of[u]] += 1

    # reach(u) includes u itself; descendant-edge count is the total
    # out-degree of the reachable set.
    out_deg = [len(a) for a in g.out_adj]
    reach_size = [0] * g.n
    desc_edges = [0] * g.n
    for u in range(g.n):
        reach = descendants(g, u)
        reach.add(u)
        reach_size[u] = len(reach)
        desc_edges[u] = sum(out_deg[w] for w in reach)

    top = min(len(comps), k)
    e_star = sum(edge_count[i] for i in range(top))
    e_c = sum(max(desc_edges[u] for u in comps[i]) for i in range(top))
    n_tilde = max(reach_size)
    return GraphStats(
        k=k,
        components=tuple(frozenset(c) for c in comps),
        l=len(comps),
        e_star=e_star,
        e_c=e_c,
        n_tilde=n_tilde,
    )
