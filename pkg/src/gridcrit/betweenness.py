"""Generator-to-node shortest paths and flow-weighted line betweenness.

The path stage runs Floyd-Warshall over the directed flow graph, then
reconstructs every minimal-cost path (within a tie tolerance) from each
source node to each reachable target. A line's raw betweenness is the sum,
over stored paths containing it, of the real power flowing on that line;
the power-blind variant scores 1 per path instead.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .flowgraph import FlowGraph

DEFAULT_TIE_TOL = 1e-9
DEFAULT_MAX_PATHS = 10**6
DEFAULT_MARGIN = 0.5

PROPOSED = "proposed"
PAST = "past"


class BetweennessError(ValueError):
    pass


class PathExplosionError(RuntimeError):
    def __init__(self, source: int, target: int, count: int, cap: int):
        super().__init__(
            f"path enumeration exceeded the cap of {cap} paths while expanding "
            f"pair ({source}, {target}) (running total {count})"
        )
        self.pair = (source, target)


@dataclass(frozen=True)
class ShortestPathSet:
    sources: tuple[int, ...]
    tie_tol: float
    dist: dict[tuple[int, int], float]
    paths: dict[tuple[int, int], tuple[tuple[int, ...], ...]]

    def total_paths(self) -> int:
        return sum(len(p) for p in self.paths.values())


@dataclass(frozen=True)
class LineScore:
    tail: int
    head: int
    raw: float
    normalized: float
    rank: int
    critical: bool


@dataclass(frozen=True)
class BetweennessReport:
    approach: str
    margin: float
    scores: tuple[LineScore, ...]

    def by_line(self) -> dict[tuple[int, int], LineScore]:
        return {(s.tail, s.head): s for s in self.scores}

    def normalized_of(self, tail: int, head: int) -> float:
        return self.by_line()[(tail, head)].normalized

    def top(self, k: int) -> tuple[LineScore, ...]:
        return self.scores[:k]


def floyd_warshall(graph: FlowGraph) -> tuple[np.ndarray, dict[int, int]]:
    """All-pairs minimal directed cost matrix and the node->row index map."""
    nodes = graph.nodes
    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for e in graph.edges:
        i, j = index[e.tail], index[e.head]
        d[i, j] = min(d[i, j], e.cost)
    for k in range(n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d, index


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b)) + 1e-15


def all_shortest_paths(
    graph: FlowGraph,
    sources=None,
    tie_tol: float = DEFAULT_TIE_TOL,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> ShortestPathSet:
    """Every minimal-cost path from each source to each reachable target.

    Paths whose cost is within a relative tie_tol of the minimum all count.
    Raises PathExplosionError when the stored-path total would exceed
    max_paths.
    """
    if tie_tol < 0:
        raise BetweennessError("tie_tol must be nonnegative")
    if any(e.cost <= 0 for e in graph.edges):
        raise BetweennessError("all edge costs must be positive")
    if sources is None:
        sources = graph.generator_nodes
    sources = tuple(sorted(sources))

    d, index = floyd_warshall(graph)
    in_edges: dict[int, list[tuple[int, float]]] = {n: [] for n in graph.nodes}
    for e in graph.edges:
        in_edges[e.head].append((e.tail, e.cost))

    dist: dict[tuple[int, int], float] = {}
    paths: dict[tuple[int, int], tuple[tuple[int, ...], ...]] = {}
    total = 0
    for s in sources:
        si = index[s]
        memo: dict[int, tuple[tuple[int, ...], ...]] = {s: ((s,),)}

        def expand(t: int, s=s, si=si, memo=memo) -> tuple[tuple[int, ...], ...]:
            if t in memo:
                return memo[t]
            found = []
            dt = d[si, index[t]]
            for u, cost in in_edges[t]:
                du = d[si, index[u]]
                if np.isfinite(du) and _close(du + cost, dt, tie_tol):
                    for p in expand(u):
                        found.append(p + (t,))
            memo[t] = tuple(found)
            return memo[t]

        for t in graph.nodes:
            if t == s or not np.isfinite(d[si, index[t]]):
                continue
            plist = expand(t)
            if not plist:
                continue
            dist[(s, t)] = float(d[si, index[t]])
            paths[(s, t)] = plist
            total += len(plist)
            if total > max_paths:
                raise PathExplosionError(s, t, total, max_paths)
    return ShortestPathSet(sources=sources, tie_tol=tie_tol, dist=dist, paths=paths)


def _edge_counts(path_set: ShortestPathSet, per_pair_dedup: bool = False) -> Counter:
    counts: Counter = Counter()
    for pair_paths in path_set.paths.values():
        if per_pair_dedup:
            edges_here = {
                (p[i], p[i + 1]) for p in pair_paths for i in range(len(p) - 1)
            }
            counts.update(edges_here)
        else:
            for p in pair_paths:
                counts.update((p[i], p[i + 1]) for i in range(len(p) - 1))
    return counts


def line_betweenness(
    path_set: ShortestPathSet,
    graph: FlowGraph,
    per_pair_dedup: bool = False,
) -> dict[tuple[int, int], float]:
    """Raw flow-weighted betweenness: k paths through a line add k * p_flow."""
    counts = _edge_counts(path_set, per_pair_dedup)
    return {
        (e.tail, e.head): counts.get((e.tail, e.head), 0) * e.p_flow
        for e in graph.edges
    }


def past_line_betweenness(
    path_set: ShortestPathSet,
    graph: FlowGraph,
    per_pair_dedup: bool = False,
) -> dict[tuple[int, int], float]:
    """Power-blind raw betweenness: each stored path contributes 1 per line."""
    counts = _edge_counts(path_set, per_pair_dedup)
    return {
        (e.tail, e.head): float(counts.get((e.tail, e.head), 0))
        for e in graph.edges
    }


def normalize_and_rank(
    raw: dict[tuple[int, int], float],
    margin: float = DEFAULT_MARGIN,
    approach: str = PROPOSED,
) -> BetweennessReport:
    """Scale by the maximum, sort descending, rank 1..n, flag critical lines.

    Ties in normalized value are broken by ascending (tail, head).
    """
    if not raw:
        raise BetweennessError("no lines to rank")
    if any(v < 0 for v in raw.values()):
        raise BetweennessError("raw betweenness must be nonnegative")
    peak = max(raw.values())
    if peak <= 0:
        raise BetweennessError("all raw betweenness values are zero; no source reaches any node")
    ordered = sorted(raw.items(), key=lambda kv: (-kv[1] / peak, kv[0]))
    scores = []
    for rank, ((tail, head), value) in enumerate(ordered, start=1):
        norm = value / peak
        scores.append(
            LineScore(
                tail=tail,
                head=head,
                raw=value,
                normalized=norm,
                rank=rank,
                critical=norm > margin,
            )
        )
    return BetweennessReport(approach=approach, margin=margin, scores=tuple(scores))
