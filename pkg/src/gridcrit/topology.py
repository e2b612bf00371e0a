"""Topological statistics of the grid graph: degrees, clustering, hop distances."""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass

from .flowgraph import FlowGraph, UndirectedGraph


class DisconnectedGraphError(ValueError):
    def __init__(self, components: list[set[int]]):
        sizes = sorted((len(c) for c in components), reverse=True)
        super().__init__(
            f"graph is disconnected: {len(components)} components of sizes {sizes}"
        )
        self.components = components


@dataclass(frozen=True)
class DegreeTable:
    degree: dict[int, int]
    in_degree: dict[int, int]
    out_degree: dict[int, int]
    hub: int
    histogram: dict[int, int]


@dataclass(frozen=True)
class PathLengthStats:
    char_path_length: float
    diameter: int
    diameter_pair_count: int


@dataclass(frozen=True)
class GraphStats:
    degrees: DegreeTable
    clustering_per_node: dict[int, float]
    clustering_graph: float
    paths: PathLengthStats


def degrees(graph: FlowGraph) -> DegreeTable:
    """Undirected degree, in/out degree, hub (smallest id on ties), histogram."""
    und = {n: 0 for n in graph.nodes}
    ind = {n: 0 for n in graph.nodes}
    outd = {n: 0 for n in graph.nodes}
    seen: set[frozenset[int]] = set()
    for e in graph.edges:
        ind[e.head] += 1
        outd[e.tail] += 1
        pair = frozenset((e.tail, e.head))
        if pair not in seen:
            seen.add(pair)
            und[e.tail] += 1
            und[e.head] += 1
    hub = max(sorted(und), key=lambda n: und[n])
    return DegreeTable(
        degree=und,
        in_degree=ind,
        out_degree=outd,
        hub=hub,
        histogram=dict(Counter(und.values())),
    )


def clustering(graph: UndirectedGraph) -> tuple[dict[int, float], float]:
    """Per-node clustering coefficient and its graph-wide average.

    Nodes with fewer than two neighbors contribute zero.
    """
    nbrs = graph.neighbor_map()
    per_node: dict[int, float] = {}
    for node in graph.nodes:
        mine = nbrs[node]
        d = len(mine)
        if d < 2:
            per_node[node] = 0.0
            continue
        links = 0
        for a in mine:
            links += len(nbrs[a] & mine)
        links //= 2
        per_node[node] = 2.0 * links / (d * (d - 1))
    avg = sum(per_node.values()) / len(graph.nodes)
    return per_node, avg


def _bfs_hops(nbrs: dict[int, set[int]], start: int) -> dict[int, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def connected_components(graph: UndirectedGraph) -> list[set[int]]:
    nbrs = graph.neighbor_map()
    remaining = set(graph.nodes)
    comps = []
    while remaining:
        start = next(iter(remaining))
        comp = set(_bfs_hops(nbrs, start))
        comps.append(comp)
        remaining -= comp
    return comps


def path_length_stats(graph: UndirectedGraph) -> PathLengthStats:
    """Mean, max, and max-attaining count of hop distances over unordered pairs."""
    comps = connected_components(graph)
    if len(comps) > 1:
        raise DisconnectedGraphError(comps)
    nbrs = graph.neighbor_map()
    total = 0
    pairs = 0
    diameter = 0
    at_diameter = 0
    for start in graph.nodes:
        dist = _bfs_hops(nbrs, start)
        for node, d in dist.items():
            if node <= start:
                continue  # unordered pairs, each counted once
            total += d
            pairs += 1
            if d > diameter:
                diameter, at_diameter = d, 1
            elif d == diameter:
                at_diameter += 1
    return PathLengthStats(
        char_path_length=total / pairs if pairs else 0.0,
        diameter=diameter,
        diameter_pair_count=at_diameter,
    )


def compute_stats(graph: FlowGraph, und: UndirectedGraph) -> GraphStats:
    per_node, avg = clustering(und)
    return GraphStats(
        degrees=degrees(graph),
        clustering_per_node=per_node,
        clustering_graph=avg,
        paths=path_length_stats(und),
    )
