"""Directed, impedance-weighted graph of a solved case.

Each branch becomes one directed edge oriented along positive sending-end
real power; the edge weight is the branch series impedance r + jx and the
shortest-path cost is a scalar derived from it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cases import SystemCase
from .network import BranchFlow

ZERO_FLOW_DEADBAND = 1e-9

COST_MAGNITUDE = "magnitude"
COST_REACTANCE = "reactance"


class GraphError(ValueError):
    """Raised when flows and branches cannot be mapped onto each other."""


@dataclass(frozen=True)
class FlowEdge:
    tail: int
    head: int
    r: float
    x: float
    cost: float
    p_flow: float

    @property
    def complex_weight(self) -> complex:
        return complex(self.r, self.x)

    @property
    def zero_flow(self) -> bool:
        return abs(self.p_flow) <= ZERO_FLOW_DEADBAND


@dataclass(frozen=True)
class FlowGraph:
    nodes: tuple[int, ...]
    generator_nodes: frozenset[int]
    edges: tuple[FlowEdge, ...]
    cost_kind: str

    def edge_map(self) -> dict[tuple[int, int], FlowEdge]:
        return {(e.tail, e.head): e for e in self.edges}

    def out_edges(self, node: int) -> list[FlowEdge]:
        return [e for e in self.edges if e.tail == node]


@dataclass(frozen=True)
class UndirectedGraph:
    nodes: tuple[int, ...]
    edges: frozenset[frozenset[int]]

    def neighbors(self, node: int) -> set[int]:
        out = set()
        for pair in self.edges:
            if node in pair:
                out |= pair - {node}
        return out

    def neighbor_map(self) -> dict[int, set[int]]:
        nbrs: dict[int, set[int]] = {n: set() for n in self.nodes}
        for pair in self.edges:
            a, b = tuple(pair)
            nbrs[a].add(b)
            nbrs[b].add(a)
        return nbrs


def _edge_cost(r: float, x: float, cost_kind: str) -> float:
    if cost_kind == COST_MAGNITUDE:
        return abs(complex(r, x))
    if cost_kind == COST_REACTANCE:
        return abs(x)
    raise GraphError(f"unknown cost kind {cost_kind!r}")


def build_flow_graph(
    case: SystemCase,
    flows: list[BranchFlow],
    cost_kind: str = COST_MAGNITUDE,
) -> FlowGraph:
    """Orient every branch of the (merged) case along its real power flow.

    A branch whose sending-end power is negative is reversed so p_flow is the
    real power entering the edge at its tail. Branches with |p| below the
    dead-band keep their record orientation for the exact-zero case but still
    follow the sign of the numerical residual otherwise, which pins the two
    degenerate synchronous-condenser branches of the 30-bus system
    deterministically for a fixed solver build.
    """
    if len(flows) != len(case.branches):
        raise GraphError(
            f"flow list has {len(flows)} entries for {len(case.branches)} branches"
        )
    edges = []
    seen_pairs: set[frozenset[int]] = set()
    for br, flow in zip(case.branches, flows):
        if {flow.from_bus, flow.to_bus} != {br.from_bus, br.to_bus}:
            raise GraphError(
                f"flow {flow.from_bus}-{flow.to_bus} does not match branch "
                f"{br.from_bus}-{br.to_bus}"
            )
        pair = frozenset((br.from_bus, br.to_bus))
        if pair in seen_pairs:
            raise GraphError(
                f"parallel branches between {br.from_bus} and {br.to_bus}; "
                "merge parallels before building the graph"
            )
        seen_pairs.add(pair)
        if flow.p_send < 0:
            tail, head, p = br.to_bus, br.from_bus, flow.p_recv
        else:
            tail, head, p = br.from_bus, br.to_bus, flow.p_send
        edges.append(
            FlowEdge(
                tail=tail,
                head=head,
                r=br.r,
                x=br.x,
                cost=_edge_cost(br.r, br.x, cost_kind),
                p_flow=p,
            )
        )
    edges.sort(key=lambda e: (e.tail, e.head))
    return FlowGraph(
        nodes=tuple(b.id for b in case.buses),
        generator_nodes=source_nodes(case),
        edges=tuple(edges),
        cost_kind=cost_kind,
    )


def source_nodes(case: SystemCase) -> frozenset[int]:
    """Buses with active generation plus the slack bus."""
    sources = {b.id for b in case.buses if b.p_gen > 0 or b.kind == "slack"}
    if not sources:
        raise GraphError("case has no generation sources")
    return frozenset(sources)


def undirected_view(graph: FlowGraph) -> UndirectedGraph:
    """Simple undirected graph over the same nodes: one edge per endpoint pair."""
    return UndirectedGraph(
        nodes=graph.nodes,
        edges=frozenset(frozenset((e.tail, e.head)) for e in graph.edges),
    )


def export_edge_list(graph: FlowGraph) -> str:
    """Plain-text edge list: node header then 'tail head r x cost p_flow' rows."""
    lines = [f"# nodes {len(graph.nodes)} edges {len(graph.edges)} cost {graph.cost_kind}"]
    lines.append("# " + " ".join(str(n) for n in graph.nodes))
    for e in graph.edges:
        lines.append(
            f"{e.tail} {e.head} {e.r:.6f} {e.x:.6f} {e.cost:.6f} {e.p_flow:.6f}"
        )
    return "\n".join(lines) + "\n"
