"""End-to-end contingency screening: case -> power flow -> graph -> rankings."""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import betweenness as bt
from .cases import PQ, PV, SLACK, CaseError, SystemCase, merge_parallel_branches, validate_case
from .flowgraph import COST_MAGNITUDE, FlowGraph, build_flow_graph
from .network import BranchFlow, PowerFlowSolution, branch_flows, solve_power_flow


@dataclass(frozen=True)
class ScreeningResult:
    case: SystemCase
    merged: SystemCase
    solution: PowerFlowSolution
    flows: list[BranchFlow]
    graph: FlowGraph
    path_set: bt.ShortestPathSet
    proposed: bt.BetweennessReport
    past: bt.BetweennessReport


def screen(
    case: SystemCase,
    cost_kind: str = COST_MAGNITUDE,
    tie_tol: float = bt.DEFAULT_TIE_TOL,
    margin: float = bt.DEFAULT_MARGIN,
    tol: float = 1e-8,
    max_iter: int = 50,
    per_pair_dedup: bool = False,
    max_paths: int = bt.DEFAULT_MAX_PATHS,
) -> ScreeningResult:
    """Run the whole pipeline on a case and rank lines both ways."""
    merged = merge_parallel_branches(case)
    sol = solve_power_flow(merged, tol=tol, max_iter=max_iter)
    flows = branch_flows(merged, sol)
    graph = build_flow_graph(merged, flows, cost_kind=cost_kind)
    path_set = bt.all_shortest_paths(graph, tie_tol=tie_tol, max_paths=max_paths)
    proposed = bt.normalize_and_rank(
        bt.line_betweenness(path_set, graph, per_pair_dedup),
        margin=margin,
        approach=bt.PROPOSED,
    )
    past = bt.normalize_and_rank(
        bt.past_line_betweenness(path_set, graph, per_pair_dedup),
        margin=margin,
        approach=bt.PAST,
    )
    return ScreeningResult(case, merged, sol, flows, graph, path_set, proposed, past)


def shift_generation(case: SystemCase, from_bus: int, to_bus: int) -> SystemCase:
    """Move all generation (and the slack role, if held) from one bus to another.

    The origin bus becomes a plain load bus; the destination inherits the
    origin's voltage setpoint along with its MW/MVAr output.
    """
    src = case.bus_by_id(from_bus)
    dst = case.bus_by_id(to_bus)
    if src.p_gen <= 0 and src.kind != SLACK:
        raise CaseError(f"bus {from_bus} has no generation to move")
    if from_bus == to_bus:
        return case
    new_buses = []
    for b in case.buses:
        if b.id == from_bus:
            new_buses.append(replace(b, kind=PQ, p_gen=0.0, q_gen=0.0))
        elif b.id == to_bus:
            new_buses.append(
                replace(
                    b,
                    kind=SLACK if src.kind == SLACK else (PV if b.kind == PQ else b.kind),
                    p_gen=b.p_gen + src.p_gen,
                    q_gen=b.q_gen + src.q_gen,
                    v_mag=src.v_mag,
                    v_ang_deg=src.v_ang_deg if src.kind == SLACK else b.v_ang_deg,
                )
            )
        else:
            new_buses.append(b)
    return validate_case(replace(case, buses=tuple(new_buses)))


def sensitivity_shift_generator(
    case: SystemCase, from_bus: int, to_bus: int, **screen_kwargs
) -> bt.BetweennessReport:
    """Proposed-approach report after moving generation between buses."""
    return screen(shift_generation(case, from_bus, to_bus), **screen_kwargs).proposed
