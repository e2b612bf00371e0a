"""Deterministic table/report writers for the command-line front end.

Every delimited or markdown output starts with '#' comment lines naming the
configuration that produced it; JSON outputs carry the same under a
"config" key. Formatting is fixed (normalized betweenness at 4 decimals) so
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .betweenness import BetweennessReport
from .cases import SystemCase
from .dynamics import SwingTrajectory, UNSTABLE
from .flowgraph import FlowGraph
from .network import BranchFlow, PowerFlowSolution
from .topology import GraphStats

FORMATS = ("csv", "json", "md")


def write_table(path: Path, rows: list[dict], config: dict, fmt: str) -> Path:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    path = path.with_suffix(f".{fmt}")
    if fmt == "json":
        path.write_text(json.dumps({"config": config, "rows": rows}, indent=2) + "\n")
        return path
    header = [f"# {k} = {v}" for k, v in config.items()]
    if not rows:
        path.write_text("\n".join(header) + "\n")
        return path
    cols = list(rows[0].keys())
    lines = list(header)
    if fmt == "csv":
        lines.append(",".join(cols))
        for row in rows:
            lines.append(",".join(str(row[c]) for c in cols))
    else:
        lines.append("| " + " | ".join(cols) + " |")
        lines.append("|" + "|".join("---" for _ in cols) + "|")
        for row in rows:
            lines.append("| " + " | ".join(str(row[c]) for c in cols) + " |")
    path.write_text("\n".join(lines) + "\n")
    return path


def solution_dump(case: SystemCase, sol: PowerFlowSolution, flows: list[BranchFlow]) -> str:
    """Fixed-width text table of the solved case: bus rows then branch rows."""
    out = [
        f"# case = {case.name}",
        f"# converged = {sol.converged} iterations = {sol.iterations} "
        f"max_mismatch = {sol.max_mismatch:.3e}",
        f"{'bus':>5} {'V_pu':>8} {'theta_deg':>10} {'P_pu':>10} {'Q_pu':>10}",
    ]
    for i, bid in enumerate(sol.bus_ids):
        out.append(
            f"{bid:>5} {sol.v_mag[i]:8.4f} {math.degrees(sol.v_ang[i]):10.4f} "
            f"{sol.p_inj[i]:10.6f} {sol.q_inj[i]:10.6f}"
        )
    out.append(f"{'from':>5} {'to':>5} {'p_send':>10} {'q_send':>10} {'loss':>10}")
    for f in flows:
        out.append(
            f"{f.from_bus:>5} {f.to_bus:>5} {f.p_send:10.6f} {f.q_send:10.6f} {f.loss:10.6f}"
        )
    return "\n".join(out) + "\n"


def degree_rows(stats: GraphStats) -> list[dict]:
    return [{"node": n, "degree": d} for n, d in sorted(stats.degrees.degree.items())]


def inout_rows(stats: GraphStats) -> list[dict]:
    return [
        {
            "node": n,
            "in_degree": stats.degrees.in_degree[n],
            "out_degree": stats.degrees.out_degree[n],
        }
        for n in sorted(stats.degrees.degree)
    ]


def histogram_rows(stats: GraphStats) -> list[dict]:
    return [
        {"degree": d, "node_count": c}
        for d, c in sorted(stats.degrees.histogram.items())
    ]


def summary_rows(case: SystemCase, stats: GraphStats) -> list[dict]:
    n = len(case.buses)
    e = len(case.branches)
    return [
        {"parameter": "nodes", "value": n},
        {"parameter": "edges", "value": e},
        {"parameter": "average_degree", "value": f"{2 * e / n:.2f}"},
        {"parameter": "hub_node", "value": stats.degrees.hub},
        {"parameter": "hub_degree", "value": stats.degrees.degree[stats.degrees.hub]},
        {"parameter": "clustering_coefficient", "value": f"{stats.clustering_graph:.4f}"},
        {"parameter": "characteristic_path_length", "value": f"{stats.paths.char_path_length:.2f}"},
        {"parameter": "diameter_hops", "value": stats.paths.diameter},
        {"parameter": "diameter_pair_count", "value": stats.paths.diameter_pair_count},
    ]


def betweenness_rows(report: BetweennessReport) -> list[dict]:
    return [
        {
            "line": f"{s.tail}-{s.head}",
            "raw": f"{s.raw:.6f}",
            "normalized": f"{s.normalized:.4f}",
            "rank": s.rank,
            "critical": s.critical,
            "approach": report.approach,
        }
        for s in report.scores
    ]


def comparison_rows(
    proposed: BetweennessReport,
    past: BetweennessReport,
    verdicts: dict[tuple[int, int], str] | None = None,
) -> list[dict]:
    past_map = past.by_line()
    rows = []
    for s in proposed.scores:
        key = (s.tail, s.head)
        p = past_map[key]
        row = {
            "line": f"{s.tail}-{s.head}",
            "proposed_normalized": f"{s.normalized:.4f}",
            "proposed_rank": s.rank,
            "past_normalized": f"{p.normalized:.4f}",
            "past_rank": p.rank,
            "margin_class": "critical" if s.critical else "noncritical",
        }
        if verdicts is not None:
            row["simulated"] = verdicts.get(key, "")
        rows.append(row)
    return rows


def profile_rows(report: BetweennessReport) -> list[dict]:
    """Normalized betweenness versus rank, for margin plots."""
    return [
        {"rank": s.rank, "line": f"{s.tail}-{s.head}", "normalized": f"{s.normalized:.4f}"}
        for s in report.scores
    ]


def trajectory_rows(traj: SwingTrajectory, stride: int = 1) -> list[dict]:
    rel = traj.relative_angles()
    rows = []
    for i in range(0, len(traj.times), stride):
        row = {"t": f"{traj.times[i]:.4f}"}
        for k, bus in enumerate(traj.machine_buses):
            row[f"delta_{bus}"] = f"{traj.delta[i, k]:.6f}"
        for k, bus in enumerate(traj.machine_buses):
            row[f"omega_{bus}"] = f"{traj.omega[i, k]:.6f}"
        for k, bus in enumerate(traj.machine_buses):
            row[f"rel_{bus}"] = f"{rel[i, k]:.6f}"
        rows.append(row)
    return rows


def spearman_rank_correlation(proposed: BetweennessReport, past: BetweennessReport) -> float:
    past_map = past.by_line()
    a = np.array([s.rank for s in proposed.scores], dtype=float)
    b = np.array([past_map[(s.tail, s.head)].rank for s in proposed.scores], dtype=float)
    if len(a) < 2:
        return 1.0
    am, bm = a - a.mean(), b - b.mean()
    return float(np.dot(am, bm) / math.sqrt(np.dot(am, am) * np.dot(bm, bm)))


def sweep_summary_rows(
    proposed: BetweennessReport,
    past: BetweennessReport,
    verdicts: dict[tuple[int, int], str],
) -> list[dict]:
    agree = 0
    for s in proposed.scores:
        is_unstable = verdicts.get((s.tail, s.head)) == UNSTABLE
        if is_unstable == s.critical:
            agree += 1
    total = len(proposed.scores)
    return [
        {"statistic": "lines", "value": total},
        {"statistic": "rank_correlation_proposed_vs_past",
         "value": f"{spearman_rank_correlation(proposed, past):.4f}"},
        {"statistic": "margin_verdict_agreement", "value": f"{agree}/{total}"},
        {"statistic": "unstable_count",
         "value": sum(1 for v in verdicts.values() if v == UNSTABLE)},
    ]


def graph_config(case: SystemCase, graph: FlowGraph, **extra) -> dict:
    cfg = {"case": case.name, "cost": graph.cost_kind}
    cfg.update(extra)
    return cfg
