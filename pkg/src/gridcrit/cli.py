"""Command-line front end: stats | rank | simulate | sweep | sensitivity."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import reporting as rpt
from .betweenness import DEFAULT_MARGIN, DEFAULT_TIE_TOL
from .cases import CaseError
from .catalog import load_case
from .dynamics import (
    DEFAULT_THRESHOLD,
    FAULT_AT_TO,
    SimulationError,
    default_machine_params,
    load_machine_params,
    simulate_fault,
)
from .flowgraph import COST_MAGNITUDE, COST_REACTANCE, export_edge_list
from .network import PowerFlowError
from .screening import screen, shift_generation
from .topology import compute_stats
from .flowgraph import undirected_view

ENV_OUT_DIR = "GRIDCRIT_OUT_DIR"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridcrit",
        description="Rank transmission lines by flow-weighted betweenness and "
        "cross-check with transient stability simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--case", required=True,
                       help="case file path or built-in name (ieee30, ieee57, ieee118, ieee300)")
        p.add_argument("--out", default=None, help=f"output directory (default ${ENV_OUT_DIR} or ./gridcrit_out)")
        p.add_argument("--format", choices=rpt.FORMATS, default="csv")
        p.add_argument("--tol", type=float, default=1e-8, help="power flow tolerance, pu")
        p.add_argument("--max-iter", type=int, default=50)
        p.add_argument("--margin", type=float, default=DEFAULT_MARGIN,
                       help="criticality margin on normalized betweenness")
        p.add_argument("--tie-tol", type=float, default=DEFAULT_TIE_TOL,
                       help="relative tolerance for equal-cost path ties")
        p.add_argument("--cost", choices=(COST_MAGNITUDE, COST_REACTANCE),
                       default=COST_MAGNITUDE, help="shortest-path cost scalar")
        p.add_argument("--dedup-per-pair", action="store_true",
                       help="count a line once per source-target pair instead of once per path")
        p.add_argument("--move-gen", metavar="A:B", default=None,
                       help="move generation from bus A to bus B before the analysis")

    def add_sim(p):
        p.add_argument("--clear-time", type=float, default=1.0, help="fault clearing time, s")
        p.add_argument("--end-time", type=float, default=10.0, help="simulation horizon, s")
        p.add_argument("--dt", type=float, default=1e-3, help="integration step, s")
        p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                       help="relative-angle excursion for instability, rad")
        p.add_argument("--fault-end", choices=("from", "to"), default=FAULT_AT_TO,
                       help="which end of the line is faulted")
        p.add_argument("--machines", default=None, help="machine-parameter JSON file")

    p_stats = sub.add_parser("stats", help="topological statistics tables")
    add_common(p_stats)

    p_rank = sub.add_parser("rank", help="betweenness rankings, both approaches")
    add_common(p_rank)

    p_sim = sub.add_parser("simulate", help="single-line fault simulation")
    add_common(p_sim)
    add_sim(p_sim)
    p_sim.add_argument("--line", required=True, metavar="A-B", help="line to fault, e.g. 6-7")

    p_sweep = sub.add_parser("sweep", help="rank plus per-line fault verdicts")
    add_common(p_sweep)
    add_sim(p_sweep)

    p_sens = sub.add_parser("sensitivity", help="ranking after a generation shift")
    add_common(p_sens)

    return parser


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(ENV_OUT_DIR) or "gridcrit_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_pair(text: str, sep: str, what: str) -> tuple[int, int]:
    try:
        a, b = text.split(sep)
        return int(a), int(b)
    except ValueError:
        raise CaseError(f"cannot parse {what} {text!r}; expected two bus ids like 6{sep}7")


def _load(args):
    case = load_case(args.case)
    if args.move_gen:
        a, b = _parse_pair(args.move_gen, ":", "--move-gen")
        case = shift_generation(case, a, b)
    return case


def _screen(args):
    case = _load(args)
    return screen(
        case,
        cost_kind=args.cost,
        tie_tol=args.tie_tol,
        margin=args.margin,
        tol=args.tol,
        max_iter=args.max_iter,
        per_pair_dedup=args.dedup_per_pair,
    )


def _config(args, res, **extra) -> dict:
    cfg = {
        "case": res.case.name,
        "cost": args.cost,
        "margin": args.margin,
        "tie_tol": args.tie_tol,
        "pf_tol": args.tol,
    }
    if args.move_gen:
        cfg["move_gen"] = args.move_gen
    cfg.update(extra)
    return cfg


def _machines_for(args, case):
    if getattr(args, "machines", None):
        return load_machine_params(Path(args.machines).read_text(), case)
    return default_machine_params(case)


def _machine_config(machines) -> str:
    return ";".join(
        f"bus{m.bus}:h={m.h},xd'={m.xd_prime},D={m.damping},f0={m.f0}" for m in machines
    )


def cmd_stats(args) -> int:
    res = _screen(args)
    out = _out_dir(args)
    stats = compute_stats(res.graph, undirected_view(res.graph))
    cfg = _config(args, res)
    (out / "solution.txt").write_text(rpt.solution_dump(res.merged, res.solution, res.flows))
    rpt.write_table(out / "degrees", rpt.degree_rows(stats), cfg, args.format)
    rpt.write_table(out / "inout", rpt.inout_rows(stats), cfg, args.format)
    rpt.write_table(out / "histogram", rpt.histogram_rows(stats), cfg, args.format)
    rpt.write_table(out / "summary", rpt.summary_rows(res.case, stats), cfg, args.format)
    return 0


def cmd_rank(args) -> int:
    res = _screen(args)
    out = _out_dir(args)
    cfg = _config(args, res)
    (out / "solution.txt").write_text(rpt.solution_dump(res.merged, res.solution, res.flows))
    (out / "graph.edgelist").write_text(export_edge_list(res.graph))
    rpt.write_table(out / "proposed", rpt.betweenness_rows(res.proposed), cfg, args.format)
    rpt.write_table(out / "past", rpt.betweenness_rows(res.past), cfg, args.format)
    rpt.write_table(out / "comparison", rpt.comparison_rows(res.proposed, res.past), cfg, args.format)
    rpt.write_table(out / "profile", rpt.profile_rows(res.proposed), cfg, args.format)
    return 0


def cmd_simulate(args) -> int:
    res = _screen(args)
    out = _out_dir(args)
    machines = _machines_for(args, res.merged)
    line = _parse_pair(args.line, "-", "--line")
    traj = simulate_fault(
        res.merged, res.solution, machines, line,
        fault_end=args.fault_end, t_clear=args.clear_time,
        t_end=args.end_time, dt=args.dt, threshold=args.threshold,
    )
    cfg = _config(
        args, res, line=args.line, fault_end=args.fault_end,
        t_clear=args.clear_time, t_end=args.end_time, dt=args.dt,
        threshold=f"{args.threshold:.6f}", machines=_machine_config(machines),
    )
    rpt.write_table(out / "trajectory", rpt.trajectory_rows(traj), cfg, args.format)
    divergence = "" if traj.first_divergence_time is None else f" at {traj.first_divergence_time:.3f} s"
    islanded = f" islanded={list(traj.islanded)}" if traj.islanded else ""
    (out / "verdict.txt").write_text(
        f"line {line[0]}-{line[1]} cleared at {args.clear_time} s: "
        f"{traj.verdict}{divergence}{islanded}\n"
    )
    print(f"{line[0]}-{line[1]}: {traj.verdict}")
    return 0


def cmd_sweep(args) -> int:
    res = _screen(args)
    out = _out_dir(args)
    machines = _machines_for(args, res.merged)
    verdicts: dict[tuple[int, int], str] = {}
    for e in res.graph.edges:
        traj = simulate_fault(
            res.merged, res.solution, machines, (e.tail, e.head),
            fault_end=args.fault_end, t_clear=args.clear_time,
            t_end=args.end_time, dt=args.dt, threshold=args.threshold,
        )
        verdicts[(e.tail, e.head)] = traj.verdict
    cfg = _config(
        args, res, fault_end=args.fault_end, t_clear=args.clear_time,
        t_end=args.end_time, dt=args.dt, threshold=f"{args.threshold:.6f}",
        machines=_machine_config(machines),
    )
    rpt.write_table(out / "sweep", rpt.comparison_rows(res.proposed, res.past, verdicts),
                    cfg, args.format)
    rpt.write_table(out / "sweep_summary",
                    rpt.sweep_summary_rows(res.proposed, res.past, verdicts),
                    cfg, args.format)
    return 0


def cmd_sensitivity(args) -> int:
    if not args.move_gen:
        raise CaseError("sensitivity requires --move-gen A:B")
    res = _screen(args)
    out = _out_dir(args)
    cfg = _config(args, res)
    rpt.write_table(out / "sensitivity", rpt.betweenness_rows(res.proposed), cfg, args.format)
    return 0


_COMMANDS = {
    "stats": cmd_stats,
    "rank": cmd_rank,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "sensitivity": cmd_sensitivity,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (CaseError, PowerFlowError, SimulationError, ValueError, OSError) as exc:
        print(f"gridcrit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
