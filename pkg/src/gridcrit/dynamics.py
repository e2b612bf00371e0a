"""Classical-model multimachine transient stability simulation.

Generators are constant EMFs behind transient reactance, loads constant
admittances, and the bus network is Kron-reduced to the machine internal
nodes for each network state (pre-fault, fault-on, post-clearing). Rotor
dynamics integrate with fixed-step RK4; the verdict watches rotor angles
relative to the slack machine.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cases import SLACK, CaseError, SystemCase
from .network import PowerFlowSolution
from .flowgraph import source_nodes

DEFAULT_H = 5.0
DEFAULT_XD_PRIME = 0.2
DEFAULT_DAMPING = 0.0
DEFAULT_F0 = 50.0
DEFAULT_THRESHOLD = math.pi

FAULT_AT_FROM = "from"
FAULT_AT_TO = "to"

STABLE = "stable"
UNSTABLE = "unstable"


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class MachineParams:
    bus: int
    h: float = DEFAULT_H
    xd_prime: float = DEFAULT_XD_PRIME
    damping: float = DEFAULT_DAMPING
    f0: float = DEFAULT_F0

    def __post_init__(self):
        if self.h <= 0 or self.xd_prime <= 0 or self.f0 <= 0:
            raise SimulationError(f"machine at bus {self.bus}: h, xd_prime, f0 must be positive")


@dataclass(frozen=True)
class ReducedNetwork:
    machine_buses: tuple[int, ...]
    slack_machine: int
    e_mag: np.ndarray
    delta0: np.ndarray
    p_mech: np.ndarray
    y_pre: np.ndarray
    y_fault: np.ndarray | None = None
    y_post: np.ndarray | None = None
    islanded: tuple[int, ...] = ()


@dataclass(frozen=True)
class SwingTrajectory:
    machine_buses: tuple[int, ...]
    slack_machine: int
    times: np.ndarray
    delta: np.ndarray  # (steps, machines) rotor angles, rad
    omega: np.ndarray  # (steps, machines) speed deviations, rad/s
    t_clear: float
    verdict: str
    first_divergence_time: float | None
    islanded: tuple[int, ...] = ()

    def relative_angles(self) -> np.ndarray:
        k = self.machine_buses.index(self.slack_machine)
        return self.delta - self.delta[:, k:k + 1]


def default_machine_params(
    case: SystemCase,
    h: float = DEFAULT_H,
    xd_prime: float = DEFAULT_XD_PRIME,
    damping: float = DEFAULT_DAMPING,
    f0: float = DEFAULT_F0,
) -> list[MachineParams]:
    """One machine per generation source bus, uniform committed defaults."""
    return [
        MachineParams(bus=b, h=h, xd_prime=xd_prime, damping=damping, f0=f0)
        for b in sorted(source_nodes(case))
    ]


def load_machine_params(text: str, case: SystemCase) -> list[MachineParams]:
    """Machine-parameter file: JSON object keyed by bus id.

    Fields h, xd_prime, damping, f0; omitted fields take the defaults.
    Buses not listed get a default machine.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SimulationError(f"machine parameter file is not valid JSON: {exc}") from exc
    known = {b.id for b in case.buses}
    overrides = {}
    for key, fields in doc.items():
        bus = int(key)
        if bus not in known:
            raise SimulationError(f"machine parameter file names unknown bus {bus}")
        overrides[bus] = fields
    machines = []
    for m in default_machine_params(case):
        o = overrides.get(m.bus, {})
        machines.append(
            MachineParams(
                bus=m.bus,
                h=float(o.get("h", m.h)),
                xd_prime=float(o.get("xd_prime", m.xd_prime)),
                damping=float(o.get("damping", m.damping)),
                f0=float(o.get("f0", m.f0)),
            )
        )
    return machines


def _augmented_ybus(case: SystemCase, sol: PowerFlowSolution, machines) -> np.ndarray:
    """Load-flow Y-bus with constant-admittance injections and machine branches.

    Rows/cols 0..n-1 are network buses, n..n+m-1 the machine internal nodes.
    At machine buses only the local load converts to an admittance (the
    machine itself acts through its EMF); every other bus absorbs its whole
    solved net injection, so reactive support from non-machine voltage
    regulators is retained and the power-flow point stays an equilibrium.
    """
    from .network import build_ybus

    n = len(case.buses)
    m = len(machines)
    index = {bid: i for i, bid in enumerate(sol.bus_ids)}
    machine_buses = {mach.bus for mach in machines}
    y = np.zeros((n + m, n + m), dtype=complex)
    y[:n, :n] = build_ybus(case).entries
    for i, bus in enumerate(case.buses):
        j = index[bus.id]
        v = sol.v_mag[j]
        if bus.id in machine_buses:
            s_absorbed = complex(bus.p_load, bus.q_load)
        else:
            s_absorbed = -complex(sol.p_inj[j], sol.q_inj[j])
        y[i, i] += np.conj(s_absorbed) / (v * v)
    for k, mach in enumerate(machines):
        t = index[mach.bus]
        ym = 1.0 / complex(0.0, mach.xd_prime)
        g = n + k
        y[g, g] += ym
        y[t, t] += ym
        y[g, t] -= ym
        y[t, g] -= ym
    return y


def _kron_reduce(y: np.ndarray, keep: np.ndarray, drop: np.ndarray) -> np.ndarray:
    """Eliminate the drop nodes: Y_kk - Y_kd inv(Y_dd) Y_dk.

    Completely dead drop nodes (all-zero row) are discarded first so the
    inner block stays invertible.
    """
    drop = np.array([i for i in drop if np.max(np.abs(y[i, :])) > 1e-12], dtype=int)
    ykk = y[np.ix_(keep, keep)]
    if drop.size == 0:
        return ykk
    ykd = y[np.ix_(keep, drop)]
    ydk = y[np.ix_(drop, keep)]
    ydd = y[np.ix_(drop, drop)]
    try:
        x = np.linalg.solve(ydd, ydk)
    except np.linalg.LinAlgError:
        x = np.linalg.lstsq(ydd, ydk, rcond=None)[0]
    return ykk - ykd @ x


def init_classical(
    case: SystemCase, sol: PowerFlowSolution, machines: list[MachineParams]
) -> ReducedNetwork:
    """Internal EMFs, mechanical powers, and the pre-fault reduced network."""
    if not sol.converged:
        raise SimulationError("classical setup needs a converged pre-fault solution")
    index = {bid: i for i, bid in enumerate(sol.bus_ids)}
    for mach in machines:
        if mach.bus not in index:
            raise SimulationError(f"machine bus {mach.bus} not in the solved case")
    n = len(case.buses)
    m = len(machines)
    v = sol.v_mag * np.exp(1j * sol.v_ang)
    by_id = {b.id: b for b in case.buses}

    e = np.zeros(m, dtype=complex)
    p_mech = np.zeros(m)
    for k, mach in enumerate(machines):
        i = index[mach.bus]
        bus = by_id[mach.bus]
        s_gen = complex(
            sol.p_inj[i] + bus.p_load,
            sol.q_inj[i] + bus.q_load,
        )
        i_gen = np.conj(s_gen / v[i])
        e[k] = v[i] + 1j * mach.xd_prime * i_gen
        p_mech[k] = s_gen.real

    y_aug = _augmented_ybus(case, sol, machines)
    keep = np.arange(n, n + m)
    drop = np.arange(n)
    y_red = _kron_reduce(y_aug, keep, drop)
    slack_id = case.slack_bus().id
    buses = tuple(mach.bus for mach in machines)
    slack_machine = slack_id if slack_id in buses else buses[0]
    return ReducedNetwork(
        machine_buses=buses,
        slack_machine=slack_machine,
        e_mag=np.abs(e),
        delta0=np.angle(e),
        p_mech=p_mech,
        y_pre=y_red,
    )


def electrical_power(delta: np.ndarray, e_mag: np.ndarray, y_red: np.ndarray) -> np.ndarray:
    """Machine real-power outputs at the given internal angles."""
    ph = e_mag * np.exp(1j * delta)
    return (ph * np.conj(y_red @ ph)).real


def swing_rhs(
    delta: np.ndarray,
    omega: np.ndarray,
    y_red: np.ndarray,
    e_mag: np.ndarray,
    p_mech: np.ndarray,
    h: np.ndarray,
    damping: np.ndarray,
    f0: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """d(delta)/dt = omega; d(omega)/dt = (pi f0 / H)(Pm - Pe - D omega)."""
    pe = electrical_power(delta, e_mag, y_red)
    return omega, (np.pi * f0 / h) * (p_mech - pe - damping * omega)


def _bus_components(case: SystemCase, removed: frozenset[int] | None = None) -> list[set[int]]:
    """Connected components of the bus graph, optionally minus one branch index set."""
    nbrs: dict[int, set[int]] = {b.id: set() for b in case.buses}
    for k, br in enumerate(case.branches):
        if removed and k in removed:
            continue
        nbrs[br.from_bus].add(br.to_bus)
        nbrs[br.to_bus].add(br.from_bus)
    comps = []
    todo = set(nbrs)
    while todo:
        stack = [next(iter(todo))]
        comp = set()
        while stack:
            u = stack.pop()
            if u in comp:
                continue
            comp.add(u)
            stack.extend(nbrs[u] - comp)
        comps.append(comp)
        todo -= comp
    return comps


def _find_branch(case: SystemCase, line: tuple[int, int]) -> int:
    a, b = line
    for k, br in enumerate(case.branches):
        if {br.from_bus, br.to_bus} == {a, b}:
            return k
    raise CaseError(f"no branch {a}-{b} in case {case.name!r}")


def build_fault_states(
    case: SystemCase,
    sol: PowerFlowSolution,
    machines: list[MachineParams],
    line: tuple[int, int],
    fault_end: str = FAULT_AT_FROM,
) -> ReducedNetwork:
    """Reduced networks for the fault-on and post-clearing states.

    The fault-on network grounds the chosen end of the faulted line (its bus
    is eliminated at zero voltage); the post-clearing network removes the
    line. Machines left in an island without the slack machine are reported
    in `islanded`.
    """
    net = init_classical(case, sol, machines)
    k_fault = _find_branch(case, line)
    br = case.branches[k_fault]
    if fault_end not in (FAULT_AT_FROM, FAULT_AT_TO):
        raise SimulationError(f"fault_end must be 'from' or 'to', got {fault_end!r}")
    fault_bus = br.from_bus if fault_end == FAULT_AT_FROM else br.to_bus

    n = len(case.buses)
    m = len(machines)
    index = {b.id: i for i, b in enumerate(case.buses)}
    keep = np.arange(n, n + m)

    y_aug = _augmented_ybus(case, sol, machines)
    fb = index[fault_bus]
    sub = np.delete(np.delete(y_aug, fb, axis=0), fb, axis=1)
    keep_f = np.array([k - 1 if k > fb else k for k in keep])
    y_fault = _kron_reduce(sub, keep_f, np.arange(n - 1))

    post_case_y = _augmented_ybus_without_branch(case, sol, machines, k_fault)
    y_post = _kron_reduce(post_case_y, keep, np.arange(n))

    slack_id = case.slack_bus().id
    comps = _bus_components(case, removed=frozenset([k_fault]))
    slack_comp = next(c for c in comps if slack_id in c)
    islanded = tuple(
        mach.bus for mach in machines if mach.bus not in slack_comp
    )
    return ReducedNetwork(
        machine_buses=net.machine_buses,
        slack_machine=net.slack_machine,
        e_mag=net.e_mag,
        delta0=net.delta0,
        p_mech=net.p_mech,
        y_pre=net.y_pre,
        y_fault=y_fault,
        y_post=y_post,
        islanded=islanded,
    )


def _augmented_ybus_without_branch(case, sol, machines, k_removed):
    from dataclasses import replace

    pruned = replace(
        case, branches=tuple(br for i, br in enumerate(case.branches) if i != k_removed)
    )
    return _augmented_ybus(pruned, sol, machines)


def run_swing(
    net: ReducedNetwork,
    machines: list[MachineParams],
    t_clear: float,
    t_end: float,
    dt: float,
    threshold: float = DEFAULT_THRESHOLD,
) -> SwingTrajectory:
    """Integrate the swing equations across the fault and clearing events.

    Fixed-step RK4; the fault-on matrix applies for t < t_clear and the
    post-clearing matrix afterwards (each defaulting to the pre-fault
    matrix when absent).
    """
    if dt <= 0 or t_end <= 0:
        raise SimulationError("dt and t_end must be positive")
    if not 0 <= t_clear <= t_end:
        raise SimulationError("need 0 <= t_clear <= t_end")
    h = np.array([m.h for m in machines])
    damping = np.array([m.damping for m in machines])
    f0 = np.array([m.f0 for m in machines])
    y_fault = net.y_fault if net.y_fault is not None else net.y_pre
    y_post = net.y_post if net.y_post is not None else net.y_pre

    steps = int(round(t_end / dt))
    clear_step = int(round(t_clear / dt))
    times = np.arange(steps + 1) * dt
    delta = np.zeros((steps + 1, len(machines)))
    omega = np.zeros((steps + 1, len(machines)))
    delta[0] = net.delta0

    d, w = net.delta0.copy(), np.zeros(len(machines))
    for step in range(steps):
        y_now = y_fault if step < clear_step else y_post
        d, w = _rk4_step(d, w, dt, y_now, net.e_mag, net.p_mech, h, damping, f0)
        delta[step + 1] = d
        omega[step + 1] = w

    traj = SwingTrajectory(
        machine_buses=net.machine_buses,
        slack_machine=net.slack_machine,
        times=times,
        delta=delta,
        omega=omega,
        t_clear=t_clear,
        verdict=STABLE,
        first_divergence_time=None,
        islanded=net.islanded,
    )
    verdict_value, t_div = verdict(traj, threshold)
    if net.islanded:
        verdict_value = UNSTABLE
    return SwingTrajectory(
        machine_buses=traj.machine_buses,
        slack_machine=traj.slack_machine,
        times=times,
        delta=delta,
        omega=omega,
        t_clear=t_clear,
        verdict=verdict_value,
        first_divergence_time=t_div,
        islanded=net.islanded,
    )


def _rk4_step(d, w, dt, y, e, pm, h, damp, f0):
    k1d, k1w = swing_rhs(d, w, y, e, pm, h, damp, f0)
    k2d, k2w = swing_rhs(d + 0.5 * dt * k1d, w + 0.5 * dt * k1w, y, e, pm, h, damp, f0)
    k3d, k3w = swing_rhs(d + 0.5 * dt * k2d, w + 0.5 * dt * k2w, y, e, pm, h, damp, f0)
    k4d, k4w = swing_rhs(d + dt * k3d, w + dt * k3w, y, e, pm, h, damp, f0)
    d_next = d + dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
    w_next = w + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    return d_next, w_next


def verdict(traj: SwingTrajectory, threshold: float = DEFAULT_THRESHOLD):
    """Unstable iff a post-clearing relative-angle excursion exceeds threshold.

    Returns (verdict, first_divergence_time or None).
    """
    rel = traj.relative_angles()
    excursion = np.abs(rel - rel[0])
    after = traj.times > traj.t_clear
    if not np.any(after):
        return STABLE, None
    exceeded = np.any(excursion > threshold, axis=1) & after
    if not np.any(exceeded):
        return STABLE, None
    first = int(np.argmax(exceeded))
    return UNSTABLE, float(traj.times[first])


def simulate_fault(
    case: SystemCase,
    sol: PowerFlowSolution,
    machines: list[MachineParams],
    line: tuple[int, int],
    fault_end: str = FAULT_AT_FROM,
    t_clear: float = 1.0,
    t_end: float = 10.0,
    dt: float = 1e-3,
    threshold: float = DEFAULT_THRESHOLD,
) -> SwingTrajectory:
    """Bolted fault at one end of a line from t=0, cleared by removing the line."""
    net = build_fault_states(case, sol, machines, line, fault_end)
    return run_swing(net, machines, t_clear, t_end, dt, threshold)
