"""Bus admittance matrix, Newton-Raphson AC power flow, and branch flows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cases import PQ, PV, SLACK, SystemCase


class PowerFlowError(RuntimeError):
    """Solver failure; carries the per-iteration max-mismatch history."""

    def __init__(self, message: str, mismatch_history: tuple[float, ...] = ()):
        super().__init__(message)
        self.mismatch_history = mismatch_history


@dataclass(frozen=True)
class AdmittanceMatrix:
    n: int
    ids: tuple[int, ...]
    entries: np.ndarray  # complex, n x n

    def index_of(self, bus_id: int) -> int:
        return self.ids.index(bus_id)


@dataclass(frozen=True)
class PowerFlowSolution:
    bus_ids: tuple[int, ...]
    v_mag: np.ndarray
    v_ang: np.ndarray  # radians
    p_inj: np.ndarray
    q_inj: np.ndarray
    iterations: int
    max_mismatch: float
    converged: bool
    mismatch_history: tuple[float, ...]

    def angle_of(self, bus_id: int) -> float:
        return float(self.v_ang[self.bus_ids.index(bus_id)])


@dataclass(frozen=True)
class BranchFlow:
    """Complex power entering the branch at each end, per-unit.

    p_send/q_send flow from from_bus into the branch; p_recv/q_recv flow from
    to_bus into the branch (negative when the branch delivers power there).
    loss = p_send + p_recv and is nonnegative for passive branches.
    """

    from_bus: int
    to_bus: int
    p_send: float
    q_send: float
    p_recv: float
    q_recv: float
    loss: float


def build_ybus(case: SystemCase) -> AdmittanceMatrix:
    """Assemble the complex bus admittance matrix of the case.

    Series admittances are tap-adjusted on the from side; half the line
    charging plus any bus-to-neutral shunt lands on each diagonal.
    """
    ids = tuple(b.id for b in case.buses)
    index = {bid: i for i, bid in enumerate(ids)}
    n = len(ids)
    y = np.zeros((n, n), dtype=complex)
    for k, br in enumerate(case.branches):
        z = complex(br.r, br.x)
        if z == 0:
            raise PowerFlowError(
                f"branch {k} ({br.from_bus}-{br.to_bus}) has zero series impedance"
            )
        ys = 1.0 / z
        ysh = 0.5j * br.b_charging
        a = br.tap_ratio
        f, t = index[br.from_bus], index[br.to_bus]
        y[f, f] += (ys + ysh) / (a * a)
        y[t, t] += ys + ysh
        y[f, t] -= ys / a
        y[t, f] -= ys / a
    for i, bus in enumerate(case.buses):
        y[i, i] += complex(bus.shunt_g, bus.shunt_b)
    return AdmittanceMatrix(n=n, ids=ids, entries=y)


def _scheduled_injections(case: SystemCase) -> tuple[np.ndarray, np.ndarray]:
    p = np.array([b.p_gen - b.p_load for b in case.buses])
    q = np.array([b.q_gen - b.q_load for b in case.buses])
    return p, q


def solve_power_flow(case: SystemCase, tol: float = 1e-8, max_iter: int = 50) -> PowerFlowSolution:
    """Full Newton-Raphson power flow in polar coordinates from a flat start.

    PV buses hold their voltage setpoint (no reactive limits). Raises
    PowerFlowError on non-convergence or a singular Jacobian.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ybus = build_ybus(case)
    y = ybus.entries
    n = ybus.n
    kinds = [b.kind for b in case.buses]
    slack = kinds.index(SLACK)
    pvpq = np.array([i for i, k in enumerate(kinds) if k != SLACK], dtype=int)
    pq = np.array([i for i, k in enumerate(kinds) if k == PQ], dtype=int)

    vm = np.array([b.v_mag if b.kind != PQ else 1.0 for b in case.buses], dtype=float)
    ref_ang = np.deg2rad(case.buses[slack].v_ang_deg)
    va = np.full(n, ref_ang, dtype=float)
    psched, qsched = _scheduled_injections(case)

    history: list[float] = []
    iterations = 0
    for it in range(max_iter + 1):
        v = vm * np.exp(1j * va)
        s = v * np.conj(y @ v)
        mis = np.concatenate([psched[pvpq] - s.real[pvpq], qsched[pq] - s.imag[pq]])
        max_mis = float(np.max(np.abs(mis))) if mis.size else 0.0
        history.append(max_mis)
        if max_mis < tol:
            iterations = it
            break
        if it == max_iter:
            raise PowerFlowError(
                f"power flow did not converge in {max_iter} iterations "
                f"(max mismatch {max_mis:.3e} pu)",
                tuple(history),
            )
        jac = _jacobian(y, v, vm, pvpq, pq)
        try:
            dx = np.linalg.solve(jac, mis)
        except np.linalg.LinAlgError as exc:
            weak = int(np.argmin(np.abs(np.diag(jac))))
            bus = ybus.ids[pvpq[weak]] if weak < pvpq.size else ybus.ids[pq[weak - pvpq.size]]
            raise PowerFlowError(
                f"singular Jacobian at iteration {it}; weakest pivot at bus {bus}",
                tuple(history),
            ) from exc
        va[pvpq] += dx[: pvpq.size]
        vm[pq] += dx[pvpq.size:]

    v = vm * np.exp(1j * va)
    s = v * np.conj(y @ v)
    return PowerFlowSolution(
        bus_ids=ybus.ids,
        v_mag=vm,
        v_ang=va,
        p_inj=s.real,
        q_inj=s.imag,
        iterations=iterations,
        max_mismatch=history[-1],
        converged=True,
        mismatch_history=tuple(history),
    )


def _jacobian(y, v, vm, pvpq, pq):
    # dS/dtheta and dS/d|V| in polar form, assembled densely
    ibus = y @ v
    diag_v = np.diag(v)
    diag_i = np.diag(ibus)
    diag_vnorm = np.diag(v / np.abs(v))
    ds_dva = 1j * diag_v @ np.conj(diag_i - y @ diag_v)
    ds_dvm = diag_v @ np.conj(y @ diag_vnorm) + np.conj(diag_i) @ diag_vnorm
    j11 = ds_dva[np.ix_(pvpq, pvpq)].real
    j12 = ds_dvm[np.ix_(pvpq, pq)].real
    j21 = ds_dva[np.ix_(pq, pvpq)].imag
    j22 = ds_dvm[np.ix_(pq, pq)].imag
    return np.block([[j11, j12], [j21, j22]])


def branch_flows(case: SystemCase, sol: PowerFlowSolution) -> list[BranchFlow]:
    """Sending/receiving complex power for every branch of the case."""
    if not sol.converged:
        raise PowerFlowError("branch flows require a converged solution")
    index = {bid: i for i, bid in enumerate(sol.bus_ids)}
    for k, br in enumerate(case.branches):
        if br.from_bus not in index or br.to_bus not in index:
            raise PowerFlowError(
                f"branch {k} ({br.from_bus}-{br.to_bus}) references a bus "
                "absent from the solution"
            )
    v = sol.v_mag * np.exp(1j * sol.v_ang)
    flows = []
    for br in case.branches:
        f, t = index[br.from_bus], index[br.to_bus]
        ys = 1.0 / complex(br.r, br.x)
        ysh = 0.5j * br.b_charging
        a = br.tap_ratio
        i_f = (ys + ysh) / (a * a) * v[f] - ys / a * v[t]
        i_t = -ys / a * v[f] + (ys + ysh) * v[t]
        s_f = v[f] * np.conj(i_f)
        s_t = v[t] * np.conj(i_t)
        flows.append(
            BranchFlow(
                from_bus=br.from_bus,
                to_bus=br.to_bus,
                p_send=float(s_f.real),
                q_send=float(s_f.imag),
                p_recv=float(s_t.real),
                q_recv=float(s_t.imag),
                loss=float(s_f.real + s_t.real),
            )
        )
    return flows


def power_balance_residual(case: SystemCase, sol: PowerFlowSolution) -> float:
    """|sum of bus injections - branch losses - shunt conductance draw| in pu."""
    flows = branch_flows(case, sol)
    loss = sum(f.loss for f in flows)
    shunt = float(np.sum([b.shunt_g for b in case.buses] * sol.v_mag**2))
    return abs(float(np.sum(sol.p_inj)) - loss - shunt)
