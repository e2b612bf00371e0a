"""Static network description: buses, branches, and case-level operations.

All electrical quantities are stored in per-unit on the case MVA base.
Cases are immutable; every transformation returns a new SystemCase.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, replace

SLACK = "slack"
PV = "pv"
PQ = "pq"

_BUS_KINDS = (SLACK, PV, PQ)


class CaseError(ValueError):
    """Raised when a case file or SystemCase violates the data contract."""


@dataclass(frozen=True)
class BusRecord:
    id: int
    kind: str
    v_mag: float = 1.0
    v_ang_deg: float = 0.0
    p_gen: float = 0.0
    q_gen: float = 0.0
    p_load: float = 0.0
    q_load: float = 0.0
    shunt_g: float = 0.0
    shunt_b: float = 0.0


@dataclass(frozen=True)
class BranchRecord:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_charging: float = 0.0
    tap_ratio: float = 1.0
    circuit_id: int = 1


@dataclass(frozen=True)
class SystemCase:
    name: str
    base_mva: float
    buses: tuple[BusRecord, ...]
    branches: tuple[BranchRecord, ...]

    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def bus_by_id(self, bus_id: int) -> BusRecord:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise CaseError(f"no bus with id {bus_id} in case {self.name!r}")

    def slack_bus(self) -> BusRecord:
        return next(b for b in self.buses if b.kind == SLACK)


def validate_case(case: SystemCase) -> SystemCase:
    """Check the SystemCase invariants, returning the case unchanged.

    Raises CaseError naming the offending record on the first violation.
    """
    if case.base_mva <= 0:
        raise CaseError(f"base_mva must be positive, got {case.base_mva}")
    if not case.buses:
        raise CaseError("case has no buses")
    seen: set[int] = set()
    slack_count = 0
    for bus in case.buses:
        if bus.id in seen:
            raise CaseError(f"duplicate bus id {bus.id}")
        seen.add(bus.id)
        if bus.kind not in _BUS_KINDS:
            raise CaseError(f"bus {bus.id}: unknown kind {bus.kind!r}")
        if bus.kind == SLACK:
            slack_count += 1
        if bus.kind in (SLACK, PV) and bus.v_mag <= 0:
            raise CaseError(f"bus {bus.id}: {bus.kind} bus needs v_mag > 0, got {bus.v_mag}")
    if slack_count != 1:
        raise CaseError(f"exactly one slack bus required, found {slack_count}")
    for k, br in enumerate(case.branches):
        if br.from_bus not in seen or br.to_bus not in seen:
            raise CaseError(f"branch {k} ({br.from_bus}-{br.to_bus}): endpoint not a known bus")
        if br.from_bus == br.to_bus:
            raise CaseError(f"branch {k}: self-loop at bus {br.from_bus}")
        if br.r == 0 and br.x == 0:
            raise CaseError(f"branch {k} ({br.from_bus}-{br.to_bus}): zero series impedance")
    return case


def merge_parallel_branches(case: SystemCase) -> SystemCase:
    """Collapse parallel circuits between the same bus pair into one branch.

    The merged branch carries the parallel combination of the complex series
    impedances and the sum of the charging; it keeps the position and
    orientation of the first circuit encountered. Identity when no parallels
    exist.
    """
    groups: dict[frozenset[int], list[BranchRecord]] = {}
    order: list[frozenset[int]] = []
    for br in case.branches:
        key = frozenset((br.from_bus, br.to_bus))
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(br)

    merged: list[BranchRecord] = []
    for key in order:
        members = groups[key]
        if len(members) == 1:
            merged.append(members[0])
            continue
        taps = {m.tap_ratio for m in members}
        if len(taps) > 1:
            pair = "-".join(str(i) for i in sorted(key))
            raise CaseError(f"parallel branches {pair} have differing tap ratios {sorted(taps)}")
        y_total = sum(1.0 / complex(m.r, m.x) for m in members)
        z = 1.0 / y_total
        first = members[0]
        merged.append(
            replace(
                first,
                r=z.real,
                x=z.imag,
                b_charging=sum(m.b_charging for m in members),
                circuit_id=1,
            )
        )
    return replace(case, branches=tuple(merged))


# ---------------------------------------------------------------------------
# Native structured-text case format (JSON with the domain-type field names)
# ---------------------------------------------------------------------------

_BUS_FIELDS = ("id", "kind", "v_mag", "v_ang_deg", "p_gen", "q_gen",
               "p_load", "q_load", "shunt_g", "shunt_b")
_BRANCH_FIELDS = ("from_bus", "to_bus", "r", "x", "b_charging", "tap_ratio", "circuit_id")


def parse_case_native(text: str) -> SystemCase:
    """Parse the native JSON case format into a validated SystemCase."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseError(f"native case is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CaseError("native case must be a JSON object")
    for field in ("name", "base_mva", "buses", "branches"):
        if field not in doc:
            raise CaseError(f"missing required field: {field}")
    buses = []
    for i, entry in enumerate(doc["buses"]):
        buses.append(_record_from(entry, BusRecord, _BUS_FIELDS, f"buses[{i}]"))
    branches = []
    for i, entry in enumerate(doc["branches"]):
        branches.append(_record_from(entry, BranchRecord, _BRANCH_FIELDS, f"branches[{i}]"))
    case = SystemCase(
        name=str(doc["name"]),
        base_mva=float(doc["base_mva"]),
        buses=tuple(buses),
        branches=tuple(branches),
    )
    return validate_case(case)


def _record_from(entry, cls, fields, path):
    if not isinstance(entry, dict):
        raise CaseError(f"{path}: expected an object")
    unknown = set(entry) - set(fields)
    if unknown:
        raise CaseError(f"{path}: unknown fields {sorted(unknown)}")
    kwargs = {}
    for field in fields:
        if field in entry:
            kwargs[field] = entry[field]
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise CaseError(f"{path}: {exc}") from exc


def emit_case_native(case: SystemCase) -> str:
    """Serialize a SystemCase to the native JSON format (round-trips exactly)."""
    doc = {
        "name": case.name,
        "base_mva": case.base_mva,
        "buses": [asdict(b) for b in case.buses],
        "branches": [asdict(b) for b in case.branches],
    }
    return json.dumps(doc, indent=2) + "\n"
