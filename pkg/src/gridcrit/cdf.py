"""IEEE Common Data Format reader/writer (fixed-column text).

Column map implemented here (1-based, inclusive; per the de facto 1973
exchange-format layout):

Title card:   32-37 MVA base, 2-9 date, 46-73 case identification.
Bus section   ("BUS DATA FOLLOWS" .. "-999"):
    1-4   bus number          28-33 final voltage (pu)   60-67 gen MW
    7-17  name                34-40 final angle (deg)    68-75 gen MVAR
    19-20 area                41-49 load MW              85-90 desired volts (pu)
    21-23 loss zone           50-59 load MVAR           107-114 shunt G (pu)
    25-26 type (0/1 PQ, 2 PV, 3 slack)                  115-122 shunt B (pu)
Branch section ("BRANCH DATA FOLLOWS" .. "-999"):
    1-4   tap (from) bus      17    circuit              41-50 line charging B (pu, total)
    6-9   z (to) bus          20-29 resistance R (pu)    77-82 transformer tap ratio
    11-12 area                30-40 reactance X (pu)     84-90 phase shift (deg, unused)

MW/MVAR quantities are converted to per-unit on the title-card base at parse
time. The PV/slack voltage setpoint is the desired-volts field when present,
falling back to the final-voltage field.
"""

from __future__ import annotations

from .cases import PQ, PV, SLACK, BranchRecord, BusRecord, CaseError, SystemCase, validate_case


class CdfError(CaseError):
    """Raised for malformed CDF input, naming line and column range."""


def _field(line: str, start: int, end: int) -> str:
    return line[start - 1:end].strip()


def _num(line: str, start: int, end: int, lineno: int, kind, default=None):
    raw = _field(line, start, end)
    if raw == "":
        if default is None:
            raise CdfError(f"line {lineno}, cols {start}-{end}: required field is blank")
        return default
    try:
        return kind(raw)
    except ValueError as exc:
        raise CdfError(
            f"line {lineno}, cols {start}-{end}: cannot parse {raw!r} as {kind.__name__}"
        ) from exc


_TYPE_TO_KIND = {0: PQ, 1: PQ, 2: PV, 3: SLACK}


def parse_cdf(text: str) -> SystemCase:
    """Parse an IEEE Common Data Format file into a validated SystemCase."""
    lines = text.splitlines()
    if not lines:
        raise CdfError("empty file")

    title = lines[0]
    base_raw = _field(title, 32, 37)
    try:
        base_mva = float(base_raw)
    except ValueError as exc:
        raise CdfError(f"line 1, cols 32-37: cannot parse MVA base {base_raw!r}") from exc
    name = _field(title, 46, 73) or _field(title, 11, 30) or "unnamed"

    buses: list[BusRecord] = []
    branches: list[BranchRecord] = []
    section = None
    terminated = True
    for lineno, line in enumerate(lines[1:], start=2):
        upper = line.upper()
        if "BUS DATA FOLLOWS" in upper:
            section, terminated = "bus", False
            continue
        if "BRANCH DATA FOLLOWS" in upper:
            section, terminated = "branch", False
            continue
        if section is None:
            continue
        if line.lstrip().startswith("-999"):
            section, terminated = None, True
            continue
        if not line.strip():
            continue
        if section == "bus":
            buses.append(_parse_bus_card(line, lineno, base_mva))
        else:
            branches.append(_parse_branch_card(line, lineno))
    if not terminated:
        raise CdfError(f"{section} section is missing its -999 terminator")
    if not buses:
        raise CdfError("no bus data section found")

    case = SystemCase(name=name, base_mva=base_mva, buses=tuple(buses), branches=tuple(branches))
    return validate_case(case)


def _parse_bus_card(line: str, lineno: int, base: float) -> BusRecord:
    number = _num(line, 1, 4, lineno, int)
    bus_type = _num(line, 25, 26, lineno, int, default=0)
    if bus_type not in _TYPE_TO_KIND:
        raise CdfError(f"line {lineno}, cols 25-26: unknown bus type code {bus_type}")
    final_v = _num(line, 28, 33, lineno, float, default=0.0)
    final_ang = _num(line, 34, 40, lineno, float, default=0.0)
    desired_v = _num(line, 85, 90, lineno, float, default=0.0)
    v_mag = desired_v if desired_v > 0 else (final_v if final_v > 0 else 1.0)
    return BusRecord(
        id=number,
        kind=_TYPE_TO_KIND[bus_type],
        v_mag=v_mag,
        v_ang_deg=final_ang,
        p_load=_num(line, 41, 49, lineno, float, default=0.0) / base,
        q_load=_num(line, 50, 59, lineno, float, default=0.0) / base,
        p_gen=_num(line, 60, 67, lineno, float, default=0.0) / base,
        q_gen=_num(line, 68, 75, lineno, float, default=0.0) / base,
        shunt_g=_num(line, 107, 114, lineno, float, default=0.0),
        shunt_b=_num(line, 115, 122, lineno, float, default=0.0),
    )


def _parse_branch_card(line: str, lineno: int) -> BranchRecord:
    ratio = _num(line, 77, 82, lineno, float, default=0.0)
    return BranchRecord(
        from_bus=_num(line, 1, 4, lineno, int),
        to_bus=_num(line, 6, 9, lineno, int),
        circuit_id=_num(line, 17, 17, lineno, int, default=1) or 1,
        r=_num(line, 20, 29, lineno, float, default=0.0),
        x=_num(line, 30, 40, lineno, float, default=0.0),
        b_charging=_num(line, 41, 50, lineno, float, default=0.0),
        tap_ratio=ratio if ratio > 0 else 1.0,
    )


_KIND_TO_TYPE = {PQ: 0, PV: 2, SLACK: 3}


def emit_cdf(case: SystemCase, base_kv: float = 0.0) -> str:
    """Write a SystemCase as CDF text (inverse of parse_cdf for stored fields)."""
    base = case.base_mva
    title = list(" " * 73)
    stamp = " 01/01/00 GRIDCRIT ORIGIN      "
    title[: len(stamp)] = stamp
    title[31:37] = f"{base:6.1f}"
    title[38:42] = "2000"
    title[43] = "S"
    ident = case.name[:28]
    title[45:45 + len(ident)] = ident
    out = ["".join(title)]

    out.append(f"BUS DATA FOLLOWS {len(case.buses):>28} ITEMS")
    for b in case.buses:
        card = list(" " * 127)
        card[0:4] = f"{b.id:4d}"
        name = f"BUS {b.id}"[:11]
        card[6:6 + len(name)] = name
        card[18:20] = " 1"
        card[20:23] = "  1"
        card[24:26] = f"{_KIND_TO_TYPE[b.kind]:2d}"
        card[27:33] = f"{b.v_mag:6.4f}"[:6]
        card[33:40] = f"{b.v_ang_deg:7.2f}"
        card[40:49] = f"{b.p_load * base:9.2f}"
        card[49:59] = f"{b.q_load * base:10.2f}"
        card[59:67] = f"{b.p_gen * base:8.2f}"
        card[67:75] = f"{b.q_gen * base:8.2f}"
        card[76:83] = f"{base_kv:7.2f}"
        setpoint = b.v_mag if b.kind in (PV, SLACK) else 0.0
        card[84:90] = f"{setpoint:6.4f}"[:6]
        card[90:98] = f"{0.0:8.1f}"
        card[98:106] = f"{0.0:8.1f}"
        card[106:114] = f"{b.shunt_g:8.4f}"
        card[114:122] = f"{b.shunt_b:8.4f}"
        card[123:127] = "   0"
        out.append("".join(card).rstrip())
    out.append("-999")

    out.append(f"BRANCH DATA FOLLOWS {len(case.branches):>25} ITEMS")
    for br in case.branches:
        card = list(" " * 126)
        card[0:4] = f"{br.from_bus:4d}"
        card[5:9] = f"{br.to_bus:4d}"
        card[10:12] = " 1"
        card[12:15] = "  1"
        card[16] = str(br.circuit_id)[:1]
        is_xfmr = br.tap_ratio != 1.0
        card[18] = "1" if is_xfmr else "0"
        card[19:29] = f"{br.r:10.6f}"
        card[29:40] = f"{br.x:11.6f}"
        card[40:50] = f"{br.b_charging:10.6f}"
        card[50:55] = f"{0:5d}"
        card[56:61] = f"{0:5d}"
        card[62:67] = f"{0:5d}"
        card[68:72] = f"{0:4d}"
        card[73] = "0"
        card[76:82] = f"{br.tap_ratio:6.4f}"[:6] if is_xfmr else f"{0.0:6.1f}"
        card[83:90] = f"{0.0:7.2f}"
        out.append("".join(card).rstrip())
    out.append("-999")
    out.append("END OF DATA")
    return "\n".join(out) + "\n"
