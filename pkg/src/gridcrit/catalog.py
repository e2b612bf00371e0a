"""Locate and load cases: packaged IEEE systems or user files."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .cases import CaseError, SystemCase, parse_case_native, validate_case
from .cdf import parse_cdf

BUILTIN_CASES = {
    "ieee30": "ieee30.cdf",
    "ieee57": "ieee57.cdf",
    "ieee118": "ieee118.cdf",
    "ieee300": "ieee300.cdf",
}


def builtin_case_path(name: str) -> Path:
    if name not in BUILTIN_CASES:
        raise CaseError(f"unknown built-in case {name!r}; have {sorted(BUILTIN_CASES)}")
    return Path(str(resources.files("gridcrit") / "data" / BUILTIN_CASES[name]))


def load_case(spec: str | Path) -> SystemCase:
    """Load a case from a built-in name (e.g. 'ieee30') or a file path.

    Files ending in .json use the native format; anything else is parsed
    as IEEE CDF text.
    """
    if isinstance(spec, str) and spec in BUILTIN_CASES:
        path = builtin_case_path(spec)
    else:
        path = Path(spec)
    if not path.exists():
        raise CaseError(f"case file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return parse_case_native(text)
    return validate_case(parse_cdf(text))
