"""Verification reports and their JSON serialization (schema kinetic-gap/report-v1)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

SCHEMA = "kinetic-gap/report-v1"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return repr(obj)


@dataclass
class EstimateReport:
    """One verified identity or inequality.

    tier: "exact" (machine/quadrature identity), "explicit" (paper constant
    checked verbatim), or "fitted" (constant fitted from extremes, recorded,
    only existence/positivity asserted).
    """

    name: str
    tier: str
    sample_desc: str = ""
    stats: dict = field(default_factory=dict)
    bound: float | None = None
    fitted: dict = field(default_factory=dict)
    passed: bool = True
    tolerances: dict = field(default_factory=dict)
    seed: int | None = None
    n_samples: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = SCHEMA
        d["pass"] = d.pop("passed")
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def __str__(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name} ({self.tier})"


def write_reports(reports, path):
    """Write a deterministic JSON array of reports."""
    payload = [r.to_dict() for r in reports]
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
