"""Structured pass/fail records and their JSON/CSV serialisation."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


def to_builtin(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and tuples into JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan literals; keep them readable
        return x if math.isfinite(x) else repr(x)
    return obj


@dataclass
class CheckReport:
    """One verified identity or inequality.

    ``passed`` is ``|residual| <= tolerance`` for equalities. Inequality checks
    set ``one_sided=True`` and pass when ``residual >= -tolerance``.
    """

    name: str
    computed: float
    reference: float
    tolerance: float
    residual: float
    passed: bool
    one_sided: bool = False
    details: dict = field(default_factory=dict)

    @classmethod
    def equality(cls, name, computed, reference, tolerance, *, relative=False, **details):
        residual = float(computed) - float(reference)
        scale = abs(float(reference)) if relative and reference != 0 else 1.0
        passed = abs(residual) <= tolerance * scale
        return cls(name, float(computed), float(reference), float(tolerance),
                   residual, bool(passed), False, details)

    @classmethod
    def at_least(cls, name, computed, reference, tolerance, **details):
        residual = float(computed) - float(reference)
        return cls(name, float(computed), float(reference), float(tolerance),
                   residual, bool(residual >= -tolerance), True, details)

    def to_dict(self) -> dict:
        return to_builtin({
            "name": self.name,
            "computed": self.computed,
            "reference": self.reference,
            "tolerance": self.tolerance,
            "residual": self.residual,
            "pass": self.passed,
            "one_sided": self.one_sided,
            "details": self.details,
        })

    def to_json(self, **kw) -> str:
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        return cls(d["name"], d["computed"], d["reference"], d["tolerance"],
                   d["residual"], d["pass"], d.get("one_sided", False),
                   d.get("details", {}))

    @classmethod
    def from_json(cls, text: str) -> "CheckReport":
        return cls.from_dict(json.loads(text))


def write_csv(path, header, columns) -> Path:
    """Write equal-length columns with a header row; floats use repr-exact
    ``%.17g`` so reruns are byte identical."""
    path = Path(path)
    rows = zip(*columns)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{float(v):.17g}" for v in row])
    return path
