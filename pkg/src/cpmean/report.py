"""Structured command reports with per-check residuals.

Reports render either as human-readable text or as schema-stable JSON: the
same command always emits the same fields, every numeric check carries its
residual and tolerance, and floats are serialized at full precision.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Check:
    name: str
    passed: bool
    residual: float
    tolerance: float


@dataclass
class Report:
    command: str
    inputs: list[dict] = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    def add_input(self, name: str, path: str | None = None):
        entry = {"name": name}
        if path is not None:
            entry["path"] = str(path)
            try:
                with open(path, "rb") as fh:
                    entry["sha256"] = hashlib.sha256(fh.read()).hexdigest()
            except OSError:
                entry["sha256"] = None
        self.inputs.append(entry)

    def check(self, name: str, residual: float, tolerance: float) -> bool:
        ok = bool(residual <= tolerance)
        self.checks.append(Check(name, ok, float(residual), float(tolerance)))
        return ok

    def record(self, name: str, passed: bool, residual: float, tolerance: float):
        self.checks.append(Check(name, bool(passed), float(residual), float(tolerance)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_obj(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "outputs": _jsonable(self.outputs),
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "residual": c.residual,
                    "tolerance": c.tolerance,
                }
                for c in self.checks
            ],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), indent=2)

    def to_text(self) -> str:
        lines = [f"== {self.command} =="]
        for entry in self.inputs:
            path = entry.get("path")
            suffix = f" ({path})" if path else ""
            lines.append(f"input: {entry['name']}{suffix}")
        for key, value in self.outputs.items():
            lines.append(f"{key}: {_format_value(value)}")
        for c in self.checks:
            mark = "ok " if c.passed else "FAIL"
            lines.append(
                f"[{mark}] {c.name}: residual {c.residual:.3e} (tol {c.tolerance:.3e})"
            )
        if self.checks:
            lines.append("all checks passed" if self.passed else "CHECKS FAILED")
        return "\n".join(lines)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return [[_pair(z) for z in row] for row in np.atleast_2d(value)]
        return value.tolist()
    if isinstance(value, complex):
        return _pair(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, np.ndarray):
        with np.printoptions(precision=6, suppress=True, linewidth=120):
            return "\n" + str(np.round(value, 10))
    return str(value)
