"""Machine-readable check reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

OPS = {
    "<": lambda v, t: v < t,
    "<=": lambda v, t: v <= t,
    ">=": lambda v, t: v >= t,
    "in": lambda v, t: t[0] <= v <= t[1],
}


@dataclass
class Report:
    """Checks, data rows and timings of one command.

    Everything except ``timings`` is a deterministic function of the
    command line, so two runs with the same seed serialize identically
    once timings are dropped.
    """

    command: str
    config: dict
    seed: int | None = None
    checks: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def check(self, name: str, value: float, tolerance, op: str = "<") -> bool:
        if op not in OPS:
            raise ValueError(f"unknown comparison {op!r}")
        ok = bool(OPS[op](value, tolerance))
        self.checks.append(
            {"name": name, "value": value, "op": op, "tolerance": tolerance, "pass": ok}
        )
        return ok

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self, timings: bool = True) -> dict:
        out = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "pass": self.passed,
            "checks": self.checks,
        }
        if self.rows:
            out["rows"] = self.rows
        if self.results:
            out["results"] = self.results
        if timings:
            out["timings"] = self.timings
        return out

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2) + "\n"
