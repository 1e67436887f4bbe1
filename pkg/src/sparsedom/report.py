"""Per-check verification records and their serialized forms."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field


@dataclass
class VerificationReport:
    check: str
    lhs: float
    rhs: float
    ratio: float
    slack: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        rec = {
            "check": self.check,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "slack": self.slack,
            "pass": self.passed,
        }
        rec.update({k: v for k, v in sorted(self.details.items())})
        return json.dumps(rec, sort_keys=True)

    def csv_row(self) -> str:
        return (f"{self.check},{self.lhs!r},{self.rhs!r},"
                f"{self.ratio!r},{self.slack!r},{self.passed}")


def make_report(check: str, lhs: float, rhs: float, slack: float,
                **details) -> VerificationReport:
    """Build a report with the pass predicate `lhs <= slack * rhs` exactly."""
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = math.inf if lhs > 0 else 0.0
    passed = bool(lhs <= slack * rhs)
    return VerificationReport(check, float(lhs), float(rhs), float(ratio),
                              float(slack), passed, details)


def inputs_digest(obj) -> str:
    """Deterministic hex digest of a JSON-serializable description."""
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
