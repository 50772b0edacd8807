#!/usr/bin/env python3
"""
Check reports and the JSON verification report
"""

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import __version__

REJECTION_THRESHOLD = 1e-2

# excluded from canonical comparison
VOLATILE_FIELDS = ("generated_at",)


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays into JSON-native values"""
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


@dataclass
class CheckReport:
    """Result of one verification"""

    suite: str
    check: str
    paper_anchor: str
    residual: float
    tolerance: float
    passed: bool
    n_samples: int
    details: Dict[str, Any] = field(default_factory=dict)
    invertible: bool = True
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        """JSON record; the verdict is stored under "pass\""""
        return {
            "suite": self.suite,
            "check": self.check,
            "paper_anchor": self.paper_anchor,
            "residual": _plain(float(self.residual)),
            "tolerance": self.tolerance,
            "pass": self.passed,
            "n_samples": self.n_samples,
            "details": _plain(self.details),
            "invertible": self.invertible,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CheckReport":
        data = dict(data)
        data["passed"] = data.pop("pass")
        residual = data.get("residual")
        if isinstance(residual, str):
            data["residual"] = float(residual)
        return cls(**data)


def make_check(
    suite: str,
    check: str,
    paper_anchor: str,
    residual: float,
    tolerance: float,
    n_samples: int,
    details: Optional[Dict[str, Any]] = None,
    invertible: bool = True,
    note: str = "",
) -> CheckReport:
    residual = float(residual)
    passed = math.isfinite(residual) and residual <= tolerance
    return CheckReport(
        suite=suite,
        check=check,
        paper_anchor=paper_anchor,
        residual=residual,
        tolerance=float(tolerance),
        passed=passed,
        n_samples=int(n_samples),
        details=details or {},
        invertible=invertible,
        note=note,
    )


def apply_expectation(
    checks: List[CheckReport], expect: str, rejection: float = REJECTION_THRESHOLD
) -> List[CheckReport]:
    """Under expect=fail every invertible check passes only if its residual exceeds rejection"""
    if expect == "pass":
        return checks
    out = []
    for check in checks:
        if not check.invertible:
            out.append(check)
            continue
        inverted = CheckReport(**{**asdict(check), "details": dict(check.details)})
        inverted.passed = math.isfinite(check.residual) and check.residual > rejection
        inverted.tolerance = rejection
        inverted.note = (check.note + "; " if check.note else "") + "expected failure"
        out.append(inverted)
    return out


@dataclass
class VerificationReport:
    version: str
    config: Dict[str, Any]
    checks: List[CheckReport]
    generated_at: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[CheckReport]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": self.version,
            "generated_at": self.generated_at,
            "config": _plain(self.config),
            "pass": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }

    def canonical_dict(self) -> Dict[str, Any]:
        out = self.to_dict()
        for key in VOLATILE_FIELDS:
            out.pop(key, None)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json())
        return path

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VerificationReport":
        return cls(
            version=data["version"],
            config=data.get("config", {}),
            checks=[CheckReport.from_dict(c) for c in data.get("checks", [])],
            generated_at=data.get("generated_at", ""),
        )

    @classmethod
    def load(cls, path: Path) -> "VerificationReport":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def new_report(config: Dict[str, Any], checks: List[CheckReport]) -> VerificationReport:
    return VerificationReport(
        version=__version__,
        config=config,
        checks=checks,
        generated_at=datetime.now().isoformat(),
    )


def canonical_json(report: VerificationReport) -> str:
    """Stable text for determinism comparisons"""
    return json.dumps(report.canonical_dict(), indent=2, sort_keys=True, ensure_ascii=False)
