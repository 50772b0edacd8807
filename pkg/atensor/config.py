#!/usr/bin/env python3
"""
Run configuration: flags and JSON config files share one schema
"""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from .errors import UsageError
from .report import REJECTION_THRESHOLD
from .suites import EXAMPLES, example_params, resolve_suite

MIN_SAMPLES = 10
FORMATS = ("json", "csv")
EXPECTATIONS = ("pass", "fail")


@dataclass
class RunConfig:
    example: str = "berger"
    params: Dict[str, Any] = field(default_factory=dict)
    suites: List[str] = field(default_factory=lambda: ["a-condition"])
    samples: int = 200
    seed: int = 42
    geodesics: int = 50
    t_end: float = 10.0
    integrator_tol: float = 1e-10
    energy_tol: float = 1e-8
    tolerances: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None
    format: str = "json"
    expect: str = "pass"
    rejection: float = REJECTION_THRESHOLD

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"Unknown configuration keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"Cannot read config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise UsageError(f"Config file {path} must hold a JSON object")
        return cls.from_dict(data)

    def tolerance_for(self, suite: str) -> float:
        resolved = resolve_suite(suite)
        return self.tolerances.get(resolved.name, resolved.default_tolerance)

    def validate(self) -> "RunConfig":
        """Raise UsageError on the first invalid setting; returns self"""
        if self.example not in EXAMPLES:
            raise UsageError(f"Unknown example {self.example!r}; choose from {', '.join(EXAMPLES)}")
        self.params = example_params(self.example, self.params)
        if not self.suites:
            raise UsageError("At least one suite is required")
        # aliases resolve to the numbered names
        self.suites = [resolve_suite(name).name for name in self.suites]
        tolerances = {}
        for name, value in self.tolerances.items():
            if not isinstance(value, (int, float)) or value <= 0:
                raise UsageError(f"Tolerance for {name} must be positive, got {value!r}")
            tolerances[resolve_suite(name).name] = value
        self.tolerances = tolerances
        if self.samples < MIN_SAMPLES:
            raise UsageError(f"samples must be at least {MIN_SAMPLES}, got {self.samples}")
        if self.geodesics < 1:
            raise UsageError(f"geodesics must be positive, got {self.geodesics}")
        if self.t_end <= 0:
            raise UsageError(f"t_end must be positive, got {self.t_end}")
        if not 1e-12 <= self.integrator_tol <= 1e-4:
            raise UsageError(f"integrator_tol must lie in [1e-12, 1e-4], got {self.integrator_tol}")
        for name in ("energy_tol", "rejection"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {', '.join(FORMATS)}")
        if self.expect not in EXPECTATIONS:
            raise UsageError(f"expect must be one of {', '.join(EXPECTATIONS)}")
        return self


def parse_tolerance(spec: str) -> Dict[str, float]:
    """'suite=value' from the command line"""
    name, sep, value = spec.partition("=")
    if not sep:
        raise UsageError(f"Tolerance {spec!r} must look like suite=value")
    try:
        return {name.strip(): float(value)}
    except ValueError as e:
        raise UsageError(f"Tolerance value {value!r} is not a number") from e
