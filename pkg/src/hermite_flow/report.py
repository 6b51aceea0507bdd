"""Named verification results shared by every module and the CLI."""
from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any


def _clean(v: Any) -> Any:
    """Convert numpy scalars/arrays to plain JSON-friendly Python values."""
    if hasattr(v, "tolist"):
        v = v.tolist()
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


@dataclass
class CheckReport:
    """Outcome of one certification: ``pass`` iff ``margin >= -tolerance``."""

    name: str
    params: dict[str, Any]
    value: float
    bound: float
    margin: float
    tolerance: float = 0.0
    runtime_ms: int = 0
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.margin >= -self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "params": _clean(dict(sorted(self.params.items()))),
            "value": _clean(float(self.value)),
            "bound": _clean(float(self.bound)),
            "margin": _clean(float(self.margin)),
            "pass": self.passed,
            "runtime_ms": int(self.runtime_ms),
        }

    def sort_key(self) -> tuple:
        return (self.name, repr(sorted(_clean(self.params).items())))

    def __str__(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        ps = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"[{flag}] {self.name}({ps}): value={self.value:.6g} bound={self.bound:.6g} margin={self.margin:.3g}"


@contextmanager
def stopwatch():
    """Yields a one-element list that receives elapsed milliseconds on exit."""
    out = [0]
    t0 = time.perf_counter()
    try:
        yield out
    finally:
        out[0] = int(round(1000 * (time.perf_counter() - t0)))


def error_report(name: str, params: dict[str, Any], error: float, tolerance: float, runtime_ms: int = 0,
                 details: dict[str, Any] | None = None) -> CheckReport:
    """Report for "error ≤ tolerance": value = error, bound = tolerance, margin = tolerance - error."""
    error = float(error)
    margin = tolerance - error if math.isfinite(error) else -math.inf
    return CheckReport(name, params, error, tolerance, margin, 0.0, runtime_ms, details or {})
