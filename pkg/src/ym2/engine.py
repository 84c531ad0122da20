"""Common result type and failure modes shared by all evaluation engines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class EngineResult:
    """Value and error bar of one engine run.

    ``error`` is an a-priori truncation bound for the deterministic engines
    and a standard error for the sampling engines.  ``params`` echoes the
    effective parameters plus diagnostics (work done, truncation order, ...).
    """

    value: float
    error: float
    engine: str
    params: dict[str, Any] = field(default_factory=dict)


class EngineRefusal(RuntimeError):
    """The requested engine cannot evaluate this input (wrong shape of word,
    unsupported group, ...); maps to CLI exit code 3."""


class BudgetExceeded(RuntimeError):
    """The requested computation does not fit the work budget; maps to CLI
    exit code 4."""
