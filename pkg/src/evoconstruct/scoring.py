"""Shared scoring types: infeasibility signalling and evaluation reports."""

from __future__ import annotations

import time
from dataclasses import dataclass, field


class Infeasible(Exception):
    """Raised by an evaluator when a candidate violates a hard constraint."""

    def __init__(self, reason: str, **details):
        super().__init__(reason)
        self.reason = reason
        self.details = details


class UnsupportedInstance(ValueError):
    """Instance outside an evaluator's supported range (e.g. oracle scale bounds)."""


EVALUATOR_VERSION = "1"


@dataclass
class EvaluationReport:
    """Outcome of one evaluator call.

    ``score`` is canonical (larger is better); ``raw_score`` is the evaluator's
    native value, kept as a double entry so the negation convention for
    minimization problems stays auditable.
    """

    raw_score: float | None
    score: float | None
    feasible: bool
    reason: str = ""
    penalties: dict = field(default_factory=dict)
    wall_ms: float = 0.0
    evaluator_version: str = EVALUATOR_VERSION


def timed_report(orientation: str, fn, *args, **kwargs) -> EvaluationReport:
    """Run an evaluator, translating Infeasible into a flagged report."""
    t0 = time.monotonic()
    try:
        raw = fn(*args, **kwargs)
    except Infeasible as exc:
        wall = (time.monotonic() - t0) * 1000.0
        return EvaluationReport(raw_score=None, score=None, feasible=False,
                                reason=exc.reason, penalties=dict(exc.details), wall_ms=wall)
    wall = (time.monotonic() - t0) * 1000.0
    raw_f = float(raw)
    score = raw_f if orientation == "max" else -raw_f
    return EvaluationReport(raw_score=raw_f, score=score, feasible=True, wall_ms=wall)
