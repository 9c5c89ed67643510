"""Termination criteria shared by the layout drivers and the experiment harness."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .errors import InvalidParams


@dataclass(frozen=True)
class TerminationCriteria:
    """Stop conditions checked after every evaluation interval.

    ``max_iters`` counts evaluation intervals, ``time_limit`` is wall-clock
    seconds, ``stall_iters`` is the length of a window over which the
    sensitivity did not change. Metric targets only apply when a ground
    truth is available (see :mod:`cncah.harness`).
    """

    max_iters: Optional[int] = None
    target_sensitivity: Optional[float] = None
    target_specificity: Optional[float] = None
    target_accuracy: Optional[float] = None
    time_limit: Optional[float] = None
    stall_iters: Optional[int] = None

    def __post_init__(self):
        fields = (
            self.max_iters,
            self.target_sensitivity,
            self.target_specificity,
            self.target_accuracy,
            self.time_limit,
            self.stall_iters,
        )
        if all(f is None for f in fields):
            raise InvalidParams("at least one termination criterion must be set")
        if self.max_iters is not None and self.max_iters < 0:
            raise InvalidParams("max_iters must be >= 0")
        if self.stall_iters is not None and self.stall_iters < 1:
            raise InvalidParams("stall_iters must be >= 1")
        for t in (self.target_sensitivity, self.target_specificity, self.target_accuracy):
            if t is not None and not 0.0 <= t <= 1.0:
                raise InvalidParams("metric targets are fractions in [0, 1]")

    @property
    def has_targets(self):
        return any(
            t is not None
            for t in (self.target_sensitivity, self.target_specificity, self.target_accuracy)
        )

    def budget_exhausted(self, iters, started):
        if self.max_iters is not None and iters >= self.max_iters:
            return True
        if self.time_limit is not None and time.perf_counter() - started >= self.time_limit:
            return True
        return False

    def targets_met(self, sens, spec, acc):
        """True when every configured target is met; undefined metrics never meet."""
        pairs = (
            (self.target_sensitivity, sens),
            (self.target_specificity, spec),
            (self.target_accuracy, acc),
        )
        active = [(t, v) for t, v in pairs if t is not None]
        if not active:
            return False
        return all(v is not None and v >= t for t, v in active)


def iterations(n):
    return TerminationCriteria(max_iters=n)
