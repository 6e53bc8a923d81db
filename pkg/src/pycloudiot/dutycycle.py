"""Sleep/awake schedules for duty-cycled nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class DutyCycleSchedule:
    """Periodic wake regime: awake for `awake_fraction * period_s` out of every
    `period_s`, with the first window starting at `phase_s`."""

    period_s: float
    awake_fraction: float
    phase_s: float = 0.0

    def __post_init__(self):
        if self.period_s <= 0:
            raise ValueError("period_s must be > 0")
        if not (0.0 < self.awake_fraction <= 1.0):
            raise ValueError("awake_fraction must be in (0, 1]")

    @property
    def window_s(self) -> float:
        return self.awake_fraction * self.period_s


def awake_windows(schedule: DutyCycleSchedule, horizon_s: float) -> list[tuple[float, float]]:
    """Awake intervals [start, end) clipped to [0, horizon_s)."""
    if horizon_s < 0:
        raise ValueError("horizon_s must be >= 0")
    if schedule.awake_fraction >= 1.0:
        return [(0.0, horizon_s)] if horizon_s > 0 else []
    p, w = schedule.period_s, schedule.window_s
    # first cycle index whose window can intersect [0, horizon)
    k = math.floor((-schedule.phase_s) / p) - 1
    out: list[tuple[float, float]] = []
    prev_end = 0.0
    while True:
        start = schedule.phase_s + k * p
        if start >= horizon_s:
            break
        end = start + w
        # successive computed starts can undershoot the previous end by an ulp
        # when awake_fraction is ~1; keep the intervals disjoint
        lo, hi = max(start, prev_end), min(end, horizon_s)
        if lo < hi:
            out.append((lo, hi))
            prev_end = hi
        k += 1
    return out


def _cycle_index(schedule: DutyCycleSchedule, t: float) -> int:
    """Cycle containing t, snapping to the next cycle when t sits within float
    noise below its start (computed multiples of the period round both ways)."""
    x = (t - schedule.phase_s) / schedule.period_s
    k = math.floor(x)
    if (k + 1) - x < 1e-9:
        k += 1
    return k


def is_awake(schedule: DutyCycleSchedule, t: float) -> bool:
    if schedule.awake_fraction >= 1.0:
        return True
    k = _cycle_index(schedule, t)
    offset = t - (schedule.phase_s + k * schedule.period_s)
    return offset < schedule.window_s


def window_bounds(schedule: DutyCycleSchedule, t: float) -> tuple[float, float]:
    """Bounds [start, end) of the window containing awake time t."""
    if not is_awake(schedule, t):
        raise ValueError(f"t={t} is outside every awake window")
    if schedule.awake_fraction >= 1.0:
        return (-math.inf, math.inf)
    k = _cycle_index(schedule, t)
    start = schedule.phase_s + k * schedule.period_s
    return (start, start + schedule.window_s)


def next_window_start(schedule: DutyCycleSchedule, t: float) -> float:
    """Start of the first awake window strictly after time t."""
    if schedule.awake_fraction >= 1.0:
        return t
    k = math.floor((t - schedule.phase_s) / schedule.period_s) + 1
    start = schedule.phase_s + k * schedule.period_s
    while start <= t:  # guard against float rounding at the boundary
        k += 1
        start = schedule.phase_s + k * schedule.period_s
    return start


def active_seconds(schedule: DutyCycleSchedule, horizon_s: float) -> float:
    """Total awake time within [0, horizon_s)."""
    return sum(hi - lo for lo, hi in awake_windows(schedule, horizon_s))
