"""Wake-window arithmetic."""

import pytest
from hypothesis import given, strategies as st

from pycloudiot.dutycycle import (DutyCycleSchedule, active_seconds,
                                  awake_windows, is_awake, next_window_start,
                                  window_bounds)


def test_ten_percent_windows():
    s = DutyCycleSchedule(period_s=100.0, awake_fraction=0.10)
    assert awake_windows(s, 200.0) == [(0.0, 10.0), (100.0, 110.0)]


def test_always_awake():
    s = DutyCycleSchedule(period_s=100.0, awake_fraction=1.0)
    assert awake_windows(s, 250.0) == [(0.0, 250.0)]


def test_one_percent_windows():
    s = DutyCycleSchedule(period_s=100.0, awake_fraction=0.01)
    assert awake_windows(s, 150.0) == [(0.0, 1.0), (100.0, 101.0)]


def test_phase_offset_and_clipping():
    s = DutyCycleSchedule(period_s=10.0, awake_fraction=0.5, phase_s=9.0)
    # the window that began before t=0 pokes into the horizon
    assert awake_windows(s, 20.0) == [(0.0, 4.0), (9.0, 14.0), (19.0, 20.0)]


def test_invalid_schedule():
    with pytest.raises(ValueError):
        DutyCycleSchedule(period_s=0.0, awake_fraction=0.5)
    with pytest.raises(ValueError):
        DutyCycleSchedule(period_s=10.0, awake_fraction=0.0)


@given(period=st.floats(0.5, 1000), awake=st.floats(0.01, 1.0),
       phase=st.floats(0, 1000), horizon=st.floats(0, 5000))
def test_windows_are_sorted_disjoint_and_within_horizon(period, awake, phase, horizon):
    s = DutyCycleSchedule(period_s=period, awake_fraction=awake, phase_s=phase)
    windows = awake_windows(s, horizon)
    for lo, hi in windows:
        assert 0.0 <= lo < hi <= horizon
    for (_, prev_hi), (lo, _) in zip(windows, windows[1:]):
        assert prev_hi <= lo


@given(period=st.floats(0.5, 1000), awake=st.floats(0.01, 0.99),
       t=st.floats(0, 5000))
def test_next_window_start_is_awake_edge(period, awake, t):
    s = DutyCycleSchedule(period_s=period, awake_fraction=awake)
    start = next_window_start(s, t)
    assert start > t
    assert is_awake(s, start)
    lo, _ = window_bounds(s, start)
    assert lo == pytest.approx(start)


def test_active_seconds_tracks_fraction():
    s = DutyCycleSchedule(period_s=50.0, awake_fraction=0.2)
    horizon = 1000.0
    total = active_seconds(s, horizon)
    assert abs(total - 0.2 * horizon) <= s.window_s
