"""Clock abstraction so the whole pipeline can run on simulated time.

Every timestamp that ends up in a store comes from a Clock, which makes
simulated runs fully deterministic and replayable.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone


def utc(year: int, month: int, day: int, hour: int = 0, minute: int = 0, second: int = 0) -> datetime:
    return datetime(year, month, day, hour, minute, second, tzinfo=timezone.utc)


def rfc3339(ts: datetime) -> str:
    """Render a UTC timestamp as RFC 3339 with a trailing Z (second precision)."""
    if ts.tzinfo is None:
        raise ValueError("timestamp must be timezone-aware")
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_rfc3339(text: str) -> datetime:
    """Parse RFC 3339 text into an aware UTC datetime."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp lacks a timezone offset: {text!r}")
    return ts.astimezone(timezone.utc)


class Clock:
    """Wall-clock time source."""

    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class SimClock(Clock):
    """Manually driven clock for deterministic runs and tests."""

    def __init__(self, start: datetime) -> None:
        if start.tzinfo is None:
            raise ValueError("SimClock start must be timezone-aware")
        self._now = start.astimezone(timezone.utc)

    def now(self) -> datetime:
        return self._now

    def set(self, ts: datetime) -> None:
        if ts.tzinfo is None:
            raise ValueError("SimClock timestamps must be timezone-aware")
        self._now = ts.astimezone(timezone.utc)

    def advance(self, delta: timedelta) -> None:
        self._now = self._now + delta

    def advance_days(self, days: float) -> None:
        self.advance(timedelta(days=days))
