"""Alerting engine: fan-out to pluggable sinks with webhook retry and a dead-letter log.

Severity mapping: thresholds below 90% are info, 90% is warning, 100% and
above (and every applied enforcement action) are critical. The dashboard
store sink is always on; it backs the notification feed the UI polls.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

from .clock import Clock, parse_rfc3339, rfc3339
from .model import Money
from .storage import AppendLog

logger = logging.getLogger(__name__)

WEBHOOK_RETRIES = 3
BACKOFF_BASE_SECONDS = 1.0
BACKOFF_FACTOR = 4.0

# Webhook POST body: exactly these fields, in this order, one per line,
# "-" for absent values, terminated by a newline. See docs/samples/webhook_body.txt.
WEBHOOK_FIELDS = ("alert_id", "severity", "account_id", "budget_id", "threshold", "spend", "crb", "created_at")


class Severity(str, Enum):
    INFO = "info"
    WARNING = "warning"
    CRITICAL = "critical"


def severity_for_threshold(threshold: Decimal) -> Severity:
    if threshold >= 1:
        return Severity.CRITICAL
    if threshold >= Decimal("0.90"):
        return Severity.WARNING
    return Severity.INFO


@dataclass(frozen=True)
class Alert:
    alert_id: str
    severity: Severity
    body: str
    created_at: datetime
    account_id: str | None = None
    budget_id: str | None = None
    threshold: Decimal | None = None
    spend: Money | None = None
    crb: Money | None = None

    def webhook_body(self) -> str:
        values = {
            "alert_id": self.alert_id,
            "severity": self.severity.value,
            "account_id": self.account_id or "-",
            "budget_id": self.budget_id or "-",
            "threshold": str(self.threshold) if self.threshold is not None else "-",
            "spend": self.spend.dollars() if self.spend is not None else "-",
            "crb": self.crb.dollars() if self.crb is not None else "-",
            "created_at": rfc3339(self.created_at),
        }
        return "".join(f"{name}={values[name]}\n" for name in WEBHOOK_FIELDS)

    def to_json(self) -> str:
        return json.dumps(
            {
                "alert_id": self.alert_id,
                "severity": self.severity.value,
                "body": self.body,
                "created_at": rfc3339(self.created_at),
                "account_id": self.account_id,
                "budget_id": self.budget_id,
                "threshold": str(self.threshold) if self.threshold is not None else None,
                "spend": self.spend.dollars() if self.spend is not None else None,
                "crb": self.crb.dollars() if self.crb is not None else None,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, raw: str) -> Alert:
        data = json.loads(raw)
        return cls(
            alert_id=data["alert_id"],
            severity=Severity(data["severity"]),
            body=data["body"],
            created_at=parse_rfc3339(data["created_at"]),
            account_id=data.get("account_id"),
            budget_id=data.get("budget_id"),
            threshold=Decimal(data["threshold"]) if data.get("threshold") else None,
            spend=Money.from_dollars(data["spend"]) if data.get("spend") else None,
            crb=Money.from_dollars(data["crb"]) if data.get("crb") else None,
        )


@dataclass(frozen=True)
class SinkResult:
    sink_id: str
    ok: bool
    attempts: int
    error: str | None = None


@dataclass(frozen=True)
class DeliveryReport:
    alert_id: str
    results: tuple[SinkResult, ...]

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.results)


class SinkKind(str, Enum):
    CONSOLE = "console"
    FILE = "file"
    WEBHOOK = "webhook"
    DASHBOARD_STORE = "dashboard_store"


@dataclass(frozen=True)
class SinkRegistration:
    sink_id: str
    kind: SinkKind
    destination: str = ""
    enabled: bool = True


class AlertEngine:
    """Creates alerts, appends them to the dashboard store, and fans out to sinks.

    Delivery is serialized in alert creation order, so every sink sees the
    same FIFO stream. A failing sink never affects delivery to the others;
    exhausted webhook retries land in the dead-letter log.
    """

    def __init__(
        self,
        store_path: Path,
        dead_letter_path: Path,
        clock: Clock,
        sinks: Sequence[SinkRegistration] = (),
        sleeper: Callable[[float], None] = time.sleep,
        http_post: Callable[[str, bytes], None] | None = None,
    ) -> None:
        self._clock = clock
        self._sleeper = sleeper
        self._http_post = http_post or _urllib_post
        self._lock = threading.Lock()
        self._store = AppendLog(store_path)
        self._dead_letter = AppendLog(dead_letter_path)
        self._alerts: list[Alert] = [Alert.from_json(line) for line in self._store.lines()]
        seen = {s.sink_id for s in sinks}
        if len(seen) != len(sinks):
            raise ValueError("sink ids must be unique")
        self._sinks = tuple(sinks)

    # --- creation ----------------------------------------------------------

    def emit(
        self,
        severity: Severity,
        body: str,
        account_id: str | None = None,
        budget_id: str | None = None,
        threshold: Decimal | None = None,
        spend: Money | None = None,
        crb: Money | None = None,
    ) -> DeliveryReport:
        with self._lock:
            alert = Alert(
                alert_id=f"alert-{len(self._alerts) + 1:06d}",
                severity=severity,
                body=body,
                created_at=self._clock.now(),
                account_id=account_id,
                budget_id=budget_id,
                threshold=threshold,
                spend=spend,
                crb=crb,
            )
            # the dashboard store append is the durable record of the alert
            self._store.append(alert.to_json())
            self._alerts.append(alert)
            results = [SinkResult("dashboard_store", ok=True, attempts=1)]
            for sink in self._sinks:
                if not sink.enabled or sink.kind is SinkKind.DASHBOARD_STORE:
                    continue
                results.append(self._deliver(sink, alert))
            return DeliveryReport(alert_id=alert.alert_id, results=tuple(results))

    # --- delivery ----------------------------------------------------------

    def _deliver(self, sink: SinkRegistration, alert: Alert) -> SinkResult:
        try:
            if sink.kind is SinkKind.CONSOLE:
                print(f"[{alert.severity.value}] {alert.alert_id} {alert.body}")
                return SinkResult(sink.sink_id, ok=True, attempts=1)
            if sink.kind is SinkKind.FILE:
                with open(sink.destination, "a", encoding="utf-8") as fh:
                    fh.write(f"{rfc3339(alert.created_at)} [{alert.severity.value}] {alert.body}\n")
                return SinkResult(sink.sink_id, ok=True, attempts=1)
            if sink.kind is SinkKind.WEBHOOK:
                return self._deliver_webhook(sink, alert)
            raise ValueError(f"unsupported sink kind: {sink.kind}")
        except Exception as exc:  # sink isolation: failures are reported, never raised
            self._record_failure(sink, alert, attempts=1, error=str(exc))
            return SinkResult(sink.sink_id, ok=False, attempts=1, error=str(exc))

    def _deliver_webhook(self, sink: SinkRegistration, alert: Alert) -> SinkResult:
        body = alert.webhook_body().encode("utf-8")
        attempts = 0
        delay = BACKOFF_BASE_SECONDS
        last_error = ""
        for attempt in range(1 + WEBHOOK_RETRIES):
            attempts = attempt + 1
            try:
                self._http_post(sink.destination, body)
                return SinkResult(sink.sink_id, ok=True, attempts=attempts)
            except Exception as exc:
                last_error = str(exc)
                if attempt < WEBHOOK_RETRIES:
                    self._sleeper(delay)
                    delay *= BACKOFF_FACTOR
        self._record_failure(sink, alert, attempts=attempts, error=last_error)
        return SinkResult(sink.sink_id, ok=False, attempts=attempts, error=last_error)

    def _record_failure(self, sink: SinkRegistration, alert: Alert, attempts: int, error: str) -> None:
        entry = {
            "alert_id": alert.alert_id,
            "sink_id": sink.sink_id,
            "attempts": attempts,
            "error": error,
            "failed_at": rfc3339(self._clock.now()),
        }
        self._dead_letter.append(json.dumps(entry, sort_keys=True))
        logger.warning("alert %s failed for sink %s: %s", alert.alert_id, sink.sink_id, error)

    # --- queries -----------------------------------------------------------

    def poll(self, cursor: int = 0) -> tuple[list[Alert], int]:
        """Alerts after the cursor in creation order, plus the new cursor."""
        if cursor < 0:
            raise ValueError("cursor must be >= 0")
        with self._lock:
            tail = self._alerts[cursor:]
            return list(tail), cursor + len(tail)

    def all_alerts(self) -> list[Alert]:
        with self._lock:
            return list(self._alerts)

    def dead_letter_entries(self) -> list[dict]:
        return [json.loads(line) for line in self._dead_letter.lines()]

    def close(self) -> None:
        self._store.close()
        self._dead_letter.close()


def _urllib_post(url: str, body: bytes) -> None:
    request = urllib.request.Request(
        url,
        data=body,
        headers={"Content-Type": "text/plain; charset=utf-8"},
        method="POST",
    )
    with urllib.request.urlopen(request, timeout=10) as response:
        if response.status >= 400:
            raise urllib.error.HTTPError(url, response.status, "webhook rejected", response.headers, None)
