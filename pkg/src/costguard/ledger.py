"""Billing ledger: ingestion, cost-center attribution and spend aggregation.

Every accepted record is appended to a durable billing log before the
in-memory aggregates are updated; a restart replays the log and reconstructs
identical aggregates. Ingestion is idempotent under record-id replay and
aggregates are order-independent, so crashed runs can simply be re-run.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .feed import FeedError, ParsedLine, parse_feed_lines, record_to_line
from .model import BillingRecord, BudgetPeriod, Money, money_sum, validate_labels
from .storage import AppendLog

UNATTRIBUTED = "unattributed"


@dataclass(frozen=True)
class CostCenter:
    cost_center_id: str
    display_name: str


@dataclass(frozen=True)
class AttributionRule:
    """Routes records carrying a specific label to a cost center.

    Rules take precedence over the account-to-cost-center mapping: they exist
    to re-route spend (e.g. environment=dev to the R&D cost center) that would
    otherwise follow the account default.
    """

    label_key: str
    label_value: str
    cost_center_id: str


@dataclass(frozen=True)
class IngestReport:
    accepted: int = 0
    unattributed: int = 0
    duplicates: int = 0
    rejected: int = 0

    def merged(self, other: IngestReport) -> IngestReport:
        return IngestReport(
            accepted=self.accepted + other.accepted,
            unattributed=self.unattributed + other.unattributed,
            duplicates=self.duplicates + other.duplicates,
            rejected=self.rejected + other.rejected,
        )


@dataclass(frozen=True)
class SpendAggregate:
    """Spend for one (account, period): total = sum(by_service) + unattributed."""

    account_id: str
    period: BudgetPeriod
    total: Money
    by_service: Mapping[str, Money]
    unattributed: Money


class _DayBucket:
    __slots__ = ("services", "unattributed_cents")

    def __init__(self) -> None:
        self.services: dict[str, int] = {}
        self.unattributed_cents = 0

    @property
    def total_cents(self) -> int:
        return sum(self.services.values()) + self.unattributed_cents


def attribute(
    record: BillingRecord,
    account_to_center: Mapping[str, str],
    rules: Iterable[AttributionRule] = (),
) -> str | None:
    """Resolve the cost center for a record; None means unattributable.

    Label override rules are consulted first (first match wins), then the
    account mapping.
    """
    for rule in rules:
        if record.labels.get(rule.label_key) == rule.label_value:
            return rule.cost_center_id
    return account_to_center.get(record.account_id)


class BillingLedger:
    """Aggregates billing records by account, service, day and cost center."""

    def __init__(
        self,
        log_path: Path,
        account_to_center: Mapping[str, str] | None = None,
        rules: Iterable[AttributionRule] = (),
        known_account: Callable[[str], bool] | None = None,
        on_record: Callable[[BillingRecord], None] | None = None,
    ) -> None:
        self._account_to_center = dict(account_to_center or {})
        self._rules = tuple(rules)
        self._known_account = known_account
        self._on_record = on_record
        self._lock = threading.RLock()
        self._seen_ids: set[str] = set()
        self._daily: dict[tuple[str, date], _DayBucket] = {}
        self._center_daily: dict[tuple[str, date], dict[str, int]] = {}
        self._log = AppendLog(log_path)
        for line in self._log.lines():
            for parsed in parse_feed_lines([line]):
                if isinstance(parsed, BillingRecord):
                    self._apply(parsed)

    # --- ingestion ---------------------------------------------------------

    def ingest(self, items: Iterable[ParsedLine], fsync: bool = True) -> IngestReport:
        """Ingest a stream of parsed feed lines; malformed entries are counted, not fatal."""
        accepted = unattributed = duplicates = rejected = 0
        for item in items:
            if isinstance(item, FeedError):
                rejected += 1
                continue
            status = self.ingest_one(item, fsync=False)
            if status == "duplicate":
                duplicates += 1
                continue
            accepted += 1
            if status == "accepted_unattributed":
                unattributed += 1
        if fsync:
            self._log.sync()
        return IngestReport(accepted, unattributed, duplicates, rejected)

    def ingest_one(self, record: BillingRecord, fsync: bool = True) -> str:
        """Ingest a single record. Returns accepted, accepted_unattributed or duplicate."""
        with self._lock:
            if record.record_id in self._seen_ids:
                return "duplicate"
            self._log.append(record_to_line(record), fsync=fsync)
            return self._apply(record)

    def _apply(self, record: BillingRecord) -> str:
        self._seen_ids.add(record.record_id)
        day = record.usage_start.date()
        bucket = self._daily.setdefault((record.account_id, day), _DayBucket())
        labels_ok = validate_labels(record.labels).valid
        if labels_ok:
            cents = bucket.services.get(record.service_name, 0)
            bucket.services[record.service_name] = cents + record.cost.amount_minor
        else:
            bucket.unattributed_cents += record.cost.amount_minor
        center = attribute(record, self._account_to_center, self._rules) or UNATTRIBUTED
        by_account = self._center_daily.setdefault((center, day), {})
        by_account[record.account_id] = by_account.get(record.account_id, 0) + record.cost.amount_minor
        if self._on_record is not None:
            self._on_record(record)
        return "accepted" if labels_ok else "accepted_unattributed"

    # --- queries -----------------------------------------------------------

    def aggregate(
        self, account_id: str, period: BudgetPeriod, as_of: datetime | None = None
    ) -> SpendAggregate:
        """Spend for (account, period); as_of excludes records dated after that day."""
        cutoff = as_of.date() if as_of is not None else None
        with self._lock:
            services: dict[str, int] = {}
            unattributed_cents = 0
            for (acct, day), bucket in self._daily.items():
                if acct != account_id or not _day_in_period(day, period):
                    continue
                if cutoff is not None and day > cutoff:
                    continue
                for service, cents in bucket.services.items():
                    services[service] = services.get(service, 0) + cents
                unattributed_cents += bucket.unattributed_cents
            by_service = {name: Money(cents) for name, cents in sorted(services.items())}
            total = Money(sum(services.values()) + unattributed_cents)
            return SpendAggregate(
                account_id=account_id,
                period=period,
                total=total,
                by_service=by_service,
                unattributed=Money(unattributed_cents),
            )

    def cumulative_spend(
        self, account_id: str, period: BudgetPeriod, as_of: datetime | None = None
    ) -> Money:
        """Exact sum of record costs with usage_start inside the period."""
        if self._known_account is not None and not self._known_account(account_id):
            raise KeyError(f"unknown account: {account_id}")
        return self.aggregate(account_id, period, as_of=as_of).total

    def center_spend(
        self, cost_center_id: str, period: BudgetPeriod, as_of: datetime | None = None
    ) -> Money:
        cutoff = as_of.date() if as_of is not None else None
        with self._lock:
            cents = 0
            for (center, day), by_account in self._center_daily.items():
                if center == cost_center_id and _day_in_period(day, period):
                    if cutoff is not None and day > cutoff:
                        continue
                    cents += sum(by_account.values())
            return Money(cents)

    def chargeback(self, period: BudgetPeriod) -> list[dict]:
        """Per-cost-center rows for the period; unattributed spend gets a reserved row."""
        with self._lock:
            rows: dict[str, dict[str, int]] = {}
            for (center, day), by_account in self._center_daily.items():
                if not _day_in_period(day, period):
                    continue
                row = rows.setdefault(center, {})
                for account, cents in by_account.items():
                    row[account] = row.get(account, 0) + cents
        result = []
        for center in sorted(rows):
            by_account = {acct: Money(cents) for acct, cents in sorted(rows[center].items())}
            result.append(
                {
                    "cost_center_id": center,
                    "period": period,
                    "total": money_sum(by_account.values()),
                    "by_account": by_account,
                }
            )
        return result

    def accounts_seen(self) -> set[str]:
        with self._lock:
            return {acct for (acct, _day) in self._daily}

    def service_daily_spend(self, account_id: str, service_name: str, period: BudgetPeriod) -> dict[date, Money]:
        """Per-day spend for one service, for anomaly history."""
        with self._lock:
            out: dict[date, Money] = {}
            for (acct, day), bucket in self._daily.items():
                if acct == account_id and _day_in_period(day, period) and service_name in bucket.services:
                    out[day] = Money(bucket.services[service_name])
            return dict(sorted(out.items()))

    def daily_totals(self, account_id: str, period: BudgetPeriod) -> dict[date, Money]:
        with self._lock:
            out = {}
            for (acct, day), bucket in self._daily.items():
                if acct == account_id and _day_in_period(day, period):
                    out[day] = Money(bucket.total_cents)
            return dict(sorted(out.items()))

    def close(self) -> None:
        self._log.close()


def _day_in_period(day: date, period: BudgetPeriod) -> bool:
    return period.start.date() <= day < period.end.date()
