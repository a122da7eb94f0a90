"""Billing feed wire format and the deterministic synthetic feed generator.

Feed files are CSV, one record per line, columns:

    record_id, account_id, service_name, resource_id, labels,
    usage_start, usage_end, cost

``labels`` is ``key=value`` pairs joined with ``;``. Timestamps are RFC 3339
UTC, ``cost`` is signed decimal dollars with at most two fraction digits.
A golden sample lives in docs/samples/billing_feed.csv.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Iterator, Union

from .clock import parse_rfc3339, rfc3339
from .model import BillingRecord, LabelSet, Money, money_sum

FEED_COLUMNS = (
    "record_id",
    "account_id",
    "service_name",
    "resource_id",
    "labels",
    "usage_start",
    "usage_end",
    "cost",
)

_LABEL_WIRE_BANNED = re.compile(r"[;=\n\r]")


@dataclass(frozen=True)
class FeedError:
    """A line that could not be parsed into a billing record."""

    line_number: int
    message: str


ParsedLine = Union[BillingRecord, FeedError]


def encode_labels(labels: LabelSet) -> str:
    parts = []
    for key, value in labels.items():
        if _LABEL_WIRE_BANNED.search(key) or _LABEL_WIRE_BANNED.search(value):
            raise ValueError(f"label not representable on the wire: {key!r}={value!r}")
        parts.append(f"{key}={value}")
    return ";".join(parts)


def decode_labels(cell: str) -> LabelSet:
    entries: dict[str, str] = {}
    if cell:
        for part in cell.split(";"):
            key, sep, value = part.partition("=")
            if not sep or not key:
                raise ValueError(f"malformed label pair: {part!r}")
            entries[key] = value
    return LabelSet(entries)


def record_to_row(record: BillingRecord) -> list[str]:
    return [
        record.record_id,
        record.account_id,
        record.service_name,
        record.resource_id,
        encode_labels(record.labels),
        rfc3339(record.usage_start),
        rfc3339(record.usage_end),
        record.cost.dollars(),
    ]


def record_to_line(record: BillingRecord) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="").writerow(record_to_row(record))
    return buf.getvalue()


def row_to_record(row: list[str]) -> BillingRecord:
    if len(row) != len(FEED_COLUMNS):
        raise ValueError(f"expected {len(FEED_COLUMNS)} columns, got {len(row)}")
    return BillingRecord(
        record_id=row[0],
        account_id=row[1],
        service_name=row[2],
        resource_id=row[3],
        labels=decode_labels(row[4]),
        usage_start=parse_rfc3339(row[5]),
        usage_end=parse_rfc3339(row[6]),
        cost=Money.from_dollars(row[7]),
    )


def parse_feed_lines(lines: Iterable[str]) -> Iterator[ParsedLine]:
    """Parse feed lines; bad lines become FeedError entries, the stream continues."""
    reader = csv.reader(lines)
    for number, row in enumerate(reader, start=1):
        if not row:
            continue
        try:
            yield row_to_record(row)
        except (ValueError, TypeError) as exc:
            yield FeedError(line_number=number, message=str(exc))


def read_feed(path: Path) -> Iterator[ParsedLine]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        yield from parse_feed_lines(fh)


def write_feed(records: Iterable[BillingRecord], path: Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for record in records:
            writer.writerow(record_to_row(record))
            count += 1
    return count


# --- Synthetic feed generation -------------------------------------------------

@dataclass(frozen=True)
class FeedAccount:
    account_id: str
    daily_mean: Money
    daily_spread: Money
    services: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.services:
            raise ValueError("feed account needs at least one service")
        if self.daily_mean < Money.zero() or self.daily_spread < Money.zero():
            raise ValueError("daily mean and spread must be >= 0")


@dataclass(frozen=True)
class FeedConfig:
    """Deterministic synthetic feed: the seed fully determines the output."""

    seed: int
    start: datetime
    duration_days: int
    records_per_day: int
    accounts: tuple[FeedAccount, ...]

    def __post_init__(self) -> None:
        if self.start.tzinfo is None:
            raise ValueError("feed start must be timezone-aware")
        if self.duration_days < 0 or self.records_per_day < 0:
            raise ValueError("duration and records per day must be >= 0")

    @classmethod
    def from_file(cls, path: Path) -> FeedConfig:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            seed=int(raw["seed"]),
            start=parse_rfc3339(raw["start"]),
            duration_days=int(raw["duration_days"]),
            records_per_day=int(raw["records_per_day"]),
            accounts=tuple(
                FeedAccount(
                    account_id=acc["account_id"],
                    daily_mean=Money.from_dollars(acc["daily_mean"]),
                    daily_spread=Money.from_dollars(acc.get("daily_spread", "0")),
                    services=tuple(acc["services"]),
                )
                for acc in raw["accounts"]
            ),
        )


def _day_rng(seed: int, account_id: str, day: int) -> random.Random:
    # hash-derived seed: stable across processes, unlike hash() of a str
    key = f"{seed}:{account_id}:{day}".encode()
    return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))


def _label_token(raw: str) -> str:
    token = re.sub(r"[^a-z0-9_-]", "-", raw.lower())
    return token[:63] or "unknown"


def generate_day(config: FeedConfig, account: FeedAccount, day: int) -> list[BillingRecord]:
    """Records for one account-day; depends only on (seed, account, day)."""
    if config.records_per_day == 0:
        return []
    rng = _day_rng(config.seed, account.account_id, day)
    day_start = config.start + timedelta(days=day)
    step = 86400 // config.records_per_day
    base = account.daily_mean.amount_minor // config.records_per_day
    spread = account.daily_spread.amount_minor // config.records_per_day
    records = []
    owner = _label_token(account.account_id)
    for i in range(config.records_per_day):
        service = account.services[i % len(account.services)]
        cents = max(0, base + (rng.randint(-spread, spread) if spread else 0))
        start = day_start + timedelta(seconds=i * step)
        end = min(start + timedelta(seconds=step), day_start + timedelta(days=1))
        records.append(
            BillingRecord(
                record_id=f"{account.account_id}-d{day:04d}-r{i:04d}",
                account_id=account.account_id,
                service_name=service,
                resource_id=f"{service}-{day:04d}-{i:04d}",
                labels=LabelSet(
                    {
                        "purpose": _label_token(service),
                        "owner": owner,
                        "environment": "prod",
                    }
                ),
                usage_start=start,
                usage_end=end,
                cost=Money(cents),
            )
        )
    return records


def generate_feed(config: FeedConfig) -> Iterator[BillingRecord]:
    """The full synthetic stream, in (day, account, record) order."""
    for day in range(config.duration_days):
        for account in config.accounts:
            yield from generate_day(config, account, day)


def feed_totals(records: Iterable[BillingRecord]) -> dict[str, Money]:
    """Total generated cost per account."""
    totals: dict[str, list[Money]] = {}
    for record in records:
        totals.setdefault(record.account_id, []).append(record.cost)
    return {account: money_sum(costs) for account, costs in sorted(totals.items())}
