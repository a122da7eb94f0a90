"""Shared domain types: exact money arithmetic, resource labels, accounts and periods.

All value types here are immutable and safe to share across threads.
Money is stored as an integer count of cents; anything that needs
fractional math goes through exact rational arithmetic and is rounded
half-up (away from zero on ties) only when a final cent amount is produced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Union

# Cent totals are kept inside the signed 64-bit range so they stay portable
# across store formats. Python ints never wrap, so the bound is enforced.
MONEY_MAX_MINOR = 2**63 - 1
MONEY_MIN_MINOR = -(2**63)

DecimalLike = Union[Decimal, int, str]


class MoneyOverflowError(ArithmeticError):
    """Result left the supported cent range."""


def to_decimal(value: DecimalLike, what: str = "value") -> Decimal:
    """Convert to Decimal, rejecting floats (binary floats are not exact decimals)."""
    if isinstance(value, float):
        raise TypeError(f"{what} must be Decimal, int or str, not float (inexact)")
    if isinstance(value, Decimal):
        return value
    try:
        return Decimal(value)
    except InvalidOperation as exc:
        raise ValueError(f"{what} is not a valid decimal: {value!r}") from exc


def round_half_up(value: Fraction) -> int:
    """Round a rational to the nearest integer, ties away from zero."""
    n, d = value.numerator, value.denominator
    if n >= 0:
        return (2 * n + d) // (2 * d)
    return -((-2 * n + d) // (2 * d))


@dataclass(frozen=True, order=True)
class Money:
    """An exact USD amount in cents. Negative amounts represent credits."""

    amount_minor: int

    def __post_init__(self) -> None:
        if not isinstance(self.amount_minor, int) or isinstance(self.amount_minor, bool):
            raise TypeError("amount_minor must be int")
        _check_range(self.amount_minor)

    @classmethod
    def zero(cls) -> Money:
        return cls(0)

    @classmethod
    def from_dollars(cls, value: DecimalLike) -> Money:
        """Parse a dollar amount with at most two fraction digits."""
        dec = to_decimal(value, "dollar amount")
        cents = dec.scaleb(2)
        if cents != cents.to_integral_value():
            raise ValueError(f"dollar amount has sub-cent precision: {value!r}")
        return cls(int(cents))

    def __add__(self, other: Money) -> Money:
        if not isinstance(other, Money):
            return NotImplemented
        return Money(_check_range(self.amount_minor + other.amount_minor))

    def __sub__(self, other: Money) -> Money:
        if not isinstance(other, Money):
            return NotImplemented
        return Money(_check_range(self.amount_minor - other.amount_minor))

    def __neg__(self) -> Money:
        return Money(_check_range(-self.amount_minor))

    def scale(self, factor: DecimalLike) -> Money:
        """Multiply by an exact decimal factor (<= 6 fraction digits), rounding half-up.

        The intermediate product is exact rational arithmetic; only the final
        result is rounded to a cent.
        """
        dec = to_decimal(factor, "scale factor")
        if -dec.normalize().as_tuple().exponent > 6:
            raise ValueError(f"scale factor has more than 6 fraction digits: {factor!r}")
        product = Fraction(self.amount_minor) * Fraction(dec)
        return Money(_check_range(round_half_up(product)))

    def as_fraction_dollars(self) -> Fraction:
        return Fraction(self.amount_minor, 100)

    def dollars(self) -> str:
        """Plain decimal-dollar string with exactly two fraction digits."""
        sign = "-" if self.amount_minor < 0 else ""
        whole, cents = divmod(abs(self.amount_minor), 100)
        return f"{sign}{whole}.{cents:02d}"

    def pretty(self) -> str:
        """Human display form with thousands separators, e.g. $113,400.00."""
        sign = "-" if self.amount_minor < 0 else ""
        whole, cents = divmod(abs(self.amount_minor), 100)
        return f"{sign}${whole:,}.{cents:02d}"

    def __str__(self) -> str:
        return self.dollars()


def _check_range(minor: int) -> int:
    if minor > MONEY_MAX_MINOR or minor < MONEY_MIN_MINOR:
        raise MoneyOverflowError(f"amount {minor} cents exceeds the supported range")
    return minor


def money(value: DecimalLike) -> Money:
    """Shorthand constructor from a dollar string, e.g. money("113400.00")."""
    return Money.from_dollars(value)


def money_add(a: Money, b: Money) -> Money:
    return a + b


def money_scale(a: Money, factor: DecimalLike) -> Money:
    return a.scale(factor)


def money_sum(values: Iterable[Money]) -> Money:
    total = 0
    for v in values:
        total = _check_range(total + v.amount_minor)
    return Money(total)


# --- Resource labels ---------------------------------------------------------

REQUIRED_LABEL_KEYS = ("purpose", "owner", "environment")
_LABEL_TOKEN_RE = re.compile(r"^[a-z0-9_-]{1,63}$")


@dataclass(frozen=True)
class LabelSet:
    """Key-value resource labels. Validity is checked by validate_labels, not here."""

    entries: Mapping[str, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", dict(self.entries))

    def get(self, key: str) -> str | None:
        return self.entries.get(key)

    def items(self):
        return self.entries.items()


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    violations: tuple[str, ...] = ()


def validate_labels(labels: LabelSet | Mapping[str, str]) -> ValidationResult:
    """Check label syntax and required keys; reports every violation, not just the first.

    Keys and values must be non-empty lowercase alphanumerics plus ``-``/``_``,
    at most 63 characters. ``purpose``, ``owner`` and ``environment`` are required.
    """
    entries = labels.entries if isinstance(labels, LabelSet) else dict(labels)
    violations: list[str] = []
    for key, value in entries.items():
        if not _LABEL_TOKEN_RE.match(key):
            violations.append(f"invalid label key: {key!r}")
        if not _LABEL_TOKEN_RE.match(value):
            violations.append(f"invalid value for {key!r}: {value!r}")
    for required in REQUIRED_LABEL_KEYS:
        if required not in entries:
            violations.append(f"missing required label: {required}")
    return ValidationResult(valid=not violations, violations=tuple(violations))


# --- Accounts ----------------------------------------------------------------

class Provider(str, Enum):
    SIMULATED = "simulated"
    GCP = "gcp"
    AWS = "aws"
    AZURE = "azure"


class AccountStatus(str, Enum):
    ACTIVE = "Active"
    WARNED = "Warned"
    RESTRICTED = "Restricted"
    SUSPENDED = "Suspended"

    @property
    def severity(self) -> int:
        return _STATUS_SEVERITY[self]


_STATUS_SEVERITY = {
    AccountStatus.ACTIVE: 0,
    AccountStatus.WARNED: 1,
    AccountStatus.RESTRICTED: 2,
    AccountStatus.SUSPENDED: 3,
}


@dataclass(frozen=True)
class AccountState:
    value: AccountStatus
    changed_at: datetime


@dataclass(frozen=True)
class Account:
    account_id: str
    display_name: str
    cost_center_id: str | None
    provider: Provider
    state: AccountState


# --- Billing records ---------------------------------------------------------

_ID_RE = re.compile(r"^[A-Za-z0-9._:-]{1,128}$")


@dataclass(frozen=True)
class BillingRecord:
    """One metered cost line from a provider feed."""

    record_id: str
    account_id: str
    service_name: str
    resource_id: str
    labels: LabelSet
    usage_start: datetime
    usage_end: datetime
    cost: Money

    def __post_init__(self) -> None:
        for name in ("record_id", "account_id", "service_name", "resource_id"):
            value = getattr(self, name)
            if not _ID_RE.match(value):
                raise ValueError(f"invalid {name}: {value!r}")
        if self.usage_start.tzinfo is None or self.usage_end.tzinfo is None:
            raise ValueError("usage timestamps must be timezone-aware")
        if self.usage_start > self.usage_end:
            raise ValueError("usage_start must not be after usage_end")


# --- Budget periods ----------------------------------------------------------

class Granularity(str, Enum):
    MONTHLY = "monthly"
    QUARTERLY = "quarterly"


_MONTH_LABEL_RE = re.compile(r"^(\d{4})-(\d{2})$")
_QUARTER_LABEL_RE = re.compile(r"^(\d{4})-Q([1-4])$")


@dataclass(frozen=True)
class BudgetPeriod:
    """A half-open [start, end) calendar month or quarter, midnight-UTC aligned."""

    start: datetime
    end: datetime
    granularity: Granularity

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError("period start must precede end")
        for ts in (self.start, self.end):
            if ts.tzinfo is None:
                raise ValueError("period bounds must be timezone-aware")
            if (ts.day, ts.hour, ts.minute, ts.second, ts.microsecond) != (1, 0, 0, 0, 0):
                raise ValueError("period bounds must be midnight UTC on the first of a month")
        months = (self.end.year - self.start.year) * 12 + self.end.month - self.start.month
        expected = 1 if self.granularity is Granularity.MONTHLY else 3
        if months != expected:
            raise ValueError(f"{self.granularity.value} period must span {expected} month(s)")
        if self.granularity is Granularity.QUARTERLY and (self.start.month - 1) % 3 != 0:
            raise ValueError("quarterly period must start on a quarter boundary")

    @classmethod
    def month(cls, year: int, month: int) -> BudgetPeriod:
        start = datetime(year, month, 1, tzinfo=timezone.utc)
        if month == 12:
            end = datetime(year + 1, 1, 1, tzinfo=timezone.utc)
        else:
            end = datetime(year, month + 1, 1, tzinfo=timezone.utc)
        return cls(start, end, Granularity.MONTHLY)

    @classmethod
    def quarter(cls, year: int, quarter: int) -> BudgetPeriod:
        if quarter not in (1, 2, 3, 4):
            raise ValueError(f"quarter must be 1-4, got {quarter}")
        start_month = (quarter - 1) * 3 + 1
        start = datetime(year, start_month, 1, tzinfo=timezone.utc)
        if quarter == 4:
            end = datetime(year + 1, 1, 1, tzinfo=timezone.utc)
        else:
            end = datetime(year, start_month + 3, 1, tzinfo=timezone.utc)
        return cls(start, end, Granularity.QUARTERLY)

    @classmethod
    def parse_label(cls, label: str) -> BudgetPeriod:
        """Parse "2025-01" (monthly) or "2025-Q1" (quarterly)."""
        m = _MONTH_LABEL_RE.match(label)
        if m:
            return cls.month(int(m.group(1)), int(m.group(2)))
        q = _QUARTER_LABEL_RE.match(label)
        if q:
            return cls.quarter(int(q.group(1)), int(q.group(2)))
        raise ValueError(f"unrecognized period label: {label!r}")

    @property
    def label(self) -> str:
        if self.granularity is Granularity.MONTHLY:
            return f"{self.start.year:04d}-{self.start.month:02d}"
        return f"{self.start.year:04d}-Q{(self.start.month - 1) // 3 + 1}"

    def contains(self, ts: datetime) -> bool:
        return self.start <= ts < self.end

    @property
    def total_days(self) -> int:
        return (self.end - self.start).days

    def elapsed_days(self, now: datetime) -> Fraction:
        """Days elapsed since period start, clamped to [0, total_days]."""
        if now <= self.start:
            return Fraction(0)
        if now >= self.end:
            return Fraction(self.total_days)
        return Fraction((now - self.start).total_seconds()) / Fraction(86400)

    def next_period(self) -> BudgetPeriod:
        if self.granularity is Granularity.MONTHLY:
            return BudgetPeriod.month(self.end.year, self.end.month)
        return BudgetPeriod.quarter(self.end.year, (self.end.month - 1) // 3 + 1)
