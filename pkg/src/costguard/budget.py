"""Budget math: spend-series statistics and the cloud resource budget formula.

The budget for a target is the sum of its historical spend, grown by a
projected growth factor, reduced by a cost-control factor, padded by a
variability factor, and finally capped by the available budget:

    adjusted_spend = sum(historical) * (1 + growth) * (1 - cost_control) * (1 + variability)
    budget         = min(adjusted_spend, available_budget)

The variability factor can be given explicitly or computed from the same
historical series as its coefficient of variation (sample standard deviation
divided by the mean). All intermediate math is exact rational arithmetic;
only final money amounts are rounded (half-up) to cents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal, localcontext
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .model import (
    BudgetPeriod,
    DecimalLike,
    Money,
    money_sum,
    round_half_up,
    to_decimal,
)

# Plenty of headroom over the 1e-12 tolerances the statistics promise.
_STAT_PRECISION = 50

DEFAULT_THRESHOLDS = (
    Decimal("0.50"),
    Decimal("0.75"),
    Decimal("0.90"),
    Decimal("1.00"),
)


class StatisticsError(ValueError):
    pass


class VarianceUndefinedError(StatisticsError):
    """Sample variance needs at least two observations."""


class CovUndefinedError(StatisticsError):
    """Coefficient of variation needs a positive mean."""


@dataclass(frozen=True)
class SpendSeries:
    """Ordered per-period or per-service spend totals."""

    values: tuple[Money, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise StatisticsError("spend series must have at least one entry")
        object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def from_dollars(cls, values: Sequence[DecimalLike]) -> SpendSeries:
        return cls(tuple(Money.from_dollars(v) for v in values))

    @property
    def n(self) -> int:
        return len(self.values)

    def total(self) -> Money:
        return money_sum(self.values)

    def _fractions(self) -> list[Fraction]:
        return [v.as_fraction_dollars() for v in self.values]


def _fraction_to_decimal(value: Fraction) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = _STAT_PRECISION
        return Decimal(value.numerator) / Decimal(value.denominator)


def _mean_fraction(series: SpendSeries) -> Fraction:
    return sum(series._fractions(), Fraction(0)) / series.n


def _variance_fraction(series: SpendSeries) -> Fraction:
    if series.n < 2:
        raise VarianceUndefinedError("sample variance undefined for fewer than 2 values")
    mean = _mean_fraction(series)
    squared = sum(((x - mean) ** 2 for x in series._fractions()), Fraction(0))
    return squared / (series.n - 1)


def series_mean(series: SpendSeries) -> Decimal:
    """Arithmetic mean of the series, in dollars."""
    return _fraction_to_decimal(_mean_fraction(series))


def series_sample_variance(series: SpendSeries) -> Decimal:
    """Sample variance (n - 1 denominator) of the series, in square dollars."""
    return _fraction_to_decimal(_variance_fraction(series))


def series_stddev(series: SpendSeries) -> Decimal:
    """Sample standard deviation of the series."""
    with localcontext() as ctx:
        ctx.prec = _STAT_PRECISION
        return _fraction_to_decimal(_variance_fraction(series)).sqrt()


def coefficient_of_variation(series: SpendSeries) -> Decimal:
    """Sample standard deviation divided by the mean; the relative variability."""
    mean = _mean_fraction(series)
    stddev = series_stddev(series)  # raises for n < 2
    if mean <= 0:
        raise CovUndefinedError("coefficient of variation undefined for non-positive mean")
    with localcontext() as ctx:
        ctx.prec = _STAT_PRECISION
        return stddev / _fraction_to_decimal(mean)


@dataclass(frozen=True)
class SeriesStats:
    mean: Decimal
    sample_variance: Decimal
    stddev: Decimal
    cov: Decimal

    @classmethod
    def from_series(cls, series: SpendSeries) -> SeriesStats:
        return cls(
            mean=series_mean(series),
            sample_variance=series_sample_variance(series),
            stddev=series_stddev(series),
            cov=coefficient_of_variation(series),
        )


# --- Budget specification and computation -------------------------------------

class VariabilityMode(str, Enum):
    EXPLICIT = "explicit"
    COMPUTED = "computed_from_historical"


@dataclass(frozen=True)
class Variability:
    mode: VariabilityMode
    value: Decimal | None = None

    def __post_init__(self) -> None:
        if self.mode is VariabilityMode.EXPLICIT:
            if self.value is None:
                raise ValueError("explicit variability requires a value")
            if self.value < 0:
                raise ValueError("variability factor must be >= 0")
        elif self.value is not None:
            raise ValueError("computed variability must not carry a value")

    @classmethod
    def explicit(cls, value: DecimalLike) -> Variability:
        return cls(VariabilityMode.EXPLICIT, to_decimal(value, "variability factor"))

    @classmethod
    def computed(cls) -> Variability:
        return cls(VariabilityMode.COMPUTED)


@dataclass(frozen=True)
class BudgetSpec:
    """Inputs to one budget computation for an account or cost center."""

    target_id: str
    period: BudgetPeriod
    historical: SpendSeries
    growth_factor: Decimal
    cost_control_factor: Decimal
    variability: Variability
    available_budget: Money
    thresholds: tuple[Decimal, ...] = field(default=DEFAULT_THRESHOLDS)

    def __post_init__(self) -> None:
        if not self.target_id:
            raise ValueError("target_id must be non-empty")
        _check_factors(self.growth_factor, self.cost_control_factor)
        if self.available_budget < Money.zero():
            raise ValueError("available budget must be >= 0")
        if not self.thresholds:
            raise ValueError("at least one threshold is required")
        previous = Decimal(0)
        for t in self.thresholds:
            if not (0 < t <= 2):
                raise ValueError(f"threshold {t} out of range (0, 2]")
            if t <= previous:
                raise ValueError("thresholds must be strictly ascending")
            previous = t


@dataclass(frozen=True)
class ComputedBudget:
    """Result of one budget computation, capped by the available budget."""

    spec: BudgetSpec
    adjusted_spend: Money
    crb: Money
    variability_used: Decimal
    computed_at: datetime
    warnings: tuple[str, ...] = ()


def _check_factors(growth: Decimal, cost_control: Decimal, variability: Decimal | None = None) -> None:
    if growth < -1:
        raise ValueError("growth factor must be >= -1")
    if not (0 <= cost_control < 1):
        raise ValueError("cost control factor must be in [0, 1)")
    if variability is not None and variability < 0:
        raise ValueError("variability factor must be >= 0")


def adjusted_spend(
    historical: SpendSeries,
    growth_factor: DecimalLike,
    cost_control_factor: DecimalLike,
    variability_factor: DecimalLike,
) -> Money:
    """Pre-cap budget: sum of historical spend scaled by the three factors.

    Exact rational product, rounded half-up to a cent at the very end.
    """
    growth = to_decimal(growth_factor, "growth factor")
    control = to_decimal(cost_control_factor, "cost control factor")
    variability = to_decimal(variability_factor, "variability factor")
    _check_factors(growth, control, variability)
    product = (
        Fraction(historical.total().amount_minor)
        * (1 + Fraction(growth))
        * (1 - Fraction(control))
        * (1 + Fraction(variability))
    )
    return Money(round_half_up(product))


def compute_budget(spec: BudgetSpec, now: datetime) -> ComputedBudget:
    """Resolve the variability factor, apply the formula and cap by available budget.

    In computed mode the variability factor falls back to 0 (with a warning
    attached) when the history is too short or its mean is not positive, so a
    new team still gets a conservative budget instead of an error.
    """
    warnings: list[str] = []
    if spec.variability.mode is VariabilityMode.EXPLICIT:
        v_used = spec.variability.value
        assert v_used is not None
    else:
        try:
            v_used = coefficient_of_variation(spec.historical)
        except StatisticsError as exc:
            v_used = Decimal(0)
            warnings.append(f"variability fallback to 0: {exc}")
    spend = adjusted_spend(spec.historical, spec.growth_factor, spec.cost_control_factor, v_used)
    crb = min(spend, spec.available_budget)
    return ComputedBudget(
        spec=spec,
        adjusted_spend=spend,
        crb=crb,
        variability_used=v_used,
        computed_at=now,
        warnings=tuple(warnings),
    )


def allocate(total: Money, weights: Sequence[tuple[str, Money]]) -> dict[str, Money]:
    """Split a budget across targets proportionally to historical spend.

    Falls back to an equal split when there is no usable history (all weights
    non-positive). Remainder cents go to the largest fractional parts first
    (ties broken by input order), so the parts always sum exactly to the total.
    """
    if not weights:
        raise ValueError("allocation needs at least one target")
    if total < Money.zero():
        raise ValueError("cannot allocate a negative budget")
    ids = [target for target, _ in weights]
    if len(set(ids)) != len(ids):
        raise ValueError("allocation targets must be unique")
    raw = [max(w.amount_minor, 0) for _, w in weights]
    denominator = sum(raw)
    if denominator == 0:
        raw = [1] * len(weights)
        denominator = len(weights)
    exact = [Fraction(total.amount_minor * r, denominator) for r in raw]
    floors = [int(e) for e in exact]
    leftover = total.amount_minor - sum(floors)
    by_remainder = sorted(range(len(exact)), key=lambda i: (exact[i] - floors[i], -i), reverse=True)
    for i in by_remainder[:leftover]:
        floors[i] += 1
    return {target: Money(cents) for (target, _), cents in zip(weights, floors)}
