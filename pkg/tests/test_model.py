"""Core domain type tests: money arithmetic, labels, records, periods."""

from __future__ import annotations

from datetime import timedelta
from decimal import ROUND_HALF_UP, Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from costguard.clock import utc
from costguard.model import (
    MONEY_MAX_MINOR,
    BillingRecord,
    BudgetPeriod,
    Granularity,
    LabelSet,
    Money,
    MoneyOverflowError,
    money,
    money_add,
    money_scale,
    validate_labels,
)

# Bounded so sums of a few values stay inside the supported range.
amounts = st.integers(min_value=-(2**53), max_value=2**53).map(Money)


def scale_oracle(dollars: str, factor: str) -> str:
    """Independent half-up rounding oracle using Decimal quantization."""
    product = Decimal(dollars) * Decimal(factor)
    return str(product.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


class TestMoney:
    def test_worked_example_scale(self):
        # 1.20 * 0.90 * 1.05 == 1.134 exactly
        assert money_scale(money("100000.00"), "1.134") == money("113400.00")

    def test_add_identity(self):
        assert money_add(money("0.00"), money("5.00")) == money("5.00")

    def test_half_up_rounding_at_half_cent(self):
        expected = scale_oracle("0.01", "0.5")
        assert expected == "0.01"  # 0.005 rounds up
        assert money_scale(money("0.01"), "0.5") == money(expected)

    def test_half_up_is_away_from_zero_for_credits(self):
        expected = scale_oracle("-0.01", "0.5")
        assert expected == "-0.01"
        assert money_scale(money("-0.01"), "0.5") == money(expected)

    def test_scale_rejects_floats(self):
        with pytest.raises(TypeError):
            money_scale(money("1.00"), 1.134)  # type: ignore[arg-type]

    def test_scale_rejects_more_than_six_fraction_digits(self):
        with pytest.raises(ValueError):
            money_scale(money("1.00"), "0.1234567")

    def test_overflow_is_an_error(self):
        top = Money(MONEY_MAX_MINOR)
        with pytest.raises(MoneyOverflowError):
            money_add(top, Money(1))
        with pytest.raises(MoneyOverflowError):
            top.scale(2)

    def test_parse_rejects_sub_cent(self):
        with pytest.raises(ValueError):
            money("1.005")

    def test_dollar_rendering(self):
        assert money("113400.00").dollars() == "113400.00"
        assert money("-20.50").dollars() == "-20.50"
        assert Money(5).dollars() == "0.05"
        assert money("113400.00").pretty() == "$113,400.00"

    @given(amounts, amounts)
    def test_add_commutes(self, a, b):
        assert money_add(a, b) == money_add(b, a)

    @given(amounts, amounts, amounts)
    def test_add_associates(self, a, b, c):
        assert money_add(money_add(a, b), c) == money_add(a, money_add(b, c))

    @given(amounts)
    def test_scale_by_one_is_identity(self, m):
        assert money_scale(m, 1) == m

    @given(amounts, st.decimals(min_value="0", max_value="10", places=6))
    def test_scale_matches_decimal_oracle(self, m, factor):
        expected = money(scale_oracle(m.dollars(), str(factor)))
        assert money_scale(m, str(factor)) == expected


label_token = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789-_", min_size=1, max_size=63)


class TestLabels:
    def test_complete_label_set_is_valid(self):
        result = validate_labels({"purpose": "etl", "owner": "data-team", "environment": "prod"})
        assert result.valid
        assert result.violations == ()

    def test_missing_keys_all_reported(self):
        result = validate_labels({"environment": "dev"})
        assert not result.valid
        assert any("purpose" in v for v in result.violations)
        assert any("owner" in v for v in result.violations)
        assert len(result.violations) == 2

    def test_empty_value_reported(self):
        result = validate_labels({"purpose": "", "owner": "x", "environment": "prod"})
        assert not result.valid
        assert ["purpose" in v for v in result.violations].count(True) == 1

    def test_uppercase_and_long_tokens_rejected(self):
        assert not validate_labels({"purpose": "ETL", "owner": "x", "environment": "prod"}).valid
        assert not validate_labels({"purpose": "a" * 64, "owner": "x", "environment": "prod"}).valid

    def test_validation_is_deterministic(self):
        labels = {"purpose": "etl", "owner": "", "environment": "prod"}
        assert validate_labels(labels) == validate_labels(labels)

    @given(
        st.dictionaries(label_token, label_token, min_size=0, max_size=6),
        label_token,
        label_token,
    )
    def test_adding_valid_key_never_invalidates(self, extra, key, value):
        base = {"purpose": "etl", "owner": "data-team", "environment": "prod", **extra}
        assert validate_labels(base).valid
        augmented = dict(base)
        augmented[key] = value
        assert validate_labels(augmented).valid


class TestBillingRecord:
    def _labels(self):
        return LabelSet({"purpose": "etl", "owner": "data-team", "environment": "prod"})

    def test_usage_window_ordering_enforced(self):
        start = utc(2025, 1, 2, 12)
        with pytest.raises(ValueError):
            BillingRecord(
                record_id="r1",
                account_id="acct-a",
                service_name="compute",
                resource_id="vm-1",
                labels=self._labels(),
                usage_start=start,
                usage_end=start - timedelta(hours=1),
                cost=money("1.00"),
            )

    def test_negative_cost_allowed_for_credits(self):
        record = BillingRecord(
            record_id="r1",
            account_id="acct-a",
            service_name="compute",
            resource_id="vm-1",
            labels=self._labels(),
            usage_start=utc(2025, 1, 2),
            usage_end=utc(2025, 1, 2, 1),
            cost=money("-20.00"),
        )
        assert record.cost == money("-20.00")


class TestBudgetPeriod:
    def test_month_label_roundtrip(self):
        period = BudgetPeriod.parse_label("2025-01")
        assert period.start == utc(2025, 1, 1)
        assert period.end == utc(2025, 2, 1)
        assert period.granularity is Granularity.MONTHLY
        assert period.label == "2025-01"

    def test_quarter_label_roundtrip(self):
        period = BudgetPeriod.parse_label("2025-Q1")
        assert period.start == utc(2025, 1, 1)
        assert period.end == utc(2025, 4, 1)
        assert period.label == "2025-Q1"

    def test_membership_is_half_open(self):
        period = BudgetPeriod.month(2025, 1)
        assert period.contains(utc(2025, 1, 1))
        assert period.contains(utc(2025, 1, 31, 23))
        assert not period.contains(utc(2025, 2, 1))

    def test_periods_are_contiguous(self):
        period = BudgetPeriod.month(2025, 12)
        nxt = period.next_period()
        assert nxt.start == period.end
        assert nxt.label == "2026-01"

    def test_elapsed_days(self):
        period = BudgetPeriod.month(2025, 1)
        assert period.elapsed_days(utc(2025, 1, 16, 12)) == Decimal("15.5")
        assert period.elapsed_days(utc(2024, 12, 1)) == 0
        assert period.elapsed_days(utc(2025, 3, 1)) == 31
