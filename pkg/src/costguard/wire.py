"""Wire formats: JSON-able dict encodings of the domain types.

One place owns every request/response and store-snapshot schema so the API,
the CLI and the persistence layer cannot drift apart. All monetary values
are decimal strings with exactly two fraction digits; factors, thresholds
and rates are decimal strings as well.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation
from typing import Any, Mapping

from .alerts import Alert
from .budget import (
    BudgetSpec,
    ComputedBudget,
    SpendSeries,
    Variability,
    VariabilityMode,
)
from .clock import parse_rfc3339, rfc3339
from .enforce import BreachRecord
from .gate import GateDecision
from .ledger import IngestReport, SpendAggregate
from .model import Account, BudgetPeriod, Money


class WireError(ValueError):
    """Request payload does not match the documented schema."""


def _require(data: Mapping[str, Any], key: str) -> Any:
    if key not in data:
        raise WireError(f"missing required field: {key}")
    return data[key]


def _decimal(value: Any, what: str) -> Decimal:
    if isinstance(value, float):
        raise WireError(f"{what} must be a decimal string, not a float")
    try:
        return Decimal(str(value))
    except InvalidOperation as exc:
        raise WireError(f"{what} is not a valid decimal: {value!r}") from exc


def _money(value: Any, what: str) -> Money:
    try:
        return Money.from_dollars(str(value) if not isinstance(value, float) else _reject_float(what))
    except (ValueError, TypeError) as exc:
        raise WireError(f"{what}: {exc}") from exc


def _reject_float(what: str) -> str:
    raise WireError(f"{what} must be a decimal string, not a float")


# --- budgets -------------------------------------------------------------------

def budget_spec_from_wire(
    data: Mapping[str, Any],
    default_thresholds: tuple[Decimal, ...] | None = None,
) -> BudgetSpec:
    # omitted variability defaults to computed-from-history mode
    variability_raw = data.get("variability") or {"mode": VariabilityMode.COMPUTED.value}
    mode = _require(variability_raw, "mode")
    if mode == VariabilityMode.EXPLICIT.value:
        variability = Variability.explicit(_decimal(_require(variability_raw, "value"), "variability value"))
    elif mode == VariabilityMode.COMPUTED.value:
        variability = Variability.computed()
    else:
        raise WireError(f"unknown variability mode: {mode!r}")
    historical = _require(data, "historical")
    if not isinstance(historical, list) or not historical:
        raise WireError("historical must be a non-empty list of dollar amounts")
    kwargs: dict[str, Any] = {}
    if "thresholds" in data and data["thresholds"] is not None:
        kwargs["thresholds"] = tuple(_decimal(t, "threshold") for t in data["thresholds"])
    elif default_thresholds is not None:
        kwargs["thresholds"] = tuple(default_thresholds)
    try:
        return BudgetSpec(
            target_id=str(_require(data, "target_id")),
            period=BudgetPeriod.parse_label(str(_require(data, "period"))),
            historical=SpendSeries(tuple(_money(v, "historical entry") for v in historical)),
            growth_factor=_decimal(_require(data, "growth_factor"), "growth_factor"),
            cost_control_factor=_decimal(_require(data, "cost_control_factor"), "cost_control_factor"),
            variability=variability,
            available_budget=_money(_require(data, "available_budget"), "available_budget"),
            **kwargs,
        )
    except WireError:
        raise
    except ValueError as exc:
        raise WireError(str(exc)) from exc


def budget_spec_to_wire(spec: BudgetSpec) -> dict:
    variability: dict[str, Any] = {"mode": spec.variability.mode.value}
    if spec.variability.value is not None:
        variability["value"] = str(spec.variability.value)
    return {
        "target_id": spec.target_id,
        "period": spec.period.label,
        "historical": [m.dollars() for m in spec.historical.values],
        "growth_factor": str(spec.growth_factor),
        "cost_control_factor": str(spec.cost_control_factor),
        "variability": variability,
        "available_budget": spec.available_budget.dollars(),
        "thresholds": [str(t) for t in spec.thresholds],
    }


def computed_budget_to_wire(budget_id: str, version: int, computed: ComputedBudget) -> dict:
    return {
        "budget_id": budget_id,
        "version": version,
        "spec": budget_spec_to_wire(computed.spec),
        "adjusted_spend": computed.adjusted_spend.dollars(),
        "crb": computed.crb.dollars(),
        "variability_used": str(computed.variability_used),
        "warnings": list(computed.warnings),
        "computed_at": rfc3339(computed.computed_at),
    }


def computed_budget_from_wire(data: Mapping[str, Any]) -> ComputedBudget:
    spec = budget_spec_from_wire(_require(data, "spec"))
    return ComputedBudget(
        spec=spec,
        adjusted_spend=_money(_require(data, "adjusted_spend"), "adjusted_spend"),
        crb=_money(_require(data, "crb"), "crb"),
        variability_used=_decimal(_require(data, "variability_used"), "variability_used"),
        computed_at=parse_rfc3339(_require(data, "computed_at")),
        warnings=tuple(data.get("warnings", [])),
    )


# --- accounts, breaches, alerts -------------------------------------------------

def account_to_wire(account: Account, stopped_services: list[str]) -> dict:
    return {
        "account_id": account.account_id,
        "display_name": account.display_name,
        "cost_center_id": account.cost_center_id,
        "provider": account.provider.value,
        "state": {
            "value": account.state.value.value,
            "changed_at": rfc3339(account.state.changed_at),
        },
        "stopped_services": stopped_services,
    }


def breach_to_wire(record: BreachRecord) -> dict:
    return {
        "breach_id": record.breach_id,
        "account_id": record.account_id,
        "service_type": record.service_type,
        "period": record.period_label,
        "budget": record.budget.dollars(),
        "spend": record.spend.dollars(),
        "threshold": str(record.threshold),
        "action_taken": record.action_taken.value,
        "resulting_state": record.resulting_state.value,
        "recorded_at": rfc3339(record.recorded_at),
        "note": record.note,
    }


def alert_to_wire(alert: Alert) -> dict:
    return {
        "alert_id": alert.alert_id,
        "severity": alert.severity.value,
        "body": alert.body,
        "created_at": rfc3339(alert.created_at),
        "account_id": alert.account_id,
        "budget_id": alert.budget_id,
        "threshold": str(alert.threshold) if alert.threshold is not None else None,
        "spend": alert.spend.dollars() if alert.spend is not None else None,
        "crb": alert.crb.dollars() if alert.crb is not None else None,
    }


def gate_decision_to_wire(decision: GateDecision) -> dict:
    return {
        "plan_id": decision.plan_id,
        "verdict": decision.verdict,
        "reason": decision.reason,
        "projected_spend": decision.projected_spend.dollars(),
        "remaining_budget": decision.remaining_budget.dollars(),
        "decided_at": rfc3339(decision.decided_at),
    }


def ingest_report_to_wire(report: IngestReport) -> dict:
    return {
        "accepted": report.accepted,
        "unattributed": report.unattributed,
        "duplicates": report.duplicates,
        "rejected": report.rejected,
    }


def aggregate_to_wire(aggregate: SpendAggregate) -> dict:
    return {
        "account_id": aggregate.account_id,
        "period": aggregate.period.label,
        "total": aggregate.total.dollars(),
        "by_service": {name: amount.dollars() for name, amount in aggregate.by_service.items()},
        "unattributed": aggregate.unattributed.dollars(),
    }


def chargeback_rows_to_wire(rows: list[dict]) -> list[dict]:
    return [
        {
            "cost_center_id": row["cost_center_id"],
            "period": row["period"].label,
            "total": row["total"].dollars(),
            "by_account": {acct: amount.dollars() for acct, amount in row["by_account"].items()},
        }
        for row in rows
    ]


# --- billing records over the API ------------------------------------------------

def billing_record_from_wire(data: Mapping[str, Any]):
    from .feed import row_to_record

    try:
        return row_to_record(
            [
                str(_require(data, "record_id")),
                str(_require(data, "account_id")),
                str(_require(data, "service_name")),
                str(_require(data, "resource_id")),
                ";".join(f"{k}={v}" for k, v in dict(_require(data, "labels")).items()),
                str(_require(data, "usage_start")),
                str(_require(data, "usage_end")),
                str(_require(data, "cost")) if not isinstance(data["cost"], float) else _reject_float("cost"),
            ]
        )
    except WireError:
        raise
    except (ValueError, TypeError) as exc:
        raise WireError(f"malformed billing record: {exc}") from exc
