"""Event payloads shared by the monitor, the queue and the enforcer."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal

from .model import BudgetPeriod, Money

ALL_SERVICES = "ALL"


@dataclass(frozen=True)
class ThresholdEvent:
    """Cumulative period spend crossed one budget-fraction threshold."""

    budget_id: str
    threshold: Decimal
    spend_at_crossing: Money
    crb: Money
    occurred_at: datetime


@dataclass(frozen=True)
class CostEvaluationReport:
    """Breach context: top services, burn rate and per-service anomalies."""

    account_id: str
    period: BudgetPeriod
    top_services: tuple[tuple[str, Money, Decimal], ...]
    burn_rate: Decimal | None
    anomalies: tuple[tuple[str, Decimal], ...]


@dataclass(frozen=True)
class EnforcementMessage:
    """Queue payload: who breached what, with the evaluation attached."""

    account_id: str
    service_type: str
    budget: Money
    spend: Money
    threshold: Decimal
    report: CostEvaluationReport

    @property
    def period(self) -> BudgetPeriod:
        return self.report.period

    def to_json(self) -> str:
        return json.dumps(
            {
                "account_id": self.account_id,
                "service_type": self.service_type,
                "budget": self.budget.dollars(),
                "spend": self.spend.dollars(),
                "threshold": str(self.threshold),
                "report": {
                    "account_id": self.report.account_id,
                    "period": self.report.period.label,
                    "top_services": [
                        [name, amount.dollars(), str(share)]
                        for name, amount, share in self.report.top_services
                    ],
                    "burn_rate": str(self.report.burn_rate) if self.report.burn_rate is not None else None,
                    "anomalies": [[name, str(z)] for name, z in self.report.anomalies],
                },
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, raw: str) -> EnforcementMessage:
        data = json.loads(raw)
        report = data["report"]
        return cls(
            account_id=data["account_id"],
            service_type=data["service_type"],
            budget=Money.from_dollars(data["budget"]),
            spend=Money.from_dollars(data["spend"]),
            threshold=Decimal(data["threshold"]),
            report=CostEvaluationReport(
                account_id=report["account_id"],
                period=BudgetPeriod.parse_label(report["period"]),
                top_services=tuple(
                    (name, Money.from_dollars(amount), Decimal(share))
                    for name, amount, share in report["top_services"]
                ),
                burn_rate=Decimal(report["burn_rate"]) if report.get("burn_rate") else None,
                anomalies=tuple((name, Decimal(z)) for name, z in report["anomalies"]),
            ),
        )
