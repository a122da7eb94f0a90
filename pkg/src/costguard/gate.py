"""Pre-deployment cost gate: deny plans that would push spend past the budget.

A plan is allowed only when projected spend (billed spend so far plus the
plan's estimated monthly cost) stays at or under the budget AND the account
is Active or Warned. No budget configured means Deny: the gate fails closed.

Plan files are JSON:

    {
      "plan_id": "...", "account_id": "...",
      "resources": [
        {"address": "module.web.vm[0]", "service_name": "compute",
         "monthly_cost": "120.00"},
        {"address": "...", "service_name": "...",
         "resource_type": "vm-small", "quantity": 3}
      ]
    }

Resources either carry a pre-computed ``monthly_cost`` or a
(``resource_type``, ``quantity``) pair resolved against a price table.
A golden sample lives in docs/samples/deployment_plan.json.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Mapping

from .clock import Clock, rfc3339
from .model import AccountStatus, Money, money_sum
from .storage import AppendLog


@dataclass(frozen=True)
class PlanResource:
    address: str
    service_name: str
    estimated_monthly_cost: Money

    def __post_init__(self) -> None:
        if self.estimated_monthly_cost < Money.zero():
            raise ValueError(f"resource {self.address}: cost must be >= 0")


@dataclass(frozen=True)
class DeploymentPlan:
    plan_id: str
    account_id: str
    resources: tuple[PlanResource, ...]
    submitted_at: datetime | None = None

    def __post_init__(self) -> None:
        addresses = [r.address for r in self.resources]
        if len(set(addresses)) != len(addresses):
            raise ValueError("resource addresses must be unique within a plan")


class PlanParseError(ValueError):
    pass


def parse_plan(raw: dict, price_table: Mapping[str, Money] | None = None) -> DeploymentPlan:
    try:
        resources = []
        for item in raw.get("resources", []):
            if "monthly_cost" in item:
                cost = Money.from_dollars(item["monthly_cost"])
            elif "resource_type" in item:
                if not price_table or item["resource_type"] not in price_table:
                    raise PlanParseError(f"no price for resource type {item['resource_type']!r}")
                quantity = int(item.get("quantity", 1))
                if quantity < 0:
                    raise PlanParseError("quantity must be >= 0")
                cost = Money(price_table[item["resource_type"]].amount_minor * quantity)
            else:
                raise PlanParseError(f"resource {item.get('address')!r} has no cost information")
            resources.append(
                PlanResource(
                    address=item["address"],
                    service_name=item["service_name"],
                    estimated_monthly_cost=cost,
                )
            )
        return DeploymentPlan(
            plan_id=raw["plan_id"],
            account_id=raw["account_id"],
            resources=tuple(resources),
        )
    except PlanParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanParseError(f"malformed deployment plan: {exc}") from exc


def load_plan(path: Path, price_table: Mapping[str, Money] | None = None) -> DeploymentPlan:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PlanParseError(f"plan file is not valid JSON: {exc}") from exc
    return parse_plan(raw, price_table)


def plan_cost(plan: DeploymentPlan) -> Money:
    """Exact sum of the per-resource monthly estimates."""
    return money_sum(r.estimated_monthly_cost for r in plan.resources)


class Verdict:
    ALLOW = "Allow"
    DENY = "Deny"


@dataclass(frozen=True)
class GateDecision:
    plan_id: str
    verdict: str
    reason: str
    projected_spend: Money
    remaining_budget: Money
    decided_at: datetime

    def __post_init__(self) -> None:
        if self.verdict == Verdict.DENY and not self.reason:
            raise ValueError("a denial always carries a reason")


class PolicyGate:
    """Stateless plan evaluation over a consistent budget snapshot."""

    def __init__(self, budgets, ledger, registry, decision_log_path: Path, clock: Clock) -> None:
        self.budgets = budgets
        self.ledger = ledger
        self.registry = registry
        self.clock = clock
        self._log = AppendLog(decision_log_path)

    def evaluate_plan(self, plan: DeploymentPlan) -> GateDecision:
        cost = plan_cost(plan)
        now = self.clock.now()
        decision = self._decide(plan, cost, now)
        self._log.append(
            json.dumps(
                {
                    "plan_id": decision.plan_id,
                    "account_id": plan.account_id,
                    "verdict": decision.verdict,
                    "reason": decision.reason,
                    "projected_spend": decision.projected_spend.dollars(),
                    "remaining_budget": decision.remaining_budget.dollars(),
                    "decided_at": rfc3339(decision.decided_at),
                },
                sort_keys=True,
            )
        )
        return decision

    def _decide(self, plan: DeploymentPlan, cost: Money, now: datetime) -> GateDecision:
        def deny(reason: str, projected: Money = Money.zero(), remaining: Money = Money.zero()) -> GateDecision:
            return GateDecision(plan.plan_id, Verdict.DENY, reason, projected, remaining, now)

        if not self.registry.is_known(plan.account_id):
            return deny(f"unknown account {plan.account_id}", projected=cost)

        status = self.registry.status(plan.account_id)
        stored = self.budgets.find_for_target(plan.account_id, now)
        if stored is None:
            center = self.registry.get(plan.account_id).cost_center_id
            if center:
                stored = self.budgets.find_for_target(center, now)
        if stored is None:
            return deny("no budget configured for account or its cost center", projected=cost)

        computed = stored.computed
        period = computed.spec.period
        target = computed.spec.target_id
        if self.registry.is_known(target):
            spend = self.ledger.cumulative_spend(target, period, as_of=now)
        else:
            spend = self.ledger.center_spend(target, period, as_of=now)
        projected = spend + cost
        remaining = computed.crb - spend

        if status in (AccountStatus.SUSPENDED, AccountStatus.RESTRICTED):
            return deny(f"account {status.value.lower()}", projected=projected, remaining=remaining)
        if projected > computed.crb:
            return deny(
                f"projected spend {projected.pretty()} exceeds budget {computed.crb.pretty()}",
                projected=projected,
                remaining=remaining,
            )
        return GateDecision(plan.plan_id, Verdict.ALLOW, "within budget", projected, remaining, now)

    def decision_log_entries(self) -> list[dict]:
        return [json.loads(line) for line in self._log.lines()]

    def close(self) -> None:
        self._log.close()
