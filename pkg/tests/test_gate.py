"""Policy gate tests: plan costing, allow/deny semantics, fail-closed behavior."""

from __future__ import annotations

import random

import pytest

from costguard.clock import utc
from costguard.gate import (
    DeploymentPlan,
    PlanParseError,
    PlanResource,
    parse_plan,
    plan_cost,
)
from costguard.model import Money, money
from test_monitor import demo_budget_wire, make_core, spend_record


def plan_wire(plan_id="plan-1", account="acct-demo", resources=None):
    return {
        "plan_id": plan_id,
        "account_id": account,
        "resources": resources
        if resources is not None
        else [{"address": "module.web.vm[0]", "service_name": "compute", "monthly_cost": "100.00"}],
    }


class TestPlanCost:
    def test_empty_plan_is_zero(self):
        plan = DeploymentPlan(plan_id="p", account_id="a", resources=())
        assert plan_cost(plan) == money("0.00")

    def test_two_resource_sum(self):
        plan = parse_plan(
            plan_wire(
                resources=[
                    {"address": "a", "service_name": "compute", "monthly_cost": "100.00"},
                    {"address": "b", "service_name": "storage", "monthly_cost": "250.50"},
                ]
            )
        )
        assert plan_cost(plan) == money("350.50")

    def test_thousand_random_resources_match_resum(self):
        rng = random.Random(42)
        cents = [rng.randint(0, 10**6) for _ in range(1000)]
        resources = tuple(
            PlanResource(address=f"r{i}", service_name="compute", estimated_monthly_cost=Money(c))
            for i, c in enumerate(cents)
        )
        plan = DeploymentPlan(plan_id="big", account_id="a", resources=resources)
        assert plan_cost(plan).amount_minor == sum(cents)

    def test_price_table_mode(self):
        plan = parse_plan(
            plan_wire(
                resources=[
                    {"address": "a", "service_name": "compute", "resource_type": "vm-small", "quantity": 3}
                ]
            ),
            price_table={"vm-small": money("12.50")},
        )
        assert plan_cost(plan) == money("37.50")

    def test_unknown_resource_type_is_parse_error(self):
        with pytest.raises(PlanParseError):
            parse_plan(
                plan_wire(resources=[{"address": "a", "service_name": "x", "resource_type": "vm-huge"}]),
                price_table={},
            )

    def test_duplicate_addresses_rejected(self):
        with pytest.raises(ValueError):
            parse_plan(
                plan_wire(
                    resources=[
                        {"address": "same", "service_name": "a", "monthly_cost": "1.00"},
                        {"address": "same", "service_name": "b", "monthly_cost": "2.00"},
                    ]
                )
            )

    def test_negative_cost_rejected(self):
        with pytest.raises((PlanParseError, ValueError)):
            parse_plan(plan_wire(resources=[{"address": "a", "service_name": "x", "monthly_cost": "-1.00"}]))


@pytest.fixture
def gated_core(tmp_path):
    core, clock = make_core(tmp_path)
    core.put_budget("b1", demo_budget_wire())  # crb 113,400 for acct-demo, 2025-01
    clock.set(utc(2025, 1, 10))
    return core, clock


class TestEvaluatePlan:
    def test_boundary_inclusive_allow(self, gated_core):
        core, _ = gated_core
        core.ingest([spend_record("r1", "103400.00")])  # remaining exactly 10,000
        plan = parse_plan(
            plan_wire(resources=[{"address": "a", "service_name": "compute", "monthly_cost": "10000.00"}])
        )
        decision = core.check_plan(plan)
        assert decision.verdict == "Allow"
        assert decision.projected_spend == money("113400.00")
        assert decision.remaining_budget == money("10000.00")

    def test_one_cent_over_denies(self, gated_core):
        core, _ = gated_core
        core.ingest([spend_record("r1", "103400.00")])
        plan = parse_plan(
            plan_wire(resources=[{"address": "a", "service_name": "compute", "monthly_cost": "10000.01"}])
        )
        decision = core.check_plan(plan)
        assert decision.verdict == "Deny"
        assert "exceeds" in decision.reason

    def test_no_budget_fails_closed(self, gated_core):
        core, _ = gated_core
        plan = parse_plan(plan_wire(account="acct-other"))
        decision = core.check_plan(plan)
        assert decision.verdict == "Deny"
        assert "no budget" in decision.reason

    def test_unknown_account_fails_closed(self, gated_core):
        core, _ = gated_core
        decision = core.check_plan(parse_plan(plan_wire(account="acct-ghost")))
        assert decision.verdict == "Deny"
        assert "unknown account" in decision.reason

    def test_suspended_account_denies_any_plan(self, gated_core):
        core, clock = gated_core
        core.ingest([spend_record("r1", "125000.00")])
        core.put_budget(
            "b1", demo_budget_wire(thresholds=["0.50", "0.75", "0.90", "1.00", "1.10"]), expected_version=1
        )
        clock.set(utc(2025, 1, 11))
        core.sweep()
        core.drain()
        assert core.registry.status("acct-demo").value == "Suspended"
        decision = core.check_plan(parse_plan(plan_wire()))
        assert decision.verdict == "Deny"
        assert "suspended" in decision.reason

    def test_warned_account_still_allowed(self, gated_core):
        core, clock = gated_core
        core.ingest([spend_record("r1", "102100.00")])  # past 0.90 = 102,060
        clock.set(utc(2025, 1, 11))
        core.sweep()
        core.drain()
        assert core.registry.status("acct-demo").value == "Warned"
        plan = parse_plan(
            plan_wire(resources=[{"address": "a", "service_name": "compute", "monthly_cost": "100.00"}])
        )
        assert core.check_plan(plan).verdict == "Allow"

    def test_deny_is_monotone_under_added_resources(self, gated_core):
        core, _ = gated_core
        core.ingest([spend_record("r1", "113000.00")])
        base = [{"address": "a", "service_name": "compute", "monthly_cost": "500.00"}]
        denied = core.check_plan(parse_plan(plan_wire(resources=base)))
        assert denied.verdict == "Deny"
        superset = base + [{"address": "b", "service_name": "storage", "monthly_cost": "1.00"}]
        assert core.check_plan(parse_plan(plan_wire(resources=superset))).verdict == "Deny"

    def test_determinism(self, gated_core):
        core, _ = gated_core
        plan = parse_plan(plan_wire())
        first = core.check_plan(plan)
        second = core.check_plan(plan)
        assert (first.verdict, first.reason, first.projected_spend) == (
            second.verdict,
            second.reason,
            second.projected_spend,
        )

    def test_decision_log_is_append_only(self, gated_core):
        core, _ = gated_core
        core.check_plan(parse_plan(plan_wire(plan_id="p1")))
        core.check_plan(parse_plan(plan_wire(plan_id="p2")))
        entries = core.gate.decision_log_entries()
        assert [e["plan_id"] for e in entries] == ["p1", "p2"]
        assert all(e["verdict"] in ("Allow", "Deny") for e in entries)

    def test_cost_center_budget_covers_member_account(self, tmp_path):
        core, clock = make_core(tmp_path)
        wire = demo_budget_wire()
        wire["target_id"] = "cc-platform"
        core.put_budget("bcc", wire)
        clock.set(utc(2025, 1, 10))
        decision = core.check_plan(parse_plan(plan_wire(account="acct-other")))
        assert decision.verdict == "Allow"
