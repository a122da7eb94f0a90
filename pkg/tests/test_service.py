"""Service-level tests: config-driven defaults, restart reconstruction, concurrency."""

from __future__ import annotations

import threading
from decimal import Decimal

from costguard.clock import SimClock, utc
from costguard.config import AccountConfig, ServiceConfig, parse_config
from costguard.feed import generate_feed
from costguard.ledger import CostCenter
from costguard.model import BudgetPeriod, money
from costguard.service import AppCore
from costguard.wire import alert_to_wire, breach_to_wire, computed_budget_to_wire
from test_ingestion import demo_config
from test_monitor import demo_budget_wire, spend_record

JAN = BudgetPeriod.month(2025, 1)


def make_config(tmp_path, **overrides) -> ServiceConfig:
    defaults = dict(
        data_dir=tmp_path / "data",
        cost_centers=(CostCenter("cc-platform", "Platform"),),
        accounts=(
            AccountConfig("acct-demo", cost_center_id="cc-platform"),
            AccountConfig("acct-other", cost_center_id="cc-platform"),
        ),
        sinks=(),
    )
    defaults.update(overrides)
    return ServiceConfig(**defaults)


class TestConfigDefaults:
    def test_default_thresholds_apply_to_specs_without_any(self, tmp_path):
        config = make_config(
            tmp_path, default_thresholds=(Decimal("0.50"), Decimal("1.00"), Decimal("1.20"))
        )
        core = AppCore(config, clock=SimClock(utc(2025, 1, 1)))
        stored = core.put_budget("b1", demo_budget_wire())
        assert stored.computed.spec.thresholds == (Decimal("0.50"), Decimal("1.00"), Decimal("1.20"))
        explicit = dict(demo_budget_wire(), thresholds=["0.75"])
        stored2 = core.put_budget("b2", explicit)
        assert stored2.computed.spec.thresholds == (Decimal("0.75"),)
        core.close()

    def test_parse_config_roundtrips_policy_and_sinks(self, tmp_path):
        raw = {
            "data_dir": str(tmp_path / "d"),
            "enforcement_floor": "0.75",
            "policy": {
                "actions": [{"at": "0.75", "action": "Warn"}, {"at": "1.00", "action": "SuspendAccount"}],
                "exempt_services": ["audit-log"],
            },
            "sinks": [{"sink_id": "f", "kind": "file", "destination": str(tmp_path / "a.txt")}],
            "price_table": {"vm-small": "55.00"},
        }
        config = parse_config(raw)
        assert config.enforcement_floor == Decimal("0.75")
        assert config.policy.exempt_services == frozenset({"audit-log"})
        assert [r.action.value for r in config.policy.rules] == ["Warn", "SuspendAccount"]
        assert config.price_table["vm-small"] == money("55.00")


def observable_state(core: AppCore) -> dict:
    return {
        "budgets": [
            computed_budget_to_wire(b.budget_id, b.version, b.computed) for b in core.budgets.all()
        ],
        "accounts": {
            a: (core.registry.status(a).value, sorted(core.registry.stopped_services(a)))
            for a in core.registry.account_ids()
        },
        "breaches": [breach_to_wire(r) for r in core.breaches.records()],
        "alerts": [alert_to_wire(a) for a in core.alerts.all_alerts()],
        "chargeback": [
            (row["cost_center_id"], row["total"].dollars()) for row in core.chargeback(JAN)
        ],
        "queue_depth": len(core.queue),
        "fired": sorted(str(t) for t in core.monitor.state.fired("b1", "2025-01")),
    }


class TestRestartReconstruction:
    def test_clean_restart_reconstructs_identical_state(self, tmp_path):
        config = make_config(tmp_path)
        clock = SimClock(utc(2025, 1, 1))
        core = AppCore(config, clock=clock)
        core.put_budget("b1", demo_budget_wire())
        core.ingest([spend_record("r1", "103000.00", day=10)])
        core.ingest([spend_record("r2", "7.00", day=10, account="acct-other")])
        clock.set(utc(2025, 1, 11))
        core.sweep()
        core.drain()
        core.reinstate("acct-demo", "state check")
        before = observable_state(core)
        core.close()

        reopened = AppCore(config, clock=SimClock(utc(2025, 1, 11)))
        after = observable_state(reopened)
        assert after == before
        reopened.close()


class TestConcurrentIngestion:
    def test_parallel_ingest_conserves_totals(self, tmp_path):
        config = make_config(tmp_path)
        core = AppCore(config, clock=SimClock(utc(2025, 1, 1)))
        records = list(generate_feed(demo_config(seed=21, days=6)))
        by_account: dict[str, list] = {}
        for record in records:
            by_account.setdefault(record.account_id, []).append(record)

        workers = [
            threading.Thread(target=core.ingest, args=(chunk,)) for chunk in by_account.values()
        ]
        for w in workers:
            w.start()
        for w in workers:
            w.join()

        total = sum(r.cost.amount_minor for r in records)
        aggregated = sum(
            core.ledger.aggregate(acct, JAN).total.amount_minor for acct in by_account
        )
        assert aggregated == total
        # snapshot reads under a concurrent writer stay consistent
        agg = core.ledger.aggregate("acct-a", JAN)
        assert agg.total.amount_minor == sum(
            m.amount_minor for m in agg.by_service.values()
        ) + agg.unattributed.amount_minor
        core.close()
