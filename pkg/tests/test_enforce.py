"""Enforcement tests: durable FIFO queue, policy actions, state machine, audit store."""

from __future__ import annotations

import threading
from decimal import Decimal

import pytest

from costguard.accounts import AccountRegistry, UnknownAccountError
from costguard.alerts import AlertEngine, Severity
from costguard.clock import SimClock, utc
from costguard.enforce import (
    BreachStore,
    Enforcer,
    EnforcementAction,
    EnforcementPolicy,
    MessageQueue,
    PolicyRule,
)
from costguard.events import ALL_SERVICES, CostEvaluationReport, EnforcementMessage
from costguard.model import AccountStatus, BudgetPeriod, money

JAN = BudgetPeriod.month(2025, 1)


def make_message(account_id="acct-a", threshold="1.00", spend="120000.00", service=ALL_SERVICES):
    return EnforcementMessage(
        account_id=account_id,
        service_type=service,
        budget=money("113400.00"),
        spend=money(spend),
        threshold=Decimal(threshold),
        report=CostEvaluationReport(
            account_id=account_id,
            period=JAN,
            top_services=(("compute", money("90000.00"), Decimal("0.75")),),
            burn_rate=Decimal("2.0"),
            anomalies=(("compute", Decimal("4.2")),),
        ),
    )


@pytest.fixture
def clock():
    return SimClock(utc(2025, 1, 20))


@pytest.fixture
def harness(tmp_path, clock):
    registry = AccountRegistry(tmp_path / "accounts.json", clock)
    registry.register("acct-a", cost_center_id="cc-1")
    registry.register("acct-b", cost_center_id="cc-1")
    for svc in ("compute", "storage", "logging"):
        registry.observe_service("acct-a", svc)
    alerts = AlertEngine(tmp_path / "alerts.log", tmp_path / "dead.log", clock, sleeper=lambda s: None)
    queue = MessageQueue(tmp_path / "queue.journal", capacity=100)
    store = BreachStore(tmp_path / "breaches.log")
    enforcer = Enforcer(queue, store, registry, alerts, clock=clock)
    return registry, queue, store, enforcer, alerts


class TestQueue:
    def test_fifo_order(self, tmp_path):
        queue = MessageQueue(tmp_path / "q.journal")
        queue.enqueue(make_message(account_id="acct-1"))
        queue.enqueue(make_message(account_id="acct-2"))
        seq1, first = queue.peek()
        queue.ack(seq1)
        seq2, second = queue.peek()
        assert (first.account_id, second.account_id) == ("acct-1", "acct-2")
        assert seq1 < seq2

    def test_bounded_capacity_signals_retry(self, tmp_path):
        queue = MessageQueue(tmp_path / "q.journal", capacity=2)
        assert queue.enqueue(make_message(account_id="a1"))
        assert queue.enqueue(make_message(account_id="a2"))
        assert not queue.enqueue(make_message(account_id="a3"))  # retry-later
        seq, _ = queue.peek()
        queue.ack(seq)
        assert queue.enqueue(make_message(account_id="a3"))

    def test_messages_survive_restart(self, tmp_path):
        queue = MessageQueue(tmp_path / "q.journal")
        for i in range(3):
            queue.enqueue(make_message(account_id=f"acct-{i}"))
        seq, _ = queue.peek()
        queue.ack(seq)
        # abandon without clean shutdown; reopen the journal
        reopened = MessageQueue(tmp_path / "q.journal")
        assert len(reopened) == 2
        assert [m.account_id for _, m in (reopened.peek(),)] == ["acct-1"]

    def test_torn_tail_is_ignored(self, tmp_path):
        queue = MessageQueue(tmp_path / "q.journal")
        queue.enqueue(make_message(account_id="acct-ok"))
        with open(tmp_path / "q.journal", "a") as fh:
            fh.write("ENQ\t2\t{\"partial")  # no newline, no checksum
        reopened = MessageQueue(tmp_path / "q.journal")
        assert len(reopened) == 1

    def test_corrupt_checksum_stops_replay(self, tmp_path):
        queue = MessageQueue(tmp_path / "q.journal")
        queue.enqueue(make_message(account_id="acct-ok"))
        with open(tmp_path / "q.journal", "a") as fh:
            fh.write("ENQ\t2\t{}\tdeadbeef\n")
        reopened = MessageQueue(tmp_path / "q.journal")
        assert len(reopened) == 1

    def test_concurrent_producers_keep_journal_order(self, tmp_path):
        queue = MessageQueue(tmp_path / "q.journal", capacity=1000)

        def produce(start):
            for i in range(50):
                queue.enqueue(make_message(account_id=f"acct-{start + i:04d}"))

        threads = [threading.Thread(target=produce, args=(n * 50,)) for n in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        order = []
        while (head := queue.peek()) is not None:
            seq, msg = head
            order.append(seq)
            queue.ack(seq)
        assert order == sorted(order)
        assert len(order) == 200


class TestPolicy:
    def test_default_table(self):
        policy = EnforcementPolicy.default()
        assert policy.action_for(Decimal("0.90")) == EnforcementAction.WARN
        assert policy.action_for(Decimal("0.95")) == EnforcementAction.WARN
        assert policy.action_for(Decimal("1.00")) == EnforcementAction.STOP_SERVICES
        assert policy.action_for(Decimal("1.10")) == EnforcementAction.SUSPEND_ACCOUNT
        assert policy.action_for(Decimal("0.75")) == EnforcementAction.NONE

    def test_rules_must_ascend(self):
        with pytest.raises(ValueError):
            EnforcementPolicy(
                rules=(
                    PolicyRule(Decimal("1.00"), EnforcementAction.STOP_SERVICES),
                    PolicyRule(Decimal("0.90"), EnforcementAction.WARN),
                )
            )


class TestEnforcer:
    def test_stop_services_at_full_budget(self, harness):
        registry, queue, store, enforcer, _ = harness
        records = enforcer.process(make_message(threshold="1.00"))
        assert len(records) == 1
        record = records[0]
        assert record.action_taken == EnforcementAction.STOP_SERVICES
        assert record.resulting_state == AccountStatus.RESTRICTED
        assert registry.status("acct-a") == AccountStatus.RESTRICTED
        assert registry.stopped_services("acct-a") == {"compute", "storage", "logging"}

    def test_warn_then_stop_escalates(self, harness):
        registry, _, _, enforcer, _ = harness
        enforcer.process(make_message(threshold="0.90"))
        assert registry.status("acct-a") == AccountStatus.WARNED
        enforcer.process(make_message(threshold="1.00"))
        assert registry.status("acct-a") == AccountStatus.RESTRICTED

    def test_no_downgrade_records_action_none(self, harness):
        registry, _, store, enforcer, _ = harness
        enforcer.process(make_message(threshold="1.10"))
        assert registry.status("acct-a") == AccountStatus.SUSPENDED
        records = enforcer.process(make_message(threshold="0.90"))
        assert records[0].action_taken == EnforcementAction.NONE
        assert records[0].resulting_state == AccountStatus.SUSPENDED
        assert registry.status("acct-a") == AccountStatus.SUSPENDED

    def test_exempt_services_not_stopped(self, tmp_path, clock):
        registry = AccountRegistry(tmp_path / "a.json", clock)
        registry.register("acct-a")
        registry.observe_service("acct-a", "compute")
        registry.observe_service("acct-a", "security-agent")
        alerts = AlertEngine(tmp_path / "al.log", tmp_path / "dl.log", clock, sleeper=lambda s: None)
        queue = MessageQueue(tmp_path / "q.journal")
        store = BreachStore(tmp_path / "b.log")
        policy = EnforcementPolicy(
            rules=EnforcementPolicy.default().rules,
            exempt_services=frozenset({"security-agent"}),
        )
        enforcer = Enforcer(queue, store, registry, alerts, policy=policy, clock=clock)
        enforcer.process(make_message(threshold="1.00"))
        assert registry.stopped_services("acct-a") == {"compute"}
        assert registry.spend_allowed("acct-a", "security-agent")
        assert not registry.spend_allowed("acct-a", "compute")

    def test_unknown_account_records_none_and_alerts(self, harness):
        _, _, store, enforcer, alerts = harness
        records = enforcer.process(make_message(account_id="acct-ghost"))
        assert records[0].action_taken == EnforcementAction.NONE
        assert records[0].note == "unknown account"
        warnings = [a for a in alerts.all_alerts() if a.severity == Severity.WARNING]
        assert any("unknown" in a.body for a in warnings)

    def test_redelivery_dedup_by_key(self, harness):
        _, _, store, enforcer, _ = harness
        message = make_message(threshold="1.00")
        enforcer.process(message)
        again = enforcer.process(message)  # crash redelivery
        assert again == []
        assert len(store.records()) == 1

    def test_cost_center_target_fans_out(self, harness):
        registry, _, store, enforcer, _ = harness
        records = enforcer.process(make_message(account_id="cc-1", threshold="1.10"))
        assert {r.account_id for r in records} == {"acct-a", "acct-b"}
        assert registry.status("acct-a") == AccountStatus.SUSPENDED
        assert registry.status("acct-b") == AccountStatus.SUSPENDED

    def test_drain_processes_in_enqueue_order(self, harness):
        registry, queue, store, enforcer, _ = harness
        for i in range(5):
            registry.register(f"acct-x{i}")
            queue.enqueue(make_message(account_id=f"acct-x{i}", threshold="0.90"))
        assert enforcer.drain() == 5
        assert [r.account_id for r in store.records()] == [f"acct-x{i}" for i in range(5)]
        assert len(queue) == 0

    def test_applied_actions_equal_non_none_records(self, harness):
        registry, _, store, enforcer, _ = harness
        enforcer.process(make_message(threshold="0.90"))
        enforcer.process(make_message(threshold="1.00"))
        enforcer.process(make_message(account_id="acct-ghost", threshold="1.00"))
        applied = [r for r in store.records() if r.action_taken != EnforcementAction.NONE]
        warned_or_stopped = [
            s for s in (registry.status("acct-a"),) if s != AccountStatus.ACTIVE
        ]
        assert len(applied) == 2
        assert warned_or_stopped  # the state actually moved


class TestReinstate:
    def test_reinstate_suspended_account(self, harness):
        registry, _, store, enforcer, _ = harness
        enforcer.process(make_message(threshold="1.10"))
        record = enforcer.reinstate("acct-a", "reviewed by finance")
        assert record.action_taken == EnforcementAction.NONE
        assert record.resulting_state == AccountStatus.ACTIVE
        assert registry.status("acct-a") == AccountStatus.ACTIVE
        assert registry.stopped_services("acct-a") == set()

    def test_reinstate_active_account_still_audited(self, harness):
        registry, _, store, enforcer, _ = harness
        before = len(store.records())
        enforcer.reinstate("acct-a", "no-op check")
        assert registry.status("acct-a") == AccountStatus.ACTIVE
        assert len(store.records()) == before + 1

    def test_reinstate_unknown_account_errors(self, harness):
        _, _, _, enforcer, _ = harness
        with pytest.raises(UnknownAccountError):
            enforcer.reinstate("acct-ghost", "oops")


class TestRollover:
    def test_restricted_resets_suspended_stays(self, harness):
        registry, _, _, enforcer, _ = harness
        enforcer.process(make_message(account_id="acct-a", threshold="1.00"))
        enforcer.process(make_message(account_id="acct-b", threshold="1.10"))
        assert enforcer.rollover("acct-a", "2025-01") is not None
        assert enforcer.rollover("acct-b", "2025-01") is None
        assert registry.status("acct-a") == AccountStatus.ACTIVE
        assert registry.status("acct-b") == AccountStatus.SUSPENDED

    def test_rollover_is_once_per_period(self, harness):
        registry, _, store, enforcer, _ = harness
        enforcer.process(make_message(threshold="0.90"))
        assert enforcer.rollover("acct-a", "2025-01") is not None
        # state may change again, but the same period label never resets twice
        enforcer.process(make_message(threshold="0.95", spend="108000.00"))
        assert enforcer.rollover("acct-a", "2025-01") is None


class TestBreachStore:
    def test_empty_store(self, tmp_path):
        assert BreachStore(tmp_path / "b.log").records() == []

    def test_filter_by_account_and_action(self, harness):
        _, _, store, enforcer, _ = harness
        enforcer.process(make_message(account_id="acct-a", threshold="0.90"))
        enforcer.process(make_message(account_id="acct-b", threshold="1.00"))
        assert {r.account_id for r in store.query(account_id="acct-a")} == {"acct-a"}
        stops = store.query(action=EnforcementAction.STOP_SERVICES)
        assert [r.account_id for r in stops] == ["acct-b"]
        assert store.query(period_label="2025-01", offset=1, limit=1)[0].account_id == "acct-b"

    def test_roundtrip_through_disk(self, tmp_path, harness):
        registry, _, store, enforcer, _ = harness
        enforcer.process(make_message(threshold="1.00"))
        original = store.records()
        reopened = BreachStore(store._log.path)
        assert reopened.records() == original

    def test_state_replay_from_store(self, tmp_path, clock, harness):
        registry, queue, store, enforcer, alerts = harness
        enforcer.process(make_message(threshold="1.00"))
        # fresh registry + enforcer over the same files, as after a restart
        registry2 = AccountRegistry(store._log.path.parent / "accounts.json", clock)
        enforcer2 = Enforcer(
            MessageQueue(store._log.path.parent / "queue.journal"),
            BreachStore(store._log.path),
            registry2,
            alerts,
            clock=clock,
        )
        enforcer2.replay_state()
        assert registry2.status("acct-a") == AccountStatus.RESTRICTED
        assert registry2.stopped_services("acct-a") == {"compute", "storage", "logging"}
