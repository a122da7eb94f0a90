"""Spend monitor: threshold crossing detection, breach context evaluation, sweeps.

Threshold checks are pure; the sweep persists the fired set (append-only,
fsynced) only after the enforcement message is journaled and the alert is in
the dashboard store, so a crash can re-deliver but never lose an event.
Redelivered messages are deduplicated by the enforcer.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable

from .alerts import AlertEngine, severity_for_threshold
from .budget import ComputedBudget
from .clock import Clock
from .enforce import Enforcer, MessageQueue
from .events import ALL_SERVICES, CostEvaluationReport, EnforcementMessage, ThresholdEvent
from .ledger import BillingLedger
from .model import BudgetPeriod, Money
from .storage import AppendLog

logger = logging.getLogger(__name__)

DEFAULT_ENFORCEMENT_FLOOR = Decimal("0.90")
ANOMALY_Z_LIMIT = Decimal("3.0")
_ENQUEUE_BACKOFFS = (0.05, 0.2, 0.8)


def check_thresholds(
    budget_id: str,
    computed: ComputedBudget,
    spend: Money,
    already_fired: Iterable[Decimal],
    now: datetime,
) -> list[ThresholdEvent]:
    """All newly crossed thresholds, ascending. Pure; the caller persists the fired set.

    Negative cumulative spend (net credits) clamps to zero. A zero budget is
    degenerate: every configured threshold fires once.
    """
    clamped = spend if spend >= Money.zero() else Money.zero()
    fired = set(already_fired)
    crb_cents = computed.crb.amount_minor
    events = []
    for threshold in computed.spec.thresholds:
        if threshold in fired:
            continue
        if Fraction(clamped.amount_minor) >= Fraction(threshold) * crb_cents:
            events.append(
                ThresholdEvent(
                    budget_id=budget_id,
                    threshold=threshold,
                    spend_at_crossing=clamped,
                    crb=computed.crb,
                    occurred_at=now,
                )
            )
    return events


def z_score(observation: Money, history: list[Money]) -> Decimal:
    """Observation's distance from the history mean in sample standard deviations.

    A flat history makes any deviation infinitely surprising (Decimal infinity).
    """
    if len(history) < 2:
        raise ValueError("z-score needs at least 2 historical observations")
    cents = [h.amount_minor for h in history]
    mean = Fraction(sum(cents), len(cents))
    var = sum((Fraction(c) - mean) ** 2 for c in cents) / (len(cents) - 1)
    diff = Fraction(observation.amount_minor) - mean
    if var == 0:
        if diff == 0:
            return Decimal(0)
        return Decimal("Infinity") if diff > 0 else Decimal("-Infinity")
    with localcontext() as ctx:
        ctx.prec = 30
        stddev = (Decimal(var.numerator) / Decimal(var.denominator)).sqrt()
        return (Decimal(diff.numerator) / Decimal(diff.denominator)) / stddev


# Anomaly detectors look at (today's spend, trailing daily history) and return a
# surprise score; the default is the z-score rule with a 3.0 cut. Learned
# detectors can be swapped in without touching the evaluation pipeline.
AnomalyDetector = Callable[[Money, "list[Money]"], Decimal]


def evaluate_spend(
    ledger: BillingLedger,
    account_id: str,
    period: BudgetPeriod,
    crb: Money,
    now: datetime,
    detector: AnomalyDetector = z_score,
    detector_limit: Decimal = ANOMALY_Z_LIMIT,
) -> CostEvaluationReport:
    """Breach context: top services by spend, burn rate, per-service anomalies."""
    aggregate = ledger.aggregate(account_id, period, as_of=now)
    positive_total = sum(
        max(m.amount_minor, 0) for m in aggregate.by_service.values()
    ) + max(aggregate.unattributed.amount_minor, 0)
    ranked = sorted(aggregate.by_service.items(), key=lambda kv: (-kv[1].amount_minor, kv[0]))
    top = []
    for name, amount in ranked[:5]:
        if positive_total > 0 and amount.amount_minor > 0:
            share = _fraction_to_decimal(Fraction(amount.amount_minor, positive_total))
        else:
            share = Decimal(0)
        top.append((name, amount, share))

    burn_rate = None
    elapsed = period.elapsed_days(now)
    if elapsed > 0 and crb.amount_minor > 0:
        rate = (
            Fraction(aggregate.total.amount_minor) / elapsed
        ) / Fraction(crb.amount_minor, period.total_days)
        burn_rate = _fraction_to_decimal(rate)

    anomalies = []
    today = now.date()
    for name in sorted(aggregate.by_service):
        daily = ledger.service_daily_spend(account_id, name, period)
        observation = daily.get(today)
        if observation is None:
            continue
        history = [amount for day, amount in daily.items() if day < today]
        if len(history) < 2:
            continue
        score = detector(observation, history)
        if score > detector_limit:
            anomalies.append((name, score))

    return CostEvaluationReport(
        account_id=account_id,
        period=period,
        top_services=tuple(top),
        burn_rate=burn_rate,
        anomalies=tuple(anomalies),
    )


def _fraction_to_decimal(value: Fraction) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 30
        return Decimal(value.numerator) / Decimal(value.denominator)


class FiredState:
    """Persisted (budget, period, threshold) triples that already fired."""

    def __init__(self, path: Path) -> None:
        self._log = AppendLog(path)
        self._fired: dict[tuple[str, str], set[Decimal]] = {}
        for line in self._log.lines():
            entry = json.loads(line)
            self._remember(entry["budget_id"], entry["period"], Decimal(entry["threshold"]))

    def fired(self, budget_id: str, period_label: str) -> set[Decimal]:
        return set(self._fired.get((budget_id, period_label), set()))

    def mark(self, budget_id: str, period_label: str, threshold: Decimal) -> None:
        self._log.append(
            json.dumps(
                {"budget_id": budget_id, "period": period_label, "threshold": str(threshold)},
                sort_keys=True,
            )
        )
        self._remember(budget_id, period_label, threshold)

    def _remember(self, budget_id: str, period_label: str, threshold: Decimal) -> None:
        self._fired.setdefault((budget_id, period_label), set()).add(threshold)

    def close(self) -> None:
        self._log.close()


@dataclass(frozen=True)
class SweepOutcome:
    events: int = 0
    enqueued: int = 0
    rollovers: int = 0
    deferred: int = 0  # queue-full; will retry next sweep


class Monitor:
    """One logical evaluator per budget, swept periodically."""

    def __init__(
        self,
        budgets,  # BudgetStore; duck-typed to avoid an import cycle with service wiring
        ledger: BillingLedger,
        registry,
        queue: MessageQueue,
        alerts: AlertEngine,
        enforcer: Enforcer,
        state_path: Path,
        clock: Clock,
        enforcement_floor: Decimal = DEFAULT_ENFORCEMENT_FLOOR,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        self.budgets = budgets
        self.ledger = ledger
        self.registry = registry
        self.queue = queue
        self.alerts = alerts
        self.enforcer = enforcer
        self.state = FiredState(state_path)
        self.clock = clock
        self.enforcement_floor = enforcement_floor
        self._sleeper = sleeper
        self._lock = threading.Lock()

    def spend_for_target(
        self, target_id: str, period: BudgetPeriod, as_of: datetime | None = None
    ) -> Money:
        """Cumulative period spend dated up to as_of (day-granular cutoff)."""
        if self.registry.is_known(target_id):
            return self.ledger.cumulative_spend(target_id, period, as_of=as_of)
        return self.ledger.center_spend(target_id, period, as_of=as_of)

    def sweep(self) -> SweepOutcome:
        """Evaluate every budget once; emits alerts and enqueues enforcement work."""
        with self._lock:
            now = self.clock.now()
            events = enqueued = rollovers = deferred = 0
            for stored in self.budgets.all():
                outcome = self._sweep_budget(stored, now)
                events += outcome.events
                enqueued += outcome.enqueued
                rollovers += outcome.rollovers
                deferred += outcome.deferred
            return SweepOutcome(events, enqueued, rollovers, deferred)

    def _sweep_budget(self, stored, now: datetime) -> SweepOutcome:
        computed: ComputedBudget = stored.computed
        period = computed.spec.period
        target = computed.spec.target_id
        spend = self.spend_for_target(target, period, as_of=now)
        fired = self.state.fired(stored.budget_id, period.label)
        events = check_thresholds(stored.budget_id, computed, spend, fired, now)
        enqueued = deferred = 0
        for event in events:
            if event.threshold >= self.enforcement_floor:
                if not self._enqueue(target, event, period, now):
                    deferred += len(events) - events.index(event)
                    break  # keep this and higher thresholds unfired; retried next sweep
                enqueued += 1
            self._alert(target, event)
            self.state.mark(stored.budget_id, period.label, event.threshold)

        rollovers = 0
        if now >= period.end:
            for account_id in self.registry.enforcement_targets(target):
                if self.enforcer.rollover(account_id, period.label) is not None:
                    rollovers += 1
        return SweepOutcome(len(events) - deferred, enqueued, rollovers, deferred)

    def _enqueue(self, target: str, event: ThresholdEvent, period: BudgetPeriod, now: datetime) -> bool:
        report = self._report_for(target, period, event.crb, now)
        message = EnforcementMessage(
            account_id=target,
            service_type=ALL_SERVICES,
            budget=event.crb,
            spend=event.spend_at_crossing,
            threshold=event.threshold,
            report=report,
        )
        for backoff in (*_ENQUEUE_BACKOFFS, None):
            if self.queue.enqueue(message):
                return True
            if backoff is None:
                break
            self._sleeper(backoff)
        logger.warning("queue full; deferring threshold %s for %s", event.threshold, target)
        return False

    def _report_for(self, target: str, period: BudgetPeriod, crb: Money, now: datetime) -> CostEvaluationReport:
        if self.registry.is_known(target):
            return evaluate_spend(self.ledger, target, period, crb, now)
        # cost-center target: context aggregated over members is out of desk scope,
        # ship an empty report with the period attached
        return CostEvaluationReport(
            account_id=target, period=period, top_services=(), burn_rate=None, anomalies=()
        )

    def _alert(self, target: str, event: ThresholdEvent) -> None:
        severity = severity_for_threshold(event.threshold)
        pct = (event.threshold * 100).quantize(Decimal("1"))
        self.alerts.emit(
            severity,
            f"budget {event.budget_id} crossed {pct}% of {event.crb.pretty()} "
            f"(spend {event.spend_at_crossing.pretty()})",
            account_id=target,
            budget_id=event.budget_id,
            threshold=event.threshold,
            spend=event.spend_at_crossing,
            crb=event.crb,
        )

    def run(self, stop: threading.Event, interval_seconds: float) -> None:
        """Periodic sweep loop for service mode."""
        while not stop.is_set():
            try:
                self.sweep()
            except Exception:
                logger.exception("monitor sweep failed")
            stop.wait(interval_seconds)

    def close(self) -> None:
        self.state.close()
