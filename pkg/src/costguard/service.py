"""Service core: the file-backed stores and the wiring of all subsystems.

Everything the service knows lives under one data directory:

    budgets.json        versioned budget store (atomic snapshot)
    accounts.json       static account registry (atomic snapshot)
    billing.log         ingested records, append-only (the chargeback source)
    breaches.log        breach/audit records, append-only, fsynced
    alerts.log          dashboard notification store, append-only
    dead_letter.log     failed alert deliveries
    queue.journal       enforcement queue write-ahead journal
    monitor_state.log   fired (budget, period, threshold) triples
    gate_decisions.log  append-only deployment gate decision log

A clean restart replays the logs and reconstructs identical in-memory state.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable

from .accounts import AccountRegistry
from .alerts import AlertEngine, SinkKind
from .budget import BudgetSpec, ComputedBudget, compute_budget
from .clock import Clock, SimClock, parse_rfc3339
from .config import ServiceConfig
from .enforce import BreachStore, Enforcer, MessageQueue
from .feed import ParsedLine
from .gate import DeploymentPlan, GateDecision, PolicyGate
from .ledger import BillingLedger, IngestReport
from .model import BillingRecord, BudgetPeriod
from .monitor import Monitor, SweepOutcome
from .storage import atomic_write_json, read_json
from .wire import budget_spec_from_wire, computed_budget_from_wire, computed_budget_to_wire


@dataclass(frozen=True)
class StoreLayout:
    root: Path

    @property
    def budgets(self) -> Path:
        return self.root / "budgets.json"

    @property
    def accounts(self) -> Path:
        return self.root / "accounts.json"

    @property
    def billing_log(self) -> Path:
        return self.root / "billing.log"

    @property
    def breaches(self) -> Path:
        return self.root / "breaches.log"

    @property
    def alerts(self) -> Path:
        return self.root / "alerts.log"

    @property
    def dead_letter(self) -> Path:
        return self.root / "dead_letter.log"

    @property
    def queue_journal(self) -> Path:
        return self.root / "queue.journal"

    @property
    def monitor_state(self) -> Path:
        return self.root / "monitor_state.log"

    @property
    def gate_decisions(self) -> Path:
        return self.root / "gate_decisions.log"


class VersionConflictError(Exception):
    """Optimistic concurrency: the caller's version is stale."""


class UnknownBudgetError(KeyError):
    pass


@dataclass(frozen=True)
class StoredBudget:
    budget_id: str
    version: int
    computed: ComputedBudget


class BudgetStore:
    """Versioned budget specs with their computed results; snapshot persisted atomically."""

    def __init__(self, path: Path, clock: Clock) -> None:
        self._path = path
        self._clock = clock
        self._lock = threading.RLock()
        self._budgets: dict[str, StoredBudget] = {}
        for entry in read_json(path, default=[]) or []:
            stored = StoredBudget(
                budget_id=entry["budget_id"],
                version=int(entry["version"]),
                computed=computed_budget_from_wire(entry),
            )
            self._budgets[stored.budget_id] = stored

    def put(self, budget_id: str, spec: BudgetSpec, expected_version: int | None = None) -> StoredBudget:
        """Create or update; raises VersionConflictError when the caller is stale."""
        with self._lock:
            current = self._budgets.get(budget_id)
            if expected_version is not None:
                current_version = current.version if current else 0
                if expected_version != current_version:
                    raise VersionConflictError(
                        f"budget {budget_id} is at version {current_version}, caller expected {expected_version}"
                    )
            computed = compute_budget(spec, self._clock.now())
            stored = StoredBudget(
                budget_id=budget_id,
                version=(current.version if current else 0) + 1,
                computed=computed,
            )
            self._budgets[budget_id] = stored
            self._persist()
            return stored

    def get(self, budget_id: str) -> StoredBudget:
        with self._lock:
            if budget_id not in self._budgets:
                raise UnknownBudgetError(budget_id)
            return self._budgets[budget_id]

    def all(self) -> list[StoredBudget]:
        with self._lock:
            return [self._budgets[k] for k in sorted(self._budgets)]

    def find_for_target(self, target_id: str, now: datetime) -> StoredBudget | None:
        """The budget whose period contains now for this target, if any."""
        with self._lock:
            candidates = [
                b
                for b in self._budgets.values()
                if b.computed.spec.target_id == target_id and b.computed.spec.period.contains(now)
            ]
        if not candidates:
            return None
        return sorted(candidates, key=lambda b: b.budget_id)[0]

    def _persist(self) -> None:
        payload = [
            computed_budget_to_wire(b.budget_id, b.version, b.computed)
            for _, b in sorted(self._budgets.items())
        ]
        atomic_write_json(self._path, payload)


class AppCore:
    """Composition root: builds every subsystem over one data directory."""

    def __init__(self, config: ServiceConfig, clock: Clock | None = None) -> None:
        self.config = config
        if clock is None:
            if config.simulated_time:
                start = parse_rfc3339(config.sim_start) if config.sim_start else None
                if start is None:
                    raise ValueError("simulated_time requires sim_start")
                clock = SimClock(start)
            else:
                clock = Clock()
        self.clock = clock
        self.layout = StoreLayout(Path(config.data_dir))
        self.layout.root.mkdir(parents=True, exist_ok=True)

        self.registry = AccountRegistry(self.layout.accounts, clock)
        self.registry.register_all(
            [
                (a.account_id, a.display_name, a.cost_center_id, a.provider)
                for a in config.accounts
            ]
        )

        sinks = tuple(s for s in config.sinks if s.kind is not SinkKind.DASHBOARD_STORE)
        self.alerts = AlertEngine(
            store_path=self.layout.alerts,
            dead_letter_path=self.layout.dead_letter,
            clock=clock,
            sinks=sinks,
        )
        self.breaches = BreachStore(self.layout.breaches)
        self.queue = MessageQueue(self.layout.queue_journal, capacity=config.queue_capacity)
        self.enforcer = Enforcer(
            queue=self.queue,
            store=self.breaches,
            registry=self.registry,
            alerts=self.alerts,
            policy=config.policy,
            clock=clock,
        )
        self.enforcer.replay_state()

        self.ledger = BillingLedger(
            self.layout.billing_log,
            account_to_center=self.registry.account_to_center(),
            rules=config.attribution_rules,
            known_account=self.registry.is_known,
            on_record=self._observe_record,
        )
        self.budgets = BudgetStore(self.layout.budgets, clock)
        self.monitor = Monitor(
            budgets=self.budgets,
            ledger=self.ledger,
            registry=self.registry,
            queue=self.queue,
            alerts=self.alerts,
            enforcer=self.enforcer,
            state_path=self.layout.monitor_state,
            clock=clock,
            enforcement_floor=config.enforcement_floor,
        )
        self.gate = PolicyGate(
            budgets=self.budgets,
            ledger=self.ledger,
            registry=self.registry,
            decision_log_path=self.layout.gate_decisions,
            clock=clock,
        )

    def _observe_record(self, record: BillingRecord) -> None:
        self.registry.observe_service(record.account_id, record.service_name)

    # --- operations -------------------------------------------------------------

    def put_budget(self, budget_id: str, spec_wire: dict, expected_version: int | None = None) -> StoredBudget:
        spec = budget_spec_from_wire(spec_wire, default_thresholds=self.config.default_thresholds)
        return self.budgets.put(budget_id, spec, expected_version)

    def ingest(self, items: Iterable[ParsedLine]) -> IngestReport:
        return self.ledger.ingest(items)

    def sweep(self) -> SweepOutcome:
        return self.monitor.sweep()

    def drain(self) -> int:
        return self.enforcer.drain()

    def whatif(self, spec_wire: dict) -> ComputedBudget:
        """Pure budget computation for the interactive calculator; nothing persisted."""
        spec = budget_spec_from_wire(spec_wire, default_thresholds=self.config.default_thresholds)
        return compute_budget(spec, self.clock.now())

    def check_plan(self, plan: DeploymentPlan) -> GateDecision:
        return self.gate.evaluate_plan(plan)

    def reinstate(self, account_id: str, reason: str):
        return self.enforcer.reinstate(account_id, reason)

    def chargeback(self, period: BudgetPeriod) -> list[dict]:
        return self.ledger.chargeback(period)

    def account_spend_summary(self, account_id: str) -> list[dict]:
        """Cumulative spend vs budget for every budget covering this account now."""
        now = self.clock.now()
        center = None
        if self.registry.is_known(account_id):
            center = self.registry.get(account_id).cost_center_id
        rows = []
        for stored in self.budgets.all():
            target = stored.computed.spec.target_id
            if target not in (account_id, center):
                continue
            period = stored.computed.spec.period
            if not period.contains(now):
                continue
            spend = self.monitor.spend_for_target(target, period, as_of=now)
            rows.append(
                {
                    "budget_id": stored.budget_id,
                    "period": period.label,
                    "crb": stored.computed.crb,
                    "spend": spend,
                }
            )
        return rows

    def spend_allowed(self, account_id: str, service_name: str) -> bool:
        return self.registry.spend_allowed(account_id, service_name)

    def close(self) -> None:
        self.monitor.close()
        self.gate.close()
        self.breaches.close()
        self.queue.close()
        self.alerts.close()
        self.ledger.close()


def build_core(config: ServiceConfig, clock: Clock | None = None) -> AppCore:
    return AppCore(config, clock)
