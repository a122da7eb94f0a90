"""Sequential budget enforcement: durable FIFO queue, policy table, breach audit store.

The queue journal and the breach store are both append-only fsynced files.
A message is acknowledged only after its breach record is durable, and
records are deduplicated by (account, period, threshold), so a crash at any
point yields neither duplicates nor gaps after restart.

Queue journal format, one entry per line, tab-separated:

    ENQ <seq> <payload-json> <crc32>
    ACK <seq> - <crc32>

with the checksum computed over the first three columns. Breach store
format, one record per line, tab-separated columns in this order:

    breach_id account_id service_type period budget spend threshold
    action_taken resulting_state recorded_at note
"""

from __future__ import annotations

import threading
import zlib
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import Iterator

from .accounts import AccountRegistry
from .alerts import AlertEngine, Severity
from .clock import Clock, parse_rfc3339, rfc3339
from .events import ALL_SERVICES, EnforcementMessage
from .model import AccountStatus, Money
from .storage import AppendLog

DEFAULT_QUEUE_CAPACITY = 10_000


class EnforcementAction(str, Enum):
    WARN = "Warn"
    STOP_SERVICES = "StopServices"
    SUSPEND_ACCOUNT = "SuspendAccount"
    NONE = "None"


_ACTION_TARGET_STATUS = {
    EnforcementAction.WARN: AccountStatus.WARNED,
    EnforcementAction.STOP_SERVICES: AccountStatus.RESTRICTED,
    EnforcementAction.SUSPEND_ACCOUNT: AccountStatus.SUSPENDED,
}


@dataclass(frozen=True)
class PolicyRule:
    at: Decimal
    action: EnforcementAction


@dataclass(frozen=True)
class EnforcementPolicy:
    """Threshold-class to action mapping, ordered by severity, plus exemptions."""

    rules: tuple[PolicyRule, ...]
    exempt_services: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        previous_at = Decimal("-1")
        previous_severity = -1
        for rule in self.rules:
            if rule.at <= previous_at:
                raise ValueError("policy rules must have strictly ascending thresholds")
            severity = _ACTION_TARGET_STATUS[rule.action].severity
            if severity < previous_severity:
                raise ValueError("policy actions must not decrease in severity")
            previous_at, previous_severity = rule.at, severity

    @classmethod
    def default(cls) -> EnforcementPolicy:
        return cls(
            rules=(
                PolicyRule(Decimal("0.90"), EnforcementAction.WARN),
                PolicyRule(Decimal("1.00"), EnforcementAction.STOP_SERVICES),
                PolicyRule(Decimal("1.10"), EnforcementAction.SUSPEND_ACCOUNT),
            )
        )

    def action_for(self, threshold: Decimal) -> EnforcementAction:
        chosen = EnforcementAction.NONE
        for rule in self.rules:
            if threshold >= rule.at:
                chosen = rule.action
        return chosen


@dataclass(frozen=True)
class BreachRecord:
    breach_id: str
    account_id: str
    service_type: str
    period_label: str
    budget: Money
    spend: Money
    threshold: Decimal
    action_taken: EnforcementAction
    resulting_state: AccountStatus
    recorded_at: datetime
    note: str = ""

    def to_line(self) -> str:
        fields = (
            self.breach_id,
            self.account_id,
            self.service_type,
            self.period_label,
            self.budget.dollars(),
            self.spend.dollars(),
            str(self.threshold),
            self.action_taken.value,
            self.resulting_state.value,
            rfc3339(self.recorded_at),
            self.note,
        )
        for value in fields:
            if "\t" in value or "\n" in value:
                raise ValueError("breach record fields must not contain tabs or newlines")
        return "\t".join(fields)

    @classmethod
    def from_line(cls, line: str) -> BreachRecord:
        parts = line.split("\t")
        if len(parts) != 11:
            raise ValueError(f"breach record line must have 11 columns, got {len(parts)}")
        return cls(
            breach_id=parts[0],
            account_id=parts[1],
            service_type=parts[2],
            period_label=parts[3],
            budget=Money.from_dollars(parts[4]),
            spend=Money.from_dollars(parts[5]),
            threshold=Decimal(parts[6]),
            action_taken=EnforcementAction(parts[7]),
            resulting_state=AccountStatus(parts[8]),
            recorded_at=parse_rfc3339(parts[9]),
            note=parts[10],
        )


def breach_key(account_id: str, period_label: str, threshold: Decimal) -> str:
    return f"{account_id}:{period_label}:{threshold}"


class BreachStore:
    """Append-only audit store; records are never mutated or deleted."""

    def __init__(self, path: Path) -> None:
        self._log = AppendLog(path)
        self._lock = threading.Lock()
        self._records: list[BreachRecord] = [BreachRecord.from_line(line) for line in self._log.lines()]
        self._ids = {record.breach_id for record in self._records}

    def exists(self, breach_id: str) -> bool:
        with self._lock:
            return breach_id in self._ids

    def append(self, record: BreachRecord) -> None:
        with self._lock:
            if record.breach_id in self._ids:
                raise ValueError(f"duplicate breach record: {record.breach_id}")
            self._log.append(record.to_line())
            self._records.append(record)
            self._ids.add(record.breach_id)

    def records(self) -> list[BreachRecord]:
        with self._lock:
            return list(self._records)

    def query(
        self,
        account_id: str | None = None,
        period_label: str | None = None,
        action: EnforcementAction | None = None,
        offset: int = 0,
        limit: int | None = None,
    ) -> list[BreachRecord]:
        """Records in recorded order with stable offset/limit pagination."""
        with self._lock:
            matched = [
                r
                for r in self._records
                if (account_id is None or r.account_id == account_id)
                and (period_label is None or r.period_label == period_label)
                and (action is None or r.action_taken == action)
            ]
        if offset:
            matched = matched[offset:]
        if limit is not None:
            matched = matched[:limit]
        return matched

    def count_reinstatements(self, account_id: str) -> int:
        with self._lock:
            return sum(1 for r in self._records if r.breach_id.startswith(f"reinstate:{account_id}:"))

    def close(self) -> None:
        self._log.close()


class MessageQueue:
    """Durable bounded FIFO with many producers and a single consumer.

    Entries are journaled (fsync) before enqueue returns; consumers peek the
    head and acknowledge only after processing, so unacknowledged messages
    survive a restart and are redelivered.
    """

    def __init__(self, journal_path: Path, capacity: int = DEFAULT_QUEUE_CAPACITY) -> None:
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._log = AppendLog(journal_path)
        self._cond = threading.Condition()
        self._next_seq = 1
        self._pending: dict[int, EnforcementMessage] = {}
        for kind, seq, payload in self._replay():
            self._next_seq = max(self._next_seq, seq + 1)
            if kind == "ENQ":
                self._pending[seq] = EnforcementMessage.from_json(payload)
            else:
                self._pending.pop(seq, None)

    def _replay(self) -> Iterator[tuple[str, int, str]]:
        for line in self._log.lines():
            parts = line.split("\t")
            if len(parts) != 4:
                break  # torn tail from a crash
            kind, seq_text, payload, checksum = parts
            if _crc(kind, seq_text, payload) != checksum:
                break
            yield kind, int(seq_text), payload

    def enqueue(self, message: EnforcementMessage) -> bool:
        """Journal and enqueue; False means the queue is full, retry later."""
        with self._cond:
            if len(self._pending) >= self.capacity:
                return False
            seq = self._next_seq
            self._next_seq += 1
            payload = message.to_json()
            self._log.append(_entry("ENQ", seq, payload))
            self._pending[seq] = message
            self._cond.notify()
            return True

    def peek(self, timeout: float | None = None) -> tuple[int, EnforcementMessage] | None:
        """Head of the queue without removing it; None on timeout/empty."""
        with self._cond:
            if not self._pending and timeout:
                self._cond.wait(timeout)
            if not self._pending:
                return None
            seq = min(self._pending)
            return seq, self._pending[seq]

    def ack(self, seq: int) -> None:
        """Remove a processed message; called only after its outcome is durable."""
        with self._cond:
            if seq not in self._pending:
                raise ValueError(f"cannot ack unknown sequence {seq}")
            self._log.append(_entry("ACK", seq, "-"))
            del self._pending[seq]

    def __len__(self) -> int:
        with self._cond:
            return len(self._pending)

    def pending_sequences(self) -> list[int]:
        with self._cond:
            return sorted(self._pending)

    def close(self) -> None:
        self._log.close()


def _crc(kind: str, seq_text: str, payload: str) -> str:
    body = "\t".join((kind, seq_text, payload))
    return f"{zlib.crc32(body.encode('utf-8')):08x}"


def _entry(kind: str, seq: int, payload: str) -> str:
    seq_text = str(seq)
    return "\t".join((kind, seq_text, payload, _crc(kind, seq_text, payload)))


class Enforcer:
    """Single consumer applying policy actions and writing the audit trail."""

    def __init__(
        self,
        queue: MessageQueue,
        store: BreachStore,
        registry: AccountRegistry,
        alerts: AlertEngine,
        policy: EnforcementPolicy | None = None,
        clock: Clock | None = None,
    ) -> None:
        self.queue = queue
        self.store = store
        self.registry = registry
        self.alerts = alerts
        self.policy = policy or EnforcementPolicy.default()
        self.clock = clock or Clock()
        # single-consumer invariant even when a drain call races the consumer loop
        self._consume_lock = threading.Lock()

    def replay_state(self) -> None:
        """Rebuild account status and stopped services from the breach store."""
        for record in self.store.records():
            self._apply_to_registry(record)

    def _apply_to_registry(self, record: BreachRecord) -> None:
        if not self.registry.is_known(record.account_id):
            return
        self.registry.set_status(record.account_id, record.resulting_state, rfc3339(record.recorded_at))
        if record.action_taken is EnforcementAction.STOP_SERVICES and record.note.startswith("stopped="):
            stopped = [s for s in record.note[len("stopped="):].split(",") if s]
            self.registry.stop_services(record.account_id, stopped)

    # --- consumption -----------------------------------------------------------

    def drain(self) -> int:
        """Process everything currently queued; returns the number of messages."""
        processed = 0
        with self._consume_lock:
            while True:
                head = self.queue.peek()
                if head is None:
                    return processed
                seq, message = head
                self.process(message)
                self.queue.ack(seq)
                processed += 1

    def run(self, stop: threading.Event, poll_seconds: float = 0.2) -> None:
        """Consumer loop for service mode; drains remaining work before exiting."""
        while not stop.is_set():
            head = self.queue.peek(timeout=poll_seconds)
            if head is None:
                continue
            with self._consume_lock:
                head = self.queue.peek()
                if head is None:
                    continue
                seq, message = head
                self.process(message)
                self.queue.ack(seq)
        self.drain()

    def process(self, message: EnforcementMessage) -> list[BreachRecord]:
        """Apply the policy to one message; idempotent under redelivery."""
        period_label = message.period.label
        targets = self.registry.enforcement_targets(message.account_id)
        records: list[BreachRecord] = []
        if not targets:
            record = self._record_unknown(message, period_label)
            if record is not None:
                records.append(record)
            return records
        for account_id in targets:
            key = breach_key(account_id, period_label, message.threshold)
            if self.store.exists(key):
                continue  # redelivered after a crash; already enforced
            records.append(self._enforce_one(account_id, key, message, period_label))
        return records

    def _enforce_one(
        self, account_id: str, key: str, message: EnforcementMessage, period_label: str
    ) -> BreachRecord:
        action = self.policy.action_for(message.threshold)
        current = self.registry.status(account_id)
        note = ""
        if action is EnforcementAction.NONE:
            resulting = current
        else:
            target_status = _ACTION_TARGET_STATUS[action]
            if target_status.severity <= current.severity:
                action = EnforcementAction.NONE  # never downgrade within a period
                resulting = current
            else:
                resulting = target_status
                if action is EnforcementAction.STOP_SERVICES:
                    note = "stopped=" + ",".join(sorted(self._stoppable(account_id, message.service_type)))
        record = BreachRecord(
            breach_id=key,
            account_id=account_id,
            service_type=message.service_type,
            period_label=period_label,
            budget=message.budget,
            spend=message.spend,
            threshold=message.threshold,
            action_taken=action,
            resulting_state=resulting,
            recorded_at=self.clock.now(),
            note=note,
        )
        self.store.append(record)  # durable commit point for the transition
        self._apply_to_registry(record)
        self._alert_outcome(record)
        return record

    def _stoppable(self, account_id: str, service_type: str) -> set[str]:
        if service_type == ALL_SERVICES:
            candidates = self.registry.services_seen(account_id)
        else:
            candidates = {service_type}
        return candidates - set(self.policy.exempt_services)

    def _record_unknown(self, message: EnforcementMessage, period_label: str) -> BreachRecord | None:
        key = breach_key(message.account_id, period_label, message.threshold)
        if self.store.exists(key):
            return None
        record = BreachRecord(
            breach_id=key,
            account_id=message.account_id,
            service_type=message.service_type,
            period_label=period_label,
            budget=message.budget,
            spend=message.spend,
            threshold=message.threshold,
            action_taken=EnforcementAction.NONE,
            resulting_state=AccountStatus.ACTIVE,
            recorded_at=self.clock.now(),
            note="unknown account",
        )
        self.store.append(record)
        self.alerts.emit(
            Severity.WARNING,
            f"enforcement target {message.account_id} is unknown; operator attention required",
            account_id=message.account_id,
            threshold=message.threshold,
            spend=message.spend,
            crb=message.budget,
        )
        return record

    def _alert_outcome(self, record: BreachRecord) -> None:
        if record.action_taken is EnforcementAction.NONE:
            severity = Severity.INFO
            summary = f"no action for {record.account_id} (state {record.resulting_state.value})"
        else:
            severity = Severity.CRITICAL
            summary = (
                f"{record.action_taken.value} applied to {record.account_id}; "
                f"state now {record.resulting_state.value}"
            )
        self.alerts.emit(
            severity,
            summary,
            account_id=record.account_id,
            threshold=record.threshold,
            spend=record.spend,
            crb=record.budget,
        )

    # --- operator paths ----------------------------------------------------------

    def reinstate(self, account_id: str, reason: str) -> BreachRecord:
        """Reset an account to Active with an audit record; idempotent by intent."""
        status = self.registry.status(account_id)  # raises for unknown accounts
        seq = self.store.count_reinstatements(account_id) + 1
        record = BreachRecord(
            breach_id=f"reinstate:{account_id}:{seq}",
            account_id=account_id,
            service_type=ALL_SERVICES,
            period_label="-",
            budget=Money.zero(),
            spend=Money.zero(),
            threshold=Decimal(0),
            action_taken=EnforcementAction.NONE,
            resulting_state=AccountStatus.ACTIVE,
            recorded_at=self.clock.now(),
            note=f"reinstated (was {status.value}): {reason}",
        )
        self.store.append(record)
        self._apply_to_registry(record)
        self.alerts.emit(
            Severity.INFO,
            f"account {account_id} reinstated: {reason}",
            account_id=account_id,
        )
        return record

    def rollover(self, account_id: str, period_label: str) -> BreachRecord | None:
        """Period boundary reset: Warned/Restricted go back to Active, Suspended stays."""
        key = f"rollover:{account_id}:{period_label}"
        if self.store.exists(key):
            return None
        status = self.registry.status(account_id)
        if status not in (AccountStatus.WARNED, AccountStatus.RESTRICTED):
            return None
        record = BreachRecord(
            breach_id=key,
            account_id=account_id,
            service_type=ALL_SERVICES,
            period_label=period_label,
            budget=Money.zero(),
            spend=Money.zero(),
            threshold=Decimal(0),
            action_taken=EnforcementAction.NONE,
            resulting_state=AccountStatus.ACTIVE,
            recorded_at=self.clock.now(),
            note=f"period rollover (was {status.value})",
        )
        self.store.append(record)
        self._apply_to_registry(record)
        self.alerts.emit(
            Severity.INFO,
            f"account {account_id} reset to Active at {period_label} rollover",
            account_id=account_id,
        )
        return record
