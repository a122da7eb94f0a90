"""Deterministic end-to-end simulation: generate spend, ingest, sweep, enforce.

The loop is day by day: ingest the day's synthetic records (the simulated
provider produces nothing for stopped services or suspended accounts), run a
monitor sweep at end of day, then drain the enforcement queue. Every step is
idempotent, so re-running the same simulation over the same data directory
(for example after a crash) converges on the same stores.

COSTGUARD_CRASH_AT_STEP=<n> hard-kills the process (os._exit) at pipeline
step n; it exists so restart-safety tests can interrupt a run at arbitrary
points without cooperating shutdown.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path

from .clock import SimClock
from .feed import FeedConfig, generate_day
from .ledger import IngestReport
from .model import Provider
from .service import AppCore

ENV_CRASH_AT_STEP = "COSTGUARD_CRASH_AT_STEP"


class _CrashHook:
    """Counts pipeline steps and hard-exits at the configured one."""

    def __init__(self) -> None:
        raw = os.environ.get(ENV_CRASH_AT_STEP, "")
        self._crash_at = int(raw) if raw else None
        self.steps = 0

    def step(self) -> None:
        self.steps += 1
        if self._crash_at is not None and self.steps == self._crash_at:
            os._exit(137)  # simulated hard crash: no flushing, no cleanup


@dataclass
class SimSummary:
    days: int = 0
    generated: int = 0
    blocked: int = 0
    report: IngestReport = field(default_factory=IngestReport)
    events: int = 0
    enqueued: int = 0
    breaches: int = 0
    alerts: int = 0
    steps: int = 0
    final_states: dict[str, str] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [
            f"days simulated: {self.days}",
            f"records generated: {self.generated}",
            f"records accepted: {self.report.accepted} "
            f"(unattributed {self.report.unattributed}, duplicates {self.report.duplicates}, "
            f"rejected {self.report.rejected}, blocked by enforcement {self.blocked})",
            f"threshold events: {self.events} (enqueued for enforcement: {self.enqueued})",
            f"breach records: {self.breaches}",
            f"alerts: {self.alerts}",
            f"pipeline steps: {self.steps}",
        ]
        for account, state in sorted(self.final_states.items()):
            out.append(f"account {account}: {state}")
        return out


def load_budget_entries(path: Path) -> list[tuple[str, dict]]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = raw["budgets"] if isinstance(raw, dict) else raw
    return [(entry["budget_id"], entry["spec"]) for entry in entries]


def install_budgets(core: AppCore, entries: list[tuple[str, dict]]) -> int:
    """Create budgets that do not exist yet; re-runs leave existing ones untouched."""
    installed = 0
    existing = {b.budget_id for b in core.budgets.all()}
    for budget_id, spec_wire in entries:
        if budget_id in existing:
            continue
        core.put_budget(budget_id, spec_wire)
        installed += 1
    return installed


def run_simulation(
    core: AppCore,
    feed: FeedConfig,
    budgets: list[tuple[str, dict]] | None = None,
) -> SimSummary:
    clock = core.clock
    if not isinstance(clock, SimClock):
        raise ValueError("simulation requires a simulated-time core")
    hook = _CrashHook()
    summary = SimSummary(days=feed.duration_days)

    clock.set(feed.start)
    if budgets:
        install_budgets(core, budgets)
    core.registry.register_all(
        [
            (a.account_id, "", None, Provider.SIMULATED)
            for a in feed.accounts
            if not core.registry.is_known(a.account_id)
        ]
    )

    for day in range(feed.duration_days):
        day_start = feed.start + timedelta(days=day)
        clock.set(day_start)
        day_report = IngestReport()
        for account in feed.accounts:
            for record in generate_day(feed, account, day):
                summary.generated += 1
                if not core.spend_allowed(record.account_id, record.service_name):
                    summary.blocked += 1  # the provider runs nothing that was stopped
                else:
                    day_report = day_report.merged(core.ingest([record]))
                hook.step()
        summary.report = summary.report.merged(day_report)

        clock.set(day_start + timedelta(days=1) - timedelta(seconds=1))
        outcome = core.sweep()
        summary.events += outcome.events
        summary.enqueued += outcome.enqueued
        hook.step()
        core.drain()
        hook.step()

    clock.set(feed.start + timedelta(days=feed.duration_days))
    final = core.sweep()  # catches rollover when the feed runs to the period edge
    summary.events += final.events
    core.drain()

    summary.breaches = len(core.breaches.records())
    summary.alerts = len(core.alerts.all_alerts())
    summary.steps = hook.steps
    summary.final_states = {
        account_id: core.registry.status(account_id).value for account_id in core.registry.account_ids()
    }
    return summary
