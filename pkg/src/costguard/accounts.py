"""Account registry: static org structure plus the enforcement state machine.

The static part (ids, names, cost centers, providers) is snapshotted to
accounts.json. The dynamic part (status, stopped services) is *derived* by
replaying the append-only breach store, so a single fsynced append is the
atomic commit point for every state transition.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Iterable

from .clock import Clock, parse_rfc3339
from .model import Account, AccountState, AccountStatus, Provider
from .storage import atomic_write_json, read_json


class UnknownAccountError(KeyError):
    pass


class AccountRegistry:
    def __init__(self, snapshot_path: Path, clock: Clock) -> None:
        self._path = Path(snapshot_path)
        self._clock = clock
        self._lock = threading.RLock()
        self._static: dict[str, dict] = {}
        self._status: dict[str, AccountStatus] = {}
        self._status_changed: dict[str, str] = {}
        self._stopped: dict[str, set[str]] = {}
        self._services_seen: dict[str, set[str]] = {}
        self._center_members: dict[str, list[str]] = {}
        for entry in read_json(self._path, default=[]) or []:
            self._add_static(entry)

    # --- registration -------------------------------------------------------

    def register(
        self,
        account_id: str,
        display_name: str = "",
        cost_center_id: str | None = None,
        provider: Provider = Provider.SIMULATED,
    ) -> None:
        self.register_all([(account_id, display_name, cost_center_id, provider)])

    def register_all(self, entries: list[tuple[str, str, str | None, Provider]]) -> None:
        """Bulk registration with a single snapshot write."""
        with self._lock:
            changed = False
            for account_id, display_name, cost_center_id, provider in entries:
                entry = {
                    "account_id": account_id,
                    "display_name": display_name or account_id,
                    "cost_center_id": cost_center_id,
                    "provider": provider.value,
                }
                if self._static.get(account_id) == entry:
                    continue
                self._add_static(entry)
                changed = True
            if changed:
                atomic_write_json(self._path, sorted(self._static.values(), key=lambda e: e["account_id"]))

    def _add_static(self, entry: dict) -> None:
        account_id = entry["account_id"]
        previous = self._static.get(account_id)
        if previous and previous.get("cost_center_id"):
            members = self._center_members.get(previous["cost_center_id"], [])
            if account_id in members:
                members.remove(account_id)
        self._static[account_id] = entry
        center = entry.get("cost_center_id")
        if center:
            self._center_members.setdefault(center, [])
            if account_id not in self._center_members[center]:
                self._center_members[center].append(account_id)
        self._status.setdefault(account_id, AccountStatus.ACTIVE)

    # --- lookups --------------------------------------------------------------

    def is_known(self, account_id: str) -> bool:
        with self._lock:
            return account_id in self._static

    def account_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._static)

    def get(self, account_id: str) -> Account:
        with self._lock:
            entry = self._static.get(account_id)
            if entry is None:
                raise UnknownAccountError(account_id)
            changed = self._status_changed.get(account_id)
            return Account(
                account_id=account_id,
                display_name=entry["display_name"],
                cost_center_id=entry.get("cost_center_id"),
                provider=Provider(entry["provider"]),
                state=AccountState(
                    value=self._status[account_id],
                    changed_at=parse_rfc3339(changed) if changed else self._clock.now(),
                ),
            )

    def status(self, account_id: str) -> AccountStatus:
        with self._lock:
            if account_id not in self._static:
                raise UnknownAccountError(account_id)
            return self._status[account_id]

    def account_to_center(self) -> dict[str, str]:
        with self._lock:
            return {
                acct: entry["cost_center_id"]
                for acct, entry in self._static.items()
                if entry.get("cost_center_id")
            }

    def center_members(self, cost_center_id: str) -> list[str]:
        with self._lock:
            return list(self._center_members.get(cost_center_id, []))

    def enforcement_targets(self, target_id: str) -> list[str]:
        """Accounts an enforcement message for this target applies to.

        An account id maps to itself; a cost-center id fans out to its members.
        """
        with self._lock:
            if target_id in self._static:
                return [target_id]
            return list(self._center_members.get(target_id, []))

    # --- dynamic state ----------------------------------------------------------

    def set_status(self, account_id: str, status: AccountStatus, changed_at: str) -> None:
        with self._lock:
            self._status[account_id] = status
            self._status_changed[account_id] = changed_at
            if status is AccountStatus.ACTIVE:
                self._stopped.pop(account_id, None)

    def stop_services(self, account_id: str, services: Iterable[str]) -> None:
        with self._lock:
            self._stopped.setdefault(account_id, set()).update(services)

    def stopped_services(self, account_id: str) -> set[str]:
        with self._lock:
            return set(self._stopped.get(account_id, set()))

    def is_service_stopped(self, account_id: str, service_name: str) -> bool:
        with self._lock:
            return service_name in self._stopped.get(account_id, set())

    def observe_service(self, account_id: str, service_name: str) -> None:
        with self._lock:
            self._services_seen.setdefault(account_id, set()).add(service_name)

    def services_seen(self, account_id: str) -> set[str]:
        with self._lock:
            return set(self._services_seen.get(account_id, set()))

    def spend_allowed(self, account_id: str, service_name: str) -> bool:
        """Whether the simulated provider still runs this service.

        Suspended accounts produce no spend; stopped services produce none either.
        Unknown accounts are allowed (they just land unattributed).
        """
        with self._lock:
            status = self._status.get(account_id)
            if status is AccountStatus.SUSPENDED:
                return False
            return service_name not in self._stopped.get(account_id, set())
