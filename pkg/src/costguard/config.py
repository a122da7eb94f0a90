"""Service configuration: file-based with environment overrides.

The config file is JSON; every key is optional and falls back to a default.
Environment variables COSTGUARD_DATA_DIR, COSTGUARD_TOKEN and
COSTGUARD_SIM_TIME override the file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path

from .alerts import SinkKind, SinkRegistration
from .budget import DEFAULT_THRESHOLDS
from .clock import parse_rfc3339
from .enforce import DEFAULT_QUEUE_CAPACITY, EnforcementAction, EnforcementPolicy, PolicyRule
from .ledger import AttributionRule, CostCenter
from .model import Money, Provider

ENV_DATA_DIR = "COSTGUARD_DATA_DIR"
ENV_TOKEN = "COSTGUARD_TOKEN"
ENV_SIM_TIME = "COSTGUARD_SIM_TIME"


@dataclass(frozen=True)
class AccountConfig:
    account_id: str
    display_name: str = ""
    cost_center_id: str | None = None
    provider: Provider = Provider.SIMULATED


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path = Path("./data")
    bearer_token: str | None = None
    monitor_interval_seconds: float = 30.0
    enforcement_floor: Decimal = Decimal("0.90")
    default_thresholds: tuple[Decimal, ...] = DEFAULT_THRESHOLDS
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY
    policy: EnforcementPolicy = field(default_factory=EnforcementPolicy.default)
    sinks: tuple[SinkRegistration, ...] = (SinkRegistration("console", SinkKind.CONSOLE),)
    cost_centers: tuple[CostCenter, ...] = ()
    accounts: tuple[AccountConfig, ...] = ()
    attribution_rules: tuple[AttributionRule, ...] = ()
    price_table: dict[str, Money] = field(default_factory=dict)
    simulated_time: bool = False
    sim_start: str | None = None  # RFC 3339; used when simulated_time is on

    def with_env_overrides(self) -> ServiceConfig:
        config = self
        if os.environ.get(ENV_DATA_DIR):
            config = replace(config, data_dir=Path(os.environ[ENV_DATA_DIR]))
        if os.environ.get(ENV_TOKEN):
            config = replace(config, bearer_token=os.environ[ENV_TOKEN])
        if os.environ.get(ENV_SIM_TIME):
            config = replace(config, simulated_time=True, sim_start=os.environ[ENV_SIM_TIME])
        return config


def load_config(path: Path | None) -> ServiceConfig:
    if path is None:
        return ServiceConfig().with_env_overrides()
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return parse_config(raw, base_dir=Path(path).parent).with_env_overrides()


def parse_config(raw: dict, base_dir: Path | None = None) -> ServiceConfig:
    defaults = ServiceConfig()
    data_dir = Path(raw.get("data_dir", defaults.data_dir))
    if base_dir is not None and not data_dir.is_absolute():
        data_dir = base_dir / data_dir

    policy = defaults.policy
    if "policy" in raw:
        policy = EnforcementPolicy(
            rules=tuple(
                PolicyRule(Decimal(str(rule["at"])), EnforcementAction(rule["action"]))
                for rule in raw["policy"].get("actions", [])
            )
            or EnforcementPolicy.default().rules,
            exempt_services=frozenset(raw["policy"].get("exempt_services", [])),
        )

    sinks = defaults.sinks
    if "sinks" in raw:
        sinks = tuple(
            SinkRegistration(
                sink_id=s["sink_id"],
                kind=SinkKind(s["kind"]),
                destination=s.get("destination", ""),
                enabled=bool(s.get("enabled", True)),
            )
            for s in raw["sinks"]
        )

    if raw.get("sim_start"):
        parse_rfc3339(raw["sim_start"])  # validate early

    return ServiceConfig(
        data_dir=data_dir,
        bearer_token=raw.get("bearer_token"),
        monitor_interval_seconds=float(raw.get("monitor_interval_seconds", defaults.monitor_interval_seconds)),
        enforcement_floor=Decimal(str(raw.get("enforcement_floor", defaults.enforcement_floor))),
        default_thresholds=tuple(
            Decimal(str(t)) for t in raw.get("default_thresholds", [str(t) for t in DEFAULT_THRESHOLDS])
        ),
        queue_capacity=int(raw.get("queue_capacity", defaults.queue_capacity)),
        policy=policy,
        sinks=sinks,
        cost_centers=tuple(
            CostCenter(c["cost_center_id"], c.get("display_name", c["cost_center_id"]))
            for c in raw.get("cost_centers", [])
        ),
        accounts=tuple(
            AccountConfig(
                account_id=a["account_id"],
                display_name=a.get("display_name", ""),
                cost_center_id=a.get("cost_center_id"),
                provider=Provider(a.get("provider", "simulated")),
            )
            for a in raw.get("accounts", [])
        ),
        attribution_rules=tuple(
            AttributionRule(r["label_key"], r["label_value"], r["cost_center_id"])
            for r in raw.get("attribution_rules", [])
        ),
        price_table={
            name: Money.from_dollars(price) for name, price in raw.get("price_table", {}).items()
        },
        simulated_time=bool(raw.get("simulated_time", False)),
        sim_start=raw.get("sim_start"),
    )
