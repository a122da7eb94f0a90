"""Command line interface: serve the API, compute budgets, ingest feeds, simulate."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .clock import SimClock
from .config import ServiceConfig, load_config
from .feed import FeedConfig, read_feed
from .gate import PlanParseError, load_plan
from .model import BudgetPeriod
from .service import AppCore
from .sim import load_budget_entries, run_simulation
from .wire import (
    WireError,
    breach_to_wire,
    budget_spec_from_wire,
    chargeback_rows_to_wire,
    gate_decision_to_wire,
    ingest_report_to_wire,
)

ENV_PORT = "COSTGUARD_PORT"


def _load_config(config_path: str | None, data_dir: str | None) -> ServiceConfig:
    config = load_config(Path(config_path) if config_path else None)
    if data_dir:
        from dataclasses import replace

        config = replace(config, data_dir=Path(data_dir))
    return config


def _fail(message: str, code: int = 1) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Cloud budget computation, spend monitoring, enforcement and alerting."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="Service config file.")
@click.option("--data-dir", default=None, help="Override the data directory.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=None, type=int, help=f"Port (default 8080, env {ENV_PORT}).")
@click.option("--frontend", default=None, type=click.Path(), help="Directory with the built dashboard.")
def serve(config_path, data_dir, host, port, frontend) -> None:
    """Run the HTTP service with background monitoring and enforcement."""
    import uvicorn

    from .api import ServiceWorkers, create_app

    config = _load_config(config_path, data_dir)
    core = AppCore(config)
    frontend_dir = Path(frontend) if frontend else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(core, frontend_dir=frontend_dir)
    workers = ServiceWorkers(core)
    workers.start()
    try:
        uvicorn.run(app, host=host, port=port or int(os.environ.get(ENV_PORT, "8080")), log_level="info")
    finally:
        workers.stop()
        core.close()


@main.command("compute-budget")
@click.argument("spec_file", type=click.Path(exists=True))
def compute_budget_cmd(spec_file) -> None:
    """Compute a budget from a spec file and print the result."""
    from .budget import compute_budget
    from .clock import Clock

    try:
        raw = json.loads(Path(spec_file).read_text(encoding="utf-8"))
        spec = budget_spec_from_wire(raw.get("spec", raw))
    except (json.JSONDecodeError, WireError) as exc:
        _fail(str(exc), code=2)
        return
    computed = compute_budget(spec, Clock().now())
    click.echo(f"target: {spec.target_id} period: {spec.period.label}")
    click.echo(f"adjusted spend: {computed.adjusted_spend.pretty()}")
    click.echo(f"variability used: {computed.variability_used}")
    for warning in computed.warnings:
        click.echo(f"warning: {warning}")
    click.echo(f"CRB: {computed.crb.pretty()}")


@main.command()
@click.argument("feed_file", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None)
def ingest(feed_file, config_path, data_dir) -> None:
    """Ingest a billing feed file into the ledger."""
    core = AppCore(_load_config(config_path, data_dir))
    try:
        report = core.ingest(read_feed(Path(feed_file)))
        click.echo(json.dumps(ingest_report_to_wire(report), indent=2))
    finally:
        core.close()


@main.command()
@click.argument("feedconfig", type=click.Path(exists=True))
@click.option("--budgets", "budgets_file", type=click.Path(exists=True), default=None,
              help="Budget specs to install before the run.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None)
def simulate(feedconfig, budgets_file, config_path, data_dir) -> None:
    """Deterministic end-to-end run: generate, ingest, monitor, enforce."""
    try:
        feed = FeedConfig.from_file(Path(feedconfig))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        _fail(f"bad feed config: {exc}", code=2)
        return
    budgets = load_budget_entries(Path(budgets_file)) if budgets_file else None
    config = _load_config(config_path, data_dir)
    core = AppCore(config, clock=SimClock(feed.start))
    try:
        summary = run_simulation(core, feed, budgets=budgets)
        for line in summary.lines():
            click.echo(line)
    finally:
        core.close()


@main.command("check-plan")
@click.argument("plan_file", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None)
def check_plan(plan_file, config_path, data_dir) -> None:
    """Evaluate a deployment plan; exit 0 = Allow, 1 = Deny, 2 = input error."""
    config = _load_config(config_path, data_dir)
    try:
        plan = load_plan(Path(plan_file), price_table=config.price_table)
    except PlanParseError as exc:
        _fail(str(exc), code=2)
        return
    core = AppCore(config)
    try:
        decision = core.check_plan(plan)
    finally:
        core.close()
    click.echo(json.dumps(gate_decision_to_wire(decision), indent=2))
    sys.exit(0 if decision.verdict == "Allow" else 1)


@main.group()
def breaches() -> None:
    """Inspect the breach audit store."""


@breaches.command("list")
@click.option("--account", default=None)
@click.option("--period", default=None)
@click.option("--action", default=None)
@click.option("--offset", default=0, type=int)
@click.option("--limit", default=100, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None)
def breaches_list(account, period, action, offset, limit, config_path, data_dir) -> None:
    from .enforce import EnforcementAction

    action_filter = None
    if action is not None:
        try:
            action_filter = EnforcementAction(action)
        except ValueError:
            _fail(f"unknown action: {action}", code=2)
            return
    core = AppCore(_load_config(config_path, data_dir))
    try:
        records = core.breaches.query(
            account_id=account, period_label=period, action=action_filter, offset=offset, limit=limit
        )
        click.echo(json.dumps([breach_to_wire(r) for r in records], indent=2))
    finally:
        core.close()


@main.group()
def report() -> None:
    """Reporting commands."""


@report.command()
@click.option("--period", required=True, help="Period label, e.g. 2025-01 or 2025-Q1.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default=None)
def chargeback(period, config_path, data_dir) -> None:
    """Spend per cost center for one period."""
    try:
        parsed = BudgetPeriod.parse_label(period)
    except ValueError as exc:
        _fail(str(exc), code=2)
        return
    core = AppCore(_load_config(config_path, data_dir))
    try:
        rows = core.chargeback(parsed)
        click.echo(json.dumps(chargeback_rows_to_wire(rows), indent=2))
    finally:
        core.close()


if __name__ == "__main__":
    main()
