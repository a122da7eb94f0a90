"""HTTP API: the dashboard's backend and the service's machine interface.

All request and response bodies are JSON with the schemas defined in wire.py;
monetary values are decimal strings with exactly two fraction digits.
Authentication is a single static bearer token when one is configured.
"""

from __future__ import annotations

import threading
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any

from fastapi import Body, Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles

from .accounts import UnknownAccountError
from .enforce import EnforcementAction
from .gate import PlanParseError, parse_plan
from .model import BudgetPeriod
from .service import AppCore, UnknownBudgetError, VersionConflictError
from .wire import (
    WireError,
    account_to_wire,
    alert_to_wire,
    billing_record_from_wire,
    breach_to_wire,
    chargeback_rows_to_wire,
    computed_budget_to_wire,
    gate_decision_to_wire,
    ingest_report_to_wire,
)


def create_app(core: AppCore, frontend_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="costguard", version="0.1.0", docs_url=None, redoc_url=None)
    token = core.config.bearer_token

    def require_auth(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    auth = Depends(require_auth)

    @app.exception_handler(WireError)
    @app.exception_handler(PlanParseError)
    def _bad_request(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(UnknownAccountError)
    @app.exception_handler(UnknownBudgetError)
    def _not_found(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=404, content={"detail": f"unknown id: {exc.args[0]}"})

    @app.exception_handler(VersionConflictError)
    def _conflict(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    def parse_period(label: str) -> BudgetPeriod:
        try:
            return BudgetPeriod.parse_label(label)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    # --- budgets --------------------------------------------------------------

    @app.put("/budgets/{budget_id}", dependencies=[auth])
    def put_budget(budget_id: str, body: dict[str, Any] = Body(...)) -> dict:
        expected = body.get("expected_version")
        if expected is not None and not isinstance(expected, int):
            raise WireError("expected_version must be an integer")
        spec_wire = body.get("spec", body)
        stored = core.put_budget(budget_id, spec_wire, expected_version=expected)
        return computed_budget_to_wire(stored.budget_id, stored.version, stored.computed)

    @app.get("/budgets", dependencies=[auth])
    def list_budgets() -> dict:
        return {
            "budgets": [
                computed_budget_to_wire(b.budget_id, b.version, b.computed) for b in core.budgets.all()
            ]
        }

    @app.get("/budgets/{budget_id}", dependencies=[auth])
    def get_budget(budget_id: str) -> dict:
        stored = core.budgets.get(budget_id)
        return computed_budget_to_wire(stored.budget_id, stored.version, stored.computed)

    # --- spend ------------------------------------------------------------------

    @app.post("/spend/ingest", dependencies=[auth])
    def ingest(body: dict[str, Any] = Body(...)) -> dict:
        raw_records = body.get("records")
        if not isinstance(raw_records, list):
            raise WireError("body must carry a 'records' list")
        parsed = []
        rejected = 0
        for item in raw_records:
            try:
                parsed.append(billing_record_from_wire(item))
            except (WireError, ValueError):
                rejected += 1
        report = core.ingest(parsed)
        wire = ingest_report_to_wire(report)
        wire["rejected"] += rejected
        return wire

    # --- accounts ------------------------------------------------------------------

    def account_payload(account_id: str) -> dict:
        account = core.registry.get(account_id)
        payload = account_to_wire(account, sorted(core.registry.stopped_services(account_id)))
        payload["budgets"] = [
            {
                "budget_id": row["budget_id"],
                "period": row["period"],
                "crb": row["crb"].dollars(),
                "spend": row["spend"].dollars(),
            }
            for row in core.account_spend_summary(account_id)
        ]
        return payload

    @app.get("/accounts", dependencies=[auth])
    def list_accounts() -> dict:
        return {"accounts": [account_payload(a) for a in core.registry.account_ids()]}

    @app.get("/accounts/{account_id}", dependencies=[auth])
    def get_account(account_id: str) -> dict:
        return account_payload(account_id)

    @app.post("/accounts/{account_id}/reinstate", dependencies=[auth])
    def reinstate(account_id: str, body: dict[str, Any] = Body(default={})) -> dict:
        reason = str(body.get("reason", "")).strip()
        if not reason:
            raise WireError("reinstatement requires a reason")
        record = core.reinstate(account_id, reason)
        return breach_to_wire(record)

    # --- breaches and alerts ----------------------------------------------------------

    @app.get("/breaches", dependencies=[auth])
    def list_breaches(
        account: str | None = None,
        period: str | None = None,
        action: str | None = None,
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=500, ge=1, le=5000),
    ) -> dict:
        action_filter = None
        if action is not None:
            try:
                action_filter = EnforcementAction(action)
            except ValueError:
                raise HTTPException(status_code=400, detail=f"unknown action: {action}")
        records = core.breaches.query(
            account_id=account, period_label=period, action=action_filter, offset=offset, limit=limit
        )
        return {"breaches": [breach_to_wire(r) for r in records]}

    @app.get("/alerts", dependencies=[auth])
    def list_alerts(cursor: int = Query(default=0, ge=0)) -> dict:
        alerts, next_cursor = core.alerts.poll(cursor)
        return {"alerts": [alert_to_wire(a) for a in alerts], "cursor": next_cursor}

    # --- plans ------------------------------------------------------------------------

    @app.post("/plans/check", dependencies=[auth])
    def check_plan(body: dict[str, Any] = Body(...)) -> dict:
        plan = parse_plan(body, price_table=core.config.price_table)
        decision = core.check_plan(plan)
        return gate_decision_to_wire(decision)

    # --- reports ------------------------------------------------------------------------

    @app.get("/reports/chargeback", dependencies=[auth])
    def chargeback(period: str) -> dict:
        rows = core.chargeback(parse_period(period))
        return {"period": period, "rows": chargeback_rows_to_wire(rows)}

    @app.get("/whatif", dependencies=[auth])
    def whatif(
        hc: str,
        g: str,
        c: str,
        ab: str,
        v: str | None = None,
        period: str | None = None,
    ) -> dict:
        variability: dict[str, Any] = (
            {"mode": "explicit", "value": v} if v is not None else {"mode": "computed_from_historical"}
        )
        period_label = period or BudgetPeriod.month(core.clock.now().year, core.clock.now().month).label
        computed = core.whatif(
            {
                "target_id": "whatif",
                "period": period_label,
                "historical": [part.strip() for part in hc.split(",") if part.strip()],
                "growth_factor": g,
                "cost_control_factor": c,
                "variability": variability,
                "available_budget": ab,
            }
        )
        return {
            "adjusted_spend": computed.adjusted_spend.dollars(),
            "crb": computed.crb.dollars(),
            "variability_used": str(computed.variability_used),
            "warnings": list(computed.warnings),
        }

    # --- operations -----------------------------------------------------------------------

    @app.post("/admin/sweep", dependencies=[auth])
    def admin_sweep() -> dict:
        outcome = core.sweep()
        if outcome.deferred:
            raise HTTPException(status_code=503, detail="enforcement queue is full; events deferred")
        return {
            "events": outcome.events,
            "enqueued": outcome.enqueued,
            "rollovers": outcome.rollovers,
        }

    @app.post("/admin/drain", dependencies=[auth])
    def admin_drain() -> dict:
        return {"processed": core.drain()}

    @app.post("/admin/simtime/advance", dependencies=[auth])
    def advance_simtime(body: dict[str, Any] = Body(...)) -> dict:
        from .clock import SimClock, rfc3339

        if not isinstance(core.clock, SimClock):
            raise HTTPException(status_code=400, detail="service is not running on simulated time")
        try:
            days = Decimal(str(body.get("days", 0)))
        except InvalidOperation:
            raise HTTPException(status_code=400, detail="days must be a number")
        core.clock.advance_days(float(days))
        return {"now": rfc3339(core.clock.now())}

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "queue_depth": len(core.queue)}

    # --- dashboard static files -----------------------------------------------------------

    if frontend_dir is not None and frontend_dir.exists():
        app.mount("/ui", StaticFiles(directory=frontend_dir, html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index() -> RedirectResponse:
            return RedirectResponse(url="/ui/")

    return app


class ServiceWorkers:
    """Background monitor sweeps and the single queue consumer."""

    def __init__(self, core: AppCore) -> None:
        self.core = core
        self._stop = threading.Event()
        self._threads = [
            threading.Thread(
                target=self.core.monitor.run,
                args=(self._stop, self.core.config.monitor_interval_seconds),
                name="costguard-monitor",
                daemon=True,
            ),
            threading.Thread(
                target=self.core.enforcer.run,
                args=(self._stop,),
                name="costguard-enforcer",
                daemon=True,
            ),
        ]

    def start(self) -> None:
        for thread in self._threads:
            thread.start()

    def stop(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=10)
