/** Typed client for the budget service HTTP API. */

import type {
  AccountWire,
  AlertsResponse,
  BreachWire,
  BudgetSpecWire,
  ChargebackRowWire,
  ComputedBudgetWire,
  GateDecisionWire,
  IngestReportWire,
  WhatIfResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly token: string | null = null,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) {
      headers['Content-Type'] = 'application/json';
    }
    if (this.token) {
      headers['Authorization'] = `Bearer ${this.token}`;
    }
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = await response.json();
        if (payload && typeof payload.detail === 'string') {
          detail = payload.detail;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  whatif(params: { hc: string; g: string; c: string; ab: string; v?: string }): Promise<WhatIfResponse> {
    const query = new URLSearchParams({ hc: params.hc, g: params.g, c: params.c, ab: params.ab });
    if (params.v !== undefined) {
      query.set('v', params.v);
    }
    return this.request('GET', `/whatif?${query.toString()}`);
  }

  putBudget(
    budgetId: string,
    spec: BudgetSpecWire,
    expectedVersion?: number,
  ): Promise<ComputedBudgetWire> {
    const body: Record<string, unknown> = { ...spec };
    if (expectedVersion !== undefined) {
      body['expected_version'] = expectedVersion;
    }
    return this.request('PUT', `/budgets/${encodeURIComponent(budgetId)}`, body);
  }

  listBudgets(): Promise<{ budgets: ComputedBudgetWire[] }> {
    return this.request('GET', '/budgets');
  }

  getAlerts(cursor: number): Promise<AlertsResponse> {
    return this.request('GET', `/alerts?cursor=${cursor}`);
  }

  listBreaches(filters: { account?: string; period?: string } = {}): Promise<{ breaches: BreachWire[] }> {
    const query = new URLSearchParams();
    if (filters.account) query.set('account', filters.account);
    if (filters.period) query.set('period', filters.period);
    const suffix = query.toString() ? `?${query.toString()}` : '';
    return this.request('GET', `/breaches${suffix}`);
  }

  listAccounts(): Promise<{ accounts: AccountWire[] }> {
    return this.request('GET', '/accounts');
  }

  reinstate(accountId: string, reason: string): Promise<BreachWire> {
    return this.request('POST', `/accounts/${encodeURIComponent(accountId)}/reinstate`, { reason });
  }

  checkPlan(plan: unknown): Promise<GateDecisionWire> {
    return this.request('POST', '/plans/check', plan);
  }

  chargeback(period: string): Promise<{ period: string; rows: ChargebackRowWire[] }> {
    return this.request('GET', `/reports/chargeback?period=${encodeURIComponent(period)}`);
  }

  ingest(records: unknown[]): Promise<IngestReportWire> {
    return this.request('POST', '/spend/ingest', { records });
  }

  adminSweep(): Promise<{ events: number }> {
    return this.request('POST', '/admin/sweep');
  }

  adminDrain(): Promise<{ processed: number }> {
    return this.request('POST', '/admin/drain');
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/healthz');
  }
}
