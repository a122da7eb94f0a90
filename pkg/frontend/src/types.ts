/** API wire types. Monetary values are decimal strings with two fraction digits. */

export type Severity = 'info' | 'warning' | 'critical';

export interface VariabilityWire {
  mode: 'explicit' | 'computed_from_historical';
  value?: string;
}

export interface BudgetSpecWire {
  target_id: string;
  period: string;
  historical: string[];
  growth_factor: string;
  cost_control_factor: string;
  variability: VariabilityWire;
  available_budget: string;
  thresholds?: string[];
}

export interface ComputedBudgetWire {
  budget_id: string;
  version: number;
  spec: BudgetSpecWire & { thresholds: string[] };
  adjusted_spend: string;
  crb: string;
  variability_used: string;
  warnings: string[];
  computed_at: string;
}

export interface WhatIfResponse {
  adjusted_spend: string;
  crb: string;
  variability_used: string;
  warnings: string[];
}

export interface AlertWire {
  alert_id: string;
  severity: Severity;
  body: string;
  created_at: string;
  account_id: string | null;
  budget_id: string | null;
  threshold: string | null;
  spend: string | null;
  crb: string | null;
}

export interface AlertsResponse {
  alerts: AlertWire[];
  cursor: number;
}

export interface BreachWire {
  breach_id: string;
  account_id: string;
  service_type: string;
  period: string;
  budget: string;
  spend: string;
  threshold: string;
  action_taken: 'Warn' | 'StopServices' | 'SuspendAccount' | 'None';
  resulting_state: AccountStateValue;
  recorded_at: string;
  note: string;
}

export type AccountStateValue = 'Active' | 'Warned' | 'Restricted' | 'Suspended';

export interface AccountWire {
  account_id: string;
  display_name: string;
  cost_center_id: string | null;
  provider: string;
  state: { value: AccountStateValue; changed_at: string };
  stopped_services: string[];
  budgets: { budget_id: string; period: string; crb: string; spend: string }[];
}

export interface GateDecisionWire {
  plan_id: string;
  verdict: 'Allow' | 'Deny';
  reason: string;
  projected_spend: string;
  remaining_budget: string;
  decided_at: string;
}

export interface ChargebackRowWire {
  cost_center_id: string;
  period: string;
  total: string;
  by_account: Record<string, string>;
}

export interface IngestReportWire {
  accepted: number;
  unattributed: number;
  duplicates: number;
  rejected: number;
}
