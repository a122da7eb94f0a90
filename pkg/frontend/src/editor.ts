/** Budget editor controller: validate, submit, shape the result for display. */

import { ApiError, type ApiClient } from './api.js';
import { formatMoney } from './money.js';
import { validateBudgetForm, type BudgetFormModel } from './validate.js';
import type { ComputedBudgetWire } from './types.js';

export interface BudgetResultView {
  budgetId: string;
  version: number;
  crb: string;
  adjustedSpend: string;
  variabilityUsed: string;
  warnings: string[];
}

export type SubmitOutcome =
  | { kind: 'invalid'; errors: Record<string, string> }
  | { kind: 'conflict'; message: string }
  | { kind: 'error'; status: number; message: string }
  | { kind: 'saved'; view: BudgetResultView };

/** Every displayed figure is formatted verbatim from the API response. */
export function buildResultView(response: ComputedBudgetWire): BudgetResultView {
  return {
    budgetId: response.budget_id,
    version: response.version,
    crb: formatMoney(response.crb),
    adjustedSpend: formatMoney(response.adjusted_spend),
    variabilityUsed: response.variability_used,
    warnings: response.warnings,
  };
}

export async function submitBudget(
  api: ApiClient,
  model: BudgetFormModel,
  expectedVersion?: number,
): Promise<SubmitOutcome> {
  const { errors, spec } = validateBudgetForm(model);
  if (!spec) {
    return { kind: 'invalid', errors }; // no request is sent
  }
  try {
    const response = await api.putBudget(model.budgetId.trim(), spec, expectedVersion);
    return { kind: 'saved', view: buildResultView(response) };
  } catch (error) {
    if (error instanceof ApiError) {
      if (error.status === 409) {
        return { kind: 'conflict', message: error.detail };
      }
      return { kind: 'error', status: error.status, message: error.detail };
    }
    throw error;
  }
}
