/** Client-side validation of the budget form. Mirrors the server's invariants
 * for instant feedback; the server stays authoritative. */

import { parseMoneyInput } from './money.js';
import type { BudgetSpecWire } from './types.js';

export interface BudgetFormModel {
  budgetId: string;
  targetId: string;
  period: string;
  /** comma- or newline-separated dollar amounts */
  historical: string;
  /** percent, e.g. "20" for 20% growth */
  growthPercent: string;
  /** percent in [0, 100) */
  controlPercent: string;
  variabilityMode: 'explicit' | 'computed';
  /** percent, required in explicit mode */
  variabilityPercent: string;
  availableBudget: string;
}

export interface ValidationOutcome {
  errors: Record<string, string>;
  spec?: BudgetSpecWire;
}

const PERIOD_RE = /^\d{4}-(0[1-9]|1[0-2])$|^\d{4}-Q[1-4]$/;

function percentToFactor(raw: string): string | null {
  const cleaned = raw.trim().replace(/%$/, '');
  if (!/^-?\d+(\.\d+)?$/.test(cleaned)) {
    return null;
  }
  return (Number(cleaned) / 100).toString();
}

export function validateBudgetForm(model: BudgetFormModel): ValidationOutcome {
  const errors: Record<string, string> = {};

  if (!model.budgetId.trim()) {
    errors['budgetId'] = 'budget id is required';
  }
  if (!model.targetId.trim()) {
    errors['targetId'] = 'target account or cost center is required';
  }
  if (!PERIOD_RE.test(model.period.trim())) {
    errors['period'] = 'period must look like 2025-01 or 2025-Q1';
  }

  const historical: string[] = [];
  const parts = model.historical.split(/[\n,]/).map((p) => p.trim()).filter(Boolean);
  if (parts.length === 0) {
    errors['historical'] = 'at least one historical spend value is required';
  }
  for (const part of parts) {
    const wire = parseMoneyInput(part);
    if (wire === null) {
      errors['historical'] = `not a dollar amount: ${part}`;
      break;
    }
    historical.push(wire);
  }

  const growth = percentToFactor(model.growthPercent);
  if (growth === null || Number(growth) < -1) {
    errors['growthPercent'] = 'growth must be a percentage of -100% or more';
  }

  const control = percentToFactor(model.controlPercent);
  if (control === null || Number(control) < 0 || Number(control) >= 1) {
    errors['controlPercent'] = 'cost control must be at least 0% and below 100%';
  }

  let variability: BudgetSpecWire['variability'] = { mode: 'computed_from_historical' };
  if (model.variabilityMode === 'explicit') {
    const value = percentToFactor(model.variabilityPercent);
    if (value === null || Number(value) < 0) {
      errors['variabilityPercent'] = 'variability must be a percentage of 0% or more';
    } else {
      variability = { mode: 'explicit', value };
    }
  }

  const available = parseMoneyInput(model.availableBudget);
  if (available === null || available.startsWith('-')) {
    errors['availableBudget'] = 'available budget must be a non-negative dollar amount';
  }

  if (Object.keys(errors).length > 0) {
    return { errors };
  }
  return {
    errors,
    spec: {
      target_id: model.targetId.trim(),
      period: model.period.trim(),
      historical,
      growth_factor: growth!,
      cost_control_factor: control!,
      variability,
      available_budget: available!,
    },
  };
}
