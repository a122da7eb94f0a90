import { describe, expect, it } from 'vitest';

import { validateBudgetForm, type BudgetFormModel } from '../src/validate.js';

function model(overrides: Partial<BudgetFormModel> = {}): BudgetFormModel {
  return {
    budgetId: 'b-demo-2025-01',
    targetId: 'acct-demo',
    period: '2025-01',
    historical: '100000',
    growthPercent: '20',
    controlPercent: '10',
    variabilityMode: 'explicit',
    variabilityPercent: '5',
    availableBudget: '120000',
    ...overrides,
  };
}

describe('validateBudgetForm', () => {
  it('builds the worked-example spec wire', () => {
    const { errors, spec } = validateBudgetForm(model());
    expect(errors).toEqual({});
    expect(spec).toEqual({
      target_id: 'acct-demo',
      period: '2025-01',
      historical: ['100000.00'],
      growth_factor: '0.2',
      cost_control_factor: '0.1',
      variability: { mode: 'explicit', value: '0.05' },
      available_budget: '120000.00',
    });
  });

  it('rejects cost control at or above 100% without building a spec', () => {
    const outcome = validateBudgetForm(model({ controlPercent: '100' }));
    expect(outcome.spec).toBeUndefined();
    expect(outcome.errors['controlPercent']).toMatch(/below 100/);
  });

  it('requires a variability value in explicit mode only', () => {
    const explicit = validateBudgetForm(model({ variabilityPercent: '' }));
    expect(explicit.errors['variabilityPercent']).toBeTruthy();
    const computed = validateBudgetForm(model({ variabilityMode: 'computed', variabilityPercent: '' }));
    expect(computed.errors).toEqual({});
    expect(computed.spec?.variability).toEqual({ mode: 'computed_from_historical' });
  });

  it('accepts multi-entry history with mixed separators', () => {
    const { spec } = validateBudgetForm(model({ historical: '100, 200\n300' }));
    expect(spec?.historical).toEqual(['100.00', '200.00', '300.00']);
  });

  it('collects every field error, not just the first', () => {
    const outcome = validateBudgetForm(
      model({ budgetId: '', period: 'January', historical: '', availableBudget: '-5' }),
    );
    expect(Object.keys(outcome.errors).sort()).toEqual([
      'availableBudget',
      'budgetId',
      'historical',
      'period',
    ]);
  });

  it('rejects negative growth below -100%', () => {
    expect(validateBudgetForm(model({ growthPercent: '-150' })).errors['growthPercent']).toBeTruthy();
    expect(validateBudgetForm(model({ growthPercent: '-50' })).errors).toEqual({});
  });
});
