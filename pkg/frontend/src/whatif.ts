/** What-if explorer model: fetches the budget curve over a cost-control range.
 * Every plotted value is an API response; nothing is computed locally. */

import type { ApiClient } from './api.js';

export interface CurvePoint {
  controlPercent: number;
  crb: string;
  adjustedSpend: string;
}

export interface WhatIfInputs {
  historical: string;
  growthFactor: string;
  availableBudget: string;
  /** decimal factor, e.g. "0.1"; undefined plots the computed-from-history mode */
  variability?: string;
  /** inclusive percent bounds for the cost-control axis */
  maxControlPercent?: number;
  stepPercent?: number;
}

export async function fetchCurve(api: ApiClient, inputs: WhatIfInputs): Promise<CurvePoint[]> {
  const max = inputs.maxControlPercent ?? 30;
  const step = inputs.stepPercent ?? 5;
  const points: CurvePoint[] = [];
  for (let percent = 0; percent <= max; percent += step) {
    const response = await api.whatif({
      hc: inputs.historical,
      g: inputs.growthFactor,
      c: (percent / 100).toString(),
      ab: inputs.availableBudget,
      v: inputs.variability,
    });
    points.push({
      controlPercent: percent,
      crb: response.crb,
      adjustedSpend: response.adjusted_spend,
    });
  }
  return points;
}
