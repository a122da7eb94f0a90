/** Dashboard entry point: wires the views to the API client. */

import { ApiClient } from './api.js';
import { curveGeometry } from './chart.js';
import { submitBudget } from './editor.js';
import { formatMoney, formatThreshold } from './money.js';
import { AlertFeed, startPolling } from './poll.js';
import { fetchCurve, type CurvePoint } from './whatif.js';
import type { BudgetFormModel } from './validate.js';
import type { AccountWire, AlertWire } from './types.js';

const token = sessionStorage.getItem('costguard_token');
const api = new ApiClient('', token);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function text(value: string): Text {
  return document.createTextNode(value);
}

// --- tabs ------------------------------------------------------------------

for (const button of document.querySelectorAll<HTMLButtonElement>('nav button')) {
  button.addEventListener('click', () => {
    for (const section of document.querySelectorAll<HTMLElement>('main > section')) {
      section.hidden = section.id !== button.dataset.target;
    }
    for (const other of document.querySelectorAll('nav button')) {
      other.classList.toggle('active', other === button);
    }
  });
}

// --- budget editor -----------------------------------------------------------

function readForm(): BudgetFormModel {
  return {
    budgetId: el<HTMLInputElement>('f-budget-id').value,
    targetId: el<HTMLInputElement>('f-target').value,
    period: el<HTMLInputElement>('f-period').value,
    historical: el<HTMLTextAreaElement>('f-historical').value,
    growthPercent: el<HTMLInputElement>('f-growth').value,
    controlPercent: el<HTMLInputElement>('f-control').value,
    variabilityMode: el<HTMLSelectElement>('f-vmode').value as 'explicit' | 'computed',
    variabilityPercent: el<HTMLInputElement>('f-variability').value,
    availableBudget: el<HTMLInputElement>('f-available').value,
  };
}

let knownVersion: number | undefined;

async function onSubmitBudget(event: Event): Promise<void> {
  event.preventDefault();
  const banner = el<HTMLDivElement>('editor-banner');
  const result = el<HTMLDivElement>('editor-result');
  banner.textContent = '';
  banner.className = 'banner';
  for (const span of document.querySelectorAll<HTMLElement>('.field-error')) {
    span.textContent = '';
  }
  const outcome = await submitBudget(api, readForm(), knownVersion);
  if (outcome.kind === 'invalid') {
    for (const [field, message] of Object.entries(outcome.errors)) {
      const slot = document.getElementById(`err-${field}`);
      if (slot) slot.textContent = message;
    }
    return;
  }
  if (outcome.kind === 'conflict') {
    banner.textContent = `Edit conflict: ${outcome.message}. Reload the budget and retry.`;
    banner.classList.add('error');
    knownVersion = undefined;
    return;
  }
  if (outcome.kind === 'error') {
    banner.textContent = `HTTP ${outcome.status}: ${outcome.message}`;
    banner.classList.add('error');
    return;
  }
  knownVersion = outcome.view.version;
  result.replaceChildren(
    row('Cloud resource budget', outcome.view.crb),
    row('Adjusted spend', outcome.view.adjustedSpend),
    row('Variability used', outcome.view.variabilityUsed),
    ...outcome.view.warnings.map((w) => row('Warning', w)),
    row('Version', String(outcome.view.version)),
  );
  void refreshBudgets();
}

function row(label: string, value: string): HTMLDivElement {
  const div = document.createElement('div');
  const b = document.createElement('b');
  b.append(text(`${label}: `));
  div.append(b, text(value));
  return div;
}

el<HTMLFormElement>('budget-form').addEventListener('submit', (e) => void onSubmitBudget(e));
el<HTMLSelectElement>('f-vmode').addEventListener('change', () => {
  el<HTMLInputElement>('f-variability').disabled = el<HTMLSelectElement>('f-vmode').value !== 'explicit';
});

async function refreshBudgets(): Promise<void> {
  const tbody = el<HTMLTableSectionElement>('budget-rows');
  try {
    const { budgets } = await api.listBudgets();
    tbody.replaceChildren(
      ...budgets.map((b) => {
        const tr = document.createElement('tr');
        for (const cell of [
          b.budget_id,
          b.spec.target_id,
          b.spec.period,
          formatMoney(b.adjusted_spend),
          formatMoney(b.crb),
          b.variability_used,
          String(b.version),
        ]) {
          const td = document.createElement('td');
          td.append(text(cell));
          tr.append(td);
        }
        return tr;
      }),
    );
  } catch {
    // list stays stale on transient errors
  }
}

// --- what-if explorer ------------------------------------------------------------

async function redrawCurve(): Promise<void> {
  const stale = el<HTMLDivElement>('whatif-banner');
  const maxControl = Number(el<HTMLInputElement>('w-control').value);
  const vPercent = Number(el<HTMLInputElement>('w-variability').value);
  el<HTMLSpanElement>('w-control-value').textContent = `${maxControl}%`;
  el<HTMLSpanElement>('w-variability-value').textContent = `${vPercent}%`;
  try {
    const points = await fetchCurve(api, {
      historical: el<HTMLInputElement>('w-historical').value,
      growthFactor: (Number(el<HTMLInputElement>('w-growth').value) / 100).toString(),
      availableBudget: el<HTMLInputElement>('w-available').value,
      variability: (vPercent / 100).toString(),
      maxControlPercent: maxControl,
      stepPercent: maxControl >= 20 ? 5 : 1,
    });
    stale.textContent = '';
    renderCurve(points);
  } catch (error) {
    stale.textContent = `API unavailable; the plotted curve may be stale (${String(error)})`;
  }
}

function renderCurve(points: CurvePoint[]): void {
  const svg = el<HTMLElement>('whatif-chart');
  const geom = curveGeometry(points);
  const ns = 'http://www.w3.org/2000/svg';
  svg.setAttribute('viewBox', `0 0 ${geom.width} ${geom.height}`);
  svg.replaceChildren();
  const path = document.createElementNS(ns, 'path');
  path.setAttribute('d', geom.path);
  path.setAttribute('class', 'curve');
  svg.append(path);
  for (const marker of geom.markers) {
    const dot = document.createElementNS(ns, 'circle');
    dot.setAttribute('cx', marker.x.toFixed(1));
    dot.setAttribute('cy', marker.y.toFixed(1));
    dot.setAttribute('r', '3.5');
    const title = document.createElementNS(ns, 'title');
    title.append(text(formatMoney(marker.label)));
    dot.append(title);
    svg.append(dot);
  }
  for (const tick of geom.xTicks) {
    const label = document.createElementNS(ns, 'text');
    label.setAttribute('x', tick.x.toFixed(1));
    label.setAttribute('y', String(geom.height - 8));
    label.setAttribute('class', 'tick');
    label.append(text(tick.label));
    svg.append(label);
  }
  for (const tick of geom.yTicks) {
    const label = document.createElementNS(ns, 'text');
    label.setAttribute('x', '4');
    label.setAttribute('y', tick.y.toFixed(1));
    label.setAttribute('class', 'tick');
    label.append(text(tick.label));
    svg.append(label);
  }
  const table = el<HTMLTableSectionElement>('whatif-rows');
  table.replaceChildren(
    ...points.map((p) => {
      const tr = document.createElement('tr');
      for (const cell of [`${p.controlPercent}%`, formatMoney(p.adjustedSpend), formatMoney(p.crb)]) {
        const td = document.createElement('td');
        td.append(text(cell));
        tr.append(td);
      }
      return tr;
    }),
  );
}

for (const id of ['w-control', 'w-variability', 'w-historical', 'w-growth', 'w-available']) {
  el<HTMLInputElement>(id).addEventListener('change', () => void redrawCurve());
}

// --- alert feed --------------------------------------------------------------------

const feed = new AlertFeed(api);

function renderAlerts(fresh: AlertWire[]): void {
  const list = el<HTMLUListElement>('alert-list');
  el<HTMLParagraphElement>('alerts-empty').hidden = feed.alerts.length > 0;
  for (const alert of fresh) {
    const item = document.createElement('li');
    const badge = document.createElement('span');
    badge.className = `badge ${alert.severity}`;
    badge.append(text(alert.severity));
    item.append(badge, text(` ${alert.created_at} `));
    if (alert.threshold) {
      item.append(text(`[${formatThreshold(alert.threshold)}] `));
    }
    item.append(text(alert.body));
    list.prepend(item);
  }
}

startPolling(feed, renderAlerts);

// --- breaches ---------------------------------------------------------------------------

async function refreshBreaches(): Promise<void> {
  const tbody = el<HTMLTableSectionElement>('breach-rows');
  const account = el<HTMLInputElement>('breach-account').value.trim() || undefined;
  const { breaches } = await api.listBreaches({ account });
  el<HTMLParagraphElement>('breaches-empty').hidden = breaches.length > 0;
  tbody.replaceChildren(
    ...breaches.map((b) => {
      const tr = document.createElement('tr');
      for (const cell of [
        b.recorded_at,
        b.account_id,
        b.period,
        formatThreshold(b.threshold),
        formatMoney(b.spend),
        formatMoney(b.budget),
        b.action_taken,
        b.resulting_state,
      ]) {
        const td = document.createElement('td');
        td.append(text(cell));
        tr.append(td);
      }
      return tr;
    }),
  );
}

el<HTMLButtonElement>('breach-refresh').addEventListener('click', () => void refreshBreaches());

// --- accounts ------------------------------------------------------------------------------

function accountCard(account: AccountWire): HTMLDivElement {
  const card = document.createElement('div');
  card.className = 'card';
  const title = document.createElement('h3');
  const badge = document.createElement('span');
  badge.className = `badge state-${account.state.value.toLowerCase()}`;
  badge.append(text(account.state.value));
  title.append(text(`${account.display_name} `), badge);
  card.append(title);
  const meta = document.createElement('p');
  meta.append(text(`${account.account_id} · ${account.cost_center_id ?? 'no cost center'}`));
  card.append(meta);
  for (const budget of account.budgets) {
    card.append(row(budget.budget_id, `${formatMoney(budget.spend)} of ${formatMoney(budget.crb)} (${budget.period})`));
  }
  if (account.stopped_services.length > 0) {
    card.append(row('Stopped services', account.stopped_services.join(', ')));
  }
  if (account.state.value !== 'Active') {
    const button = document.createElement('button');
    button.append(text('Reinstate'));
    button.addEventListener('click', () => void onReinstate(account.account_id));
    card.append(button);
  }
  return card;
}

async function onReinstate(accountId: string): Promise<void> {
  const reason = window.prompt(`Reinstate ${accountId}? Enter an audit reason:`);
  if (!reason) {
    return;
  }
  const banner = el<HTMLDivElement>('accounts-banner');
  try {
    await api.reinstate(accountId, reason);
    banner.textContent = `${accountId} reinstated.`;
    banner.className = 'banner';
    await refreshAccounts();
  } catch (error) {
    banner.textContent = `Reinstate failed: ${String(error)}`;
    banner.className = 'banner error';
  }
}

async function refreshAccounts(): Promise<void> {
  const host = el<HTMLDivElement>('account-cards');
  const { accounts } = await api.listAccounts();
  el<HTMLParagraphElement>('accounts-empty').hidden = accounts.length > 0;
  host.replaceChildren(...accounts.map(accountCard));
}

el<HTMLButtonElement>('accounts-refresh').addEventListener('click', () => void refreshAccounts());

// --- initial load ------------------------------------------------------------------------------

void refreshBudgets();
void refreshBreaches();
void refreshAccounts();
void redrawCurve();
setInterval(() => void refreshAccounts(), 5000);
