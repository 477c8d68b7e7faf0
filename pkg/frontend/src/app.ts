/**
 * Browser wiring: a chat column of (question, run panel) turns over the run
 * history, plus a benchmark tab. All state lives on the server; this module
 * only maps records to DOM. Reloading the page rebuilds every view from
 * `GET /v1/runs`, so nothing is lost when the browser goes away.
 */

import { ApiClient, canSubmit } from './api.js';
import { renderPlanTrace } from './trace.js';
import {
  initialTableState,
  renderResultTable,
  setPage,
  TableViewState,
  toggleSort,
} from './table.js';
import { renderBenchGrid } from './benchview.js';
import { escapeHtml } from './render.js';
import type { RunRecord } from './types.js';

const api = new ApiClient(window.location.origin.replace(/\/$/, ''));
const tableStates = new Map<string, TableViewState>();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderRunPanel(run: RunRecord): string {
  let body = renderPlanTrace(run);
  if (run.status === 'done' && run.result) {
    const state = tableStates.get(run.run_id) ?? initialTableState();
    tableStates.set(run.run_id, state);
    body += renderResultTable(run.result, state, api.resultCsvUrl(run.run_id));
  }
  return body;
}

function turnElement(run: RunRecord): HTMLElement {
  let panel = document.getElementById(`run-${run.run_id}`);
  if (!panel) {
    panel = document.createElement('article');
    panel.id = `run-${run.run_id}`;
    panel.className = 'turn';
    el('conversation').prepend(panel);
  }
  panel.innerHTML =
    `<div class="question">${escapeHtml(run.question)}</div>` +
    `<div class="run-panel" data-run="${run.run_id}">${renderRunPanel(run)}</div>`;
  wireTableControls(panel, run);
  return panel;
}

function wireTableControls(panel: HTMLElement, run: RunRecord): void {
  if (!run.result) return;
  panel.querySelectorAll<HTMLElement>('th.sortable').forEach((th) => {
    th.addEventListener('click', () => {
      const col = Number(th.dataset.col);
      const state = tableStates.get(run.run_id) ?? initialTableState();
      tableStates.set(run.run_id, toggleSort(state, col));
      turnElement(run);
    });
  });
  panel.querySelectorAll<HTMLButtonElement>('.pager button').forEach((btn) => {
    btn.addEventListener('click', () => {
      const state = tableStates.get(run.run_id) ?? initialTableState();
      tableStates.set(run.run_id, setPage(state, Number(btn.dataset.page)));
      turnElement(run);
    });
  });
}

function setError(message: string, retry?: () => void): void {
  const box = el('error-box');
  if (!message) {
    box.innerHTML = '';
    return;
  }
  box.innerHTML =
    `<span>${escapeHtml(message)}</span>` +
    (retry ? `<button id="retry-btn">retry</button>` : '');
  if (retry) {
    el('retry-btn').addEventListener('click', () => {
      setError('');
      retry();
    });
  }
}

async function refreshDatasets(): Promise<void> {
  const select = el<HTMLSelectElement>('dataset-select');
  const datasets = await api.listDatasets();
  select.innerHTML = datasets
    .map(
      (d) =>
        `<option value="${escapeHtml(d.dataset_id)}">` +
        `${escapeHtml(d.dataset_id.slice(0, 10))} (${d.rows} rows)</option>`,
    )
    .join('');
  updateSubmitState();
}

function updateSubmitState(): void {
  const select = el<HTMLSelectElement>('dataset-select');
  const input = el<HTMLInputElement>('question-input');
  el<HTMLButtonElement>('submit-btn').disabled = !canSubmit(
    select.value || null,
    input.value,
  );
}

async function submitCurrentQuestion(): Promise<void> {
  const select = el<HTMLSelectElement>('dataset-select');
  const input = el<HTMLInputElement>('question-input');
  if (!canSubmit(select.value || null, input.value)) return;
  const question = input.value.trim();
  input.value = '';
  updateSubmitState();
  try {
    const created = await api.submitQuestion(select.value, question);
    turnElement(created);
    await api.pollRun(created.run_id, (run) => turnElement(run));
  } catch (err) {
    setError(`submit failed: ${String(err)}`, () => {
      input.value = question;
      updateSubmitState();
    });
  }
}

async function runBenchmark(): Promise<void> {
  const grid = el('bench-grid');
  grid.innerHTML = 'starting…';
  try {
    const reportId = await api.runBench('shipped', [0, 1, 2, 3]);
    await api.pollBenchReport(reportId, (record) => {
      grid.innerHTML = renderBenchGrid(record);
    });
  } catch (err) {
    setError(`benchmark failed: ${String(err)}`);
  }
}

async function restoreHistory(): Promise<void> {
  const runs = await api.listRuns();
  for (const run of [...runs].reverse()) {
    turnElement(run);
    if (run.status === 'planning' || run.status === 'executing') {
      void api.pollRun(run.run_id, (updated) => turnElement(updated));
    }
  }
}

export function start(): void {
  el('question-input').addEventListener('input', updateSubmitState);
  el('dataset-select').addEventListener('change', updateSubmitState);
  el('submit-btn').addEventListener('click', () => void submitCurrentQuestion());
  el<HTMLInputElement>('question-input').addEventListener('keydown', (ev) => {
    if (ev.key === 'Enter') void submitCurrentQuestion();
  });
  el('bench-btn').addEventListener('click', () => void runBenchmark());
  void (async () => {
    if (!(await api.health())) {
      setError('server unreachable', () => start());
      return;
    }
    await refreshDatasets();
    await restoreHistory();
  })();
}

if (typeof document !== 'undefined' && document.getElementById('conversation')) {
  start();
}
