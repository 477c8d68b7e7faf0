/**
 * Benchmark report grid: one row per (k-shot, difficulty band) with totals
 * and performance, plus a drill-down listing every failed case with its
 * failure reason and strict-match diff text.
 */

import type { BenchReportRecord, CaseOutcome } from './types.js';
import { escapeHtml } from './render.js';

export function formatRate(rate: number): string {
  const text = rate.toFixed(2).replace(/\.?0+$/, '');
  return `${text}%`;
}

function drilldown(outcomes: CaseOutcome[], k: number, band: string): string {
  const upper = Number(band.includes('-') ? band.split('-')[1] : band);
  const failed = outcomes.filter(
    (o) => !o.success && o.k_shot === k && o.difficulty <= upper,
  );
  if (failed.length === 0) return '';
  const items = failed
    .map(
      (o) =>
        `<li class="failed-case"><code>${escapeHtml(o.case_id)}</code> ` +
        `<span class="reason">${escapeHtml(o.reason)}</span>` +
        `<pre class="diff">${escapeHtml(o.detail)}</pre></li>`,
    )
    .join('');
  return (
    `<details class="drilldown"><summary>${failed.length} failed</summary>` +
    `<ul>${items}</ul></details>`
  );
}

export function renderBenchGrid(record: BenchReportRecord): string {
  if (record.status === 'running') {
    return `<section class="bench-report running">report running…</section>`;
  }
  if (record.status === 'failed' || !record.report) {
    return (
      `<section class="bench-report failed">benchmark failed: ` +
      `${escapeHtml(record.error)}</section>`
    );
  }
  const report = record.report;
  const rows = report.rows
    .map(
      (r) =>
        `<tr class="bench-row" data-k="${r.k_shot}" data-band="${escapeHtml(r.band)}">` +
        `<td>${r.k_shot}-shot</td><td>${escapeHtml(r.band)}</td>` +
        `<td>${r.total}</td><td>${r.success}</td><td>${r.failed}</td>` +
        `<td class="rate">${formatRate(r.rate)}</td>` +
        `<td>${drilldown(report.outcomes, r.k_shot, r.band)}</td></tr>`,
    )
    .join('');
  const incomplete = report.incomplete
    ? `<div class="incomplete">INCOMPLETE: ${escapeHtml(report.error)}</div>`
    : '';
  return (
    `<section class="bench-report"><table class="bench-grid"><thead><tr>` +
    `<th># Examples</th><th>Task Difficulty</th><th># Total Tasks</th>` +
    `<th># Success</th><th># Failed</th><th>Performance</th><th></th>` +
    `</tr></thead><tbody>${rows}</tbody></table>${incomplete}</section>`
  );
}
