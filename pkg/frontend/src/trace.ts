/**
 * Plan trace panel: the natural-language step renderings (what the run
 * actually executed), the self-consistency vote tally, and any reflection
 * attempts with their validator errors. Raw wire documents hide behind a
 * toggle so domain experts can audit them without cluttering the default
 * view.
 */

import type { RunRecord } from './types.js';
import { escapeHtml, statusBadge } from './render.js';

export function voteBadge(run: RunRecord): string {
  if (!run.decision) return '';
  const { chosen_votes, n_samples } = run.decision;
  return `<span class="vote-badge" title="self-consistency votes">${chosen_votes}/${n_samples}</span>`;
}

export function renderPlanTrace(run: RunRecord): string {
  const parts: string[] = [];
  parts.push(`<div class="trace-header">${statusBadge(run.status)}${voteBadge(run)}</div>`);

  if (run.failure && run.failure.reason === 'planning_failure') {
    const errors = run.failure.candidate_errors ?? [];
    const items = errors
      .map(
        (e) =>
          `<li><code>sample ${e.sample_index}</code>: ${escapeHtml(e.error ?? '')}</li>`,
      )
      .join('');
    parts.push(
      `<div class="planning-failure">Planning failed; candidate errors:` +
        `<ul class="candidate-errors">${items}</ul></div>`,
    );
    return `<section class="plan-trace">${parts.join('')}</section>`;
  }

  if (run.decision) {
    const steps = run.decision.nl_steps
      .map((s, i) => `<li class="nl-step"><span class="step-no">${i + 1}.</span> ${escapeHtml(s)}</li>`)
      .join('');
    parts.push(`<ol class="nl-steps">${steps}</ol>`);
    parts.push(
      `<details class="raw-plan"><summary>show raw plan</summary>` +
        `<pre>${escapeHtml(JSON.stringify(run.decision.chosen_plan, null, 2))}</pre></details>`,
    );
  }

  const reflections = run.memory.filter((m) => m.error !== null);
  if (reflections.length > 0) {
    const items = reflections
      .map(
        (m) =>
          `<details class="reflection"><summary>attempt ${m.attempt_index}` +
          ` failed</summary><pre class="emitted">${escapeHtml(m.emitted_document)}</pre>` +
          `<div class="error-text">${escapeHtml(m.error ?? '')}</div></details>`,
      )
      .join('');
    parts.push(
      `<div class="reflections"><span class="reflection-badge">` +
        `${reflections.length} reflection attempt${reflections.length === 1 ? '' : 's'}` +
        `</span>${items}</div>`,
    );
  }

  if (run.failure && run.failure.reason !== 'planning_failure') {
    parts.push(
      `<div class="run-failure">${escapeHtml(run.failure.reason)}: ` +
        `${escapeHtml(run.failure.detail)}</div>`,
    );
  }

  if (run.timings && run.timings.total_ms !== undefined) {
    parts.push(
      `<div class="timings">planning ${run.timings.planning_ms} ms · ` +
        `execution ${run.timings.execution_ms ?? 0} ms · ` +
        `total ${run.timings.total_ms} ms</div>`,
    );
  }
  return `<section class="plan-trace">${parts.join('')}</section>`;
}
