import { describe, expect, it, vi } from 'vitest';

import { ApiClient, ApiError, canSubmit } from '../src/api.js';
import { formatRate, renderBenchGrid } from '../src/benchview.js';
import { cellText, csvCell, escapeHtml } from '../src/render.js';
import {
  initialTableState,
  pageCount,
  renderResultTable,
  setPage,
  tableToCsv,
  toggleSort,
  visibleRows,
} from '../src/table.js';
import { renderPlanTrace, voteBadge } from '../src/trace.js';
import type {
  BenchReportRecord,
  ResultTable,
  RunRecord,
} from '../src/types.js';

function runRecord(overrides: Partial<RunRecord> = {}): RunRecord {
  return {
    run_id: 'r1',
    dataset_id: 'd1',
    question: 'which functions fail the most for RC7?',
    config: { k_shot: 3, n_samples: 3, mode: 'safe' },
    status: 'done',
    decision: {
      chosen_plan: { steps: [{ kind: 'limit', n: 5 }] },
      chosen_canonical: '{"steps":[...]}',
      chosen_votes: 2,
      n_samples: 3,
      nl_steps: ['Select column test_case_function.', 'Count rows.'],
      tally: [{ canonical: 'x', votes: 2 }],
      candidate_errors: [],
    },
    memory: [],
    result: {
      columns: ['test_case_function', 'count'],
      rows: [
        ['brake_check', 4],
        ['lane_check', 2],
      ],
      row_count: 2,
      truncated: false,
    },
    failure: null,
    timings: { planning_ms: 5, execution_ms: 2, total_ms: 9 },
    created_at: '2024-06-01T00:00:00Z',
    ...overrides,
  };
}

const SAMPLE: ResultTable = {
  columns: ['name', 'count'],
  rows: [
    ['beta', 2],
    ['alpha', 9],
    ['gamma', null],
  ],
  row_count: 3,
  truncated: false,
};

describe('render helpers', () => {
  it('escapes html', () => {
    expect(escapeHtml('<b>&"x"</b>')).toBe('&lt;b&gt;&amp;&quot;x&quot;&lt;/b&gt;');
  });
  it('renders nulls distinctly', () => {
    expect(cellText(null)).toBe('∅');
    expect(cellText('N/A')).toBe('N/A');
  });
  it('csv cells follow rfc-4180 minimal quoting', () => {
    expect(csvCell('plain')).toBe('plain');
    expect(csvCell('a,b')).toBe('"a,b"');
    expect(csvCell('say "hi"')).toBe('"say ""hi"""');
    expect(csvCell(null)).toBe('');
    expect(csvCell(true)).toBe('true');
  });
});

describe('table view', () => {
  it('sorts ascending then descending, stably', () => {
    let state = initialTableState();
    state = toggleSort(state, 1);
    expect(visibleRows(SAMPLE, state).map((r) => r[0])).toEqual([
      'beta',
      'alpha',
      'gamma', // null sorts last
    ]);
    state = toggleSort(state, 1);
    expect(state.sortDir).toBe('desc');
    expect(visibleRows(SAMPLE, state).map((r) => r[0])).toEqual([
      'alpha',
      'beta',
      'gamma', // null still last on desc
    ]);
  });

  it('pages rows client-side', () => {
    let state = { ...initialTableState(2) };
    expect(pageCount(SAMPLE, state)).toBe(2);
    expect(visibleRows(SAMPLE, state).length).toBe(2);
    state = setPage(state, 1);
    expect(visibleRows(SAMPLE, state).length).toBe(1);
  });

  it('shows a truncation notice when the record is capped', () => {
    const truncated = { ...SAMPLE, truncated: true, row_count: 5000 };
    const html = renderResultTable(truncated, initialTableState(), '/csv');
    expect(html).toContain('truncation-notice');
    expect(html).toContain('5000');
  });

  it('always links the csv download', () => {
    const html = renderResultTable(SAMPLE, initialTableState(), '/v1/runs/r1/result.csv');
    expect(html).toContain('href="/v1/runs/r1/result.csv"');
  });

  it('serializes rows to csv like the server', () => {
    expect(tableToCsv(SAMPLE)).toBe('name,count\nbeta,2\nalpha,9\ngamma,\n');
  });
});

describe('plan trace', () => {
  it('renders one sentence per step in order', () => {
    const html = renderPlanTrace(runRecord());
    const first = html.indexOf('Select column test_case_function.');
    const second = html.indexOf('Count rows.');
    expect(first).toBeGreaterThan(-1);
    expect(second).toBeGreaterThan(first);
  });

  it('shows the vote tally badge', () => {
    expect(voteBadge(runRecord())).toContain('2/3');
  });

  it('hides the raw plan behind a toggle', () => {
    const html = renderPlanTrace(runRecord());
    expect(html).toContain('show raw plan');
    expect(html).toContain('&quot;kind&quot;: &quot;limit&quot;');
  });

  it('expands reflection attempts with error text', () => {
    const run = runRecord({
      memory: [
        {
          attempt_index: 0,
          emitted_document: '{"kind": "slice"}',
          task_context: 'step 1',
          error: "unknown column 'relese_candidate'",
          execution_excerpt: null,
        },
        {
          attempt_index: 1,
          emitted_document: '{"kind": "slice", "select": "all"}',
          task_context: 'step 1',
          error: null,
          execution_excerpt: 'a, b',
        },
      ],
    });
    const html = renderPlanTrace(run);
    expect(html).toContain('1 reflection attempt');
    expect(html).toContain('relese_candidate');
  });

  it('lists candidate errors for planning failures', () => {
    const run = runRecord({
      status: 'failed',
      decision: null,
      result: null,
      failure: {
        reason: 'planning_failure',
        detail: 'all 3 plan candidates invalid',
        candidate_errors: [
          { sample_index: 0, error: 'no plan document' },
          { sample_index: 1, error: 'no plan document' },
          { sample_index: 2, error: 'unknown column' },
        ],
      },
    });
    const html = renderPlanTrace(run);
    expect(html).toContain('candidate-errors');
    expect(html.match(/sample \d/g)?.length).toBe(3);
  });
});

describe('bench grid', () => {
  const record: BenchReportRecord = {
    report_id: 'b1',
    suite: 'shipped',
    k_list: [0, 1, 2, 3],
    mode: 'safe',
    status: 'done',
    incomplete: false,
    error: '',
    created_at: '2024-06-01T00:00:00Z',
    report: {
      incomplete: false,
      error: '',
      rows: [0, 1, 2, 3].flatMap((k) =>
        ['1', '1-2', '1-3', '1-4'].map((band) => ({
          k_shot: k,
          band,
          total: 16,
          success: k === 0 && band === '1' ? 3 : 16,
          failed: k === 0 && band === '1' ? 13 : 0,
          rate: k === 0 && band === '1' ? 18.75 : 100.0,
        })),
      ),
      outcomes: [
        {
          case_id: 'rc7-failing-functions#1',
          k_shot: 0,
          difficulty: 1,
          success: false,
          reason: 'mismatch',
          detail: 'row count 3, expected 5',
        },
      ],
    },
  };

  it('renders a 4x4 grid', () => {
    const html = renderBenchGrid(record);
    expect(html.match(/bench-row/g)?.length).toBe(16);
    expect(html).toContain('18.75%');
    expect(html).toContain('100%');
  });

  it('drills down to per-case diffs', () => {
    const html = renderBenchGrid(record);
    expect(html).toContain('rc7-failing-functions#1');
    expect(html).toContain('row count 3, expected 5');
  });

  it('formats rates without trailing zeros', () => {
    expect(formatRate(100)).toBe('100%');
    expect(formatRate(18.75)).toBe('18.75%');
    expect(formatRate(59.38)).toBe('59.38%');
  });

  it('reports running and failed states', () => {
    expect(renderBenchGrid({ ...record, status: 'running', report: null }))
      .toContain('running');
    expect(
      renderBenchGrid({ ...record, status: 'failed', report: null, error: 'x' }),
    ).toContain('benchmark failed');
  });
});

describe('api client', () => {
  it('submit gating needs dataset and non-blank question', () => {
    expect(canSubmit(null, 'q')).toBe(false);
    expect(canSubmit('d', '   ')).toBe(false);
    expect(canSubmit('d', 'q')).toBe(true);
  });

  it('polls until terminal and stops', async () => {
    const states = ['planning', 'executing', 'done'];
    let calls = 0;
    const fetchFn = vi.fn(async () => {
      const body = { ...runRecord(), status: states[Math.min(calls, 2)] };
      calls += 1;
      return new Response(JSON.stringify(body), { status: 200 });
    });
    const client = new ApiClient('http://x', fetchFn as unknown as typeof fetch);
    const seen: string[] = [];
    const run = await client.pollRun('r1', (r) => seen.push(r.status), 1);
    expect(run.status).toBe('done');
    expect(seen).toEqual(['planning', 'executing', 'done']);
    expect(fetchFn).toHaveBeenCalledTimes(3);
  });

  it('raises ApiError with server detail', async () => {
    const fetchFn = vi.fn(async () =>
      new Response(JSON.stringify({ detail: 'unknown dataset' }), {
        status: 404,
        statusText: 'Not Found',
      }),
    );
    const client = new ApiClient('http://x', fetchFn as unknown as typeof fetch);
    await expect(client.getRun('zz')).rejects.toThrowError(/unknown dataset/);
    await expect(client.getRun('zz')).rejects.toBeInstanceOf(ApiError);
  });

  it('health degrades to false on connection errors', async () => {
    const fetchFn = vi.fn(async () => {
      throw new TypeError('fetch failed');
    });
    const client = new ApiClient('http://x', fetchFn as unknown as typeof fetch);
    expect(await client.health()).toBe(false);
  });
});
