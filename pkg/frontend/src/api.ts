/**
 * Typed client for the analysis service. The UI is a pure consumer of these
 * endpoints: every view renders from server records, so a page refresh (or a
 * different browser) reconstructs identical state from run history alone.
 */

import type {
  BenchReportRecord,
  DatasetInfo,
  RunRecord,
} from './types.js';

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

export interface QueryOptions {
  k_shot?: number;
  n_samples?: number;
  mode?: 'safe' | 'natural_language';
}

const TERMINAL: ReadonlySet<string> = new Set(['done', 'failed']);

async function parseJson(resp: Response): Promise<unknown> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(detail, resp.status);
  }
  return resp.json();
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async post(path: string, body: unknown): Promise<unknown> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    return parseJson(resp);
  }

  private async get(path: string): Promise<unknown> {
    return parseJson(await this.fetchFn(`${this.baseUrl}${path}`));
  }

  async health(): Promise<boolean> {
    try {
      const body = (await this.get('/v1/health')) as { status: string };
      return body.status === 'ok';
    } catch {
      return false;
    }
  }

  async uploadDataset(csvText: string, kbText: string): Promise<DatasetInfo> {
    return (await this.post('/v1/datasets', {
      csv_text: csvText,
      kb_text: kbText,
    })) as DatasetInfo;
  }

  async listDatasets(): Promise<DatasetInfo[]> {
    const body = (await this.get('/v1/datasets')) as {
      datasets: DatasetInfo[];
    };
    return body.datasets;
  }

  async submitQuestion(
    datasetId: string,
    question: string,
    options: QueryOptions = {},
  ): Promise<RunRecord> {
    return (await this.post('/v1/query', {
      dataset_id: datasetId,
      question,
      ...options,
    })) as RunRecord;
  }

  async getRun(runId: string): Promise<RunRecord> {
    return (await this.get(`/v1/runs/${runId}`)) as RunRecord;
  }

  async listRuns(datasetId?: string): Promise<RunRecord[]> {
    const suffix = datasetId ? `?dataset_id=${encodeURIComponent(datasetId)}` : '';
    const body = (await this.get(`/v1/runs${suffix}`)) as { runs: RunRecord[] };
    return body.runs;
  }

  resultCsvUrl(runId: string): string {
    return `${this.baseUrl}/v1/runs/${runId}/result.csv`;
  }

  async fetchResultCsv(runId: string): Promise<string> {
    const resp = await this.fetchFn(this.resultCsvUrl(runId));
    if (!resp.ok) throw new ApiError(resp.statusText, resp.status);
    return resp.text();
  }

  async runBench(
    suite: string,
    kList: number[],
    mode = 'safe',
    nSamples = 3,
  ): Promise<string> {
    const body = (await this.post('/v1/bench/run', {
      suite,
      k_list: kList,
      mode,
      n_samples: nSamples,
    })) as { report_id: string };
    return body.report_id;
  }

  async getBenchReport(reportId: string): Promise<BenchReportRecord> {
    return (await this.get(
      `/v1/bench/reports/${reportId}`,
    )) as BenchReportRecord;
  }

  /**
   * Poll a run until it reaches a terminal status. One-second interval by
   * default; polling stops (backs off completely) once terminal.
   */
  async pollRun(
    runId: string,
    onUpdate?: (run: RunRecord) => void,
    intervalMs = 1000,
    timeoutMs = 300_000,
  ): Promise<RunRecord> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const run = await this.getRun(runId);
      onUpdate?.(run);
      if (TERMINAL.has(run.status)) return run;
      if (Date.now() > deadline) {
        throw new ApiError(`run ${runId} still ${run.status}`, 408);
      }
      await sleep(intervalMs);
    }
  }

  async pollBenchReport(
    reportId: string,
    onUpdate?: (record: BenchReportRecord) => void,
    intervalMs = 1000,
    timeoutMs = 600_000,
  ): Promise<BenchReportRecord> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const record = await this.getBenchReport(reportId);
      onUpdate?.(record);
      if (record.status !== 'running') return record;
      if (Date.now() > deadline) {
        throw new ApiError(`report ${reportId} still running`, 408);
      }
      await sleep(intervalMs);
    }
  }
}

/** Submit is disabled until both a dataset and a non-blank question exist. */
export function canSubmit(datasetId: string | null, question: string): boolean {
  return datasetId !== null && datasetId !== '' && question.trim() !== '';
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
