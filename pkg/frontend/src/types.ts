/** Server record shapes (mirrors of the HTTP API payloads). */

export type RunStatus = 'planning' | 'executing' | 'done' | 'failed';

export interface TallyEntry {
  canonical: string;
  votes: number;
}

export interface CandidateError {
  sample_index: number;
  error: string | null;
}

export interface Decision {
  chosen_plan: unknown;
  chosen_canonical: string;
  chosen_votes: number;
  n_samples: number;
  nl_steps: string[];
  tally: TallyEntry[];
  candidate_errors: CandidateError[];
}

export interface MemoryRecord {
  attempt_index: number;
  emitted_document: string;
  task_context: string;
  error: string | null;
  execution_excerpt: string | null;
}

export interface ResultTable {
  columns: string[];
  rows: unknown[][];
  row_count: number;
  truncated: boolean;
}

export interface Failure {
  reason: string;
  detail: string;
  candidate_errors?: CandidateError[];
}

export interface Timings {
  planning_ms: number;
  execution_ms?: number;
  total_ms?: number;
}

export interface RunRecord {
  run_id: string;
  dataset_id: string;
  question: string;
  config: { k_shot: number; n_samples: number; mode: string };
  status: RunStatus;
  decision: Decision | null;
  memory: MemoryRecord[];
  result: ResultTable | null;
  failure: Failure | null;
  timings: Timings | null;
  created_at: string;
}

export interface ReportRow {
  k_shot: number;
  band: string;
  total: number;
  success: number;
  failed: number;
  rate: number;
}

export interface CaseOutcome {
  case_id: string;
  k_shot: number;
  difficulty: number;
  success: boolean;
  reason: string;
  detail: string;
}

export interface BenchReportBody {
  incomplete: boolean;
  error: string;
  rows: ReportRow[];
  outcomes: CaseOutcome[];
}

export interface BenchReportRecord {
  report_id: string;
  suite: string;
  k_list: number[];
  mode: string;
  status: 'running' | 'done' | 'failed';
  incomplete: boolean;
  report: BenchReportBody | null;
  error: string;
  created_at: string;
}

export interface DatasetInfo {
  dataset_id: string;
  rows: number;
  fields: number;
  kb_id: string;
}
