/**
 * Result-table view with client-side sorting and paging.
 *
 * Sorting and paging are display affordances only: they reorder the rows the
 * server sent, never re-query, and never alter the authoritative result (the
 * CSV download always serves the server's bytes).
 */

import type { ResultTable } from './types.js';
import { cellText, csvCell, escapeHtml } from './render.js';

export interface TableViewState {
  sortColumn: number | null;
  sortDir: 'asc' | 'desc';
  page: number;
  pageSize: number;
}

export function initialTableState(pageSize = 50): TableViewState {
  return { sortColumn: null, sortDir: 'asc', page: 0, pageSize };
}

/** Toggle sort on a column: asc -> desc -> asc (restarting at asc moves to a new column). */
export function toggleSort(state: TableViewState, column: number): TableViewState {
  if (state.sortColumn === column) {
    return { ...state, sortDir: state.sortDir === 'asc' ? 'desc' : 'asc', page: 0 };
  }
  return { ...state, sortColumn: column, sortDir: 'asc', page: 0 };
}

export function setPage(state: TableViewState, page: number): TableViewState {
  return { ...state, page: Math.max(0, page) };
}

function compareCells(a: unknown, b: unknown): number {
  if (typeof a === 'number' && typeof b === 'number') return a - b;
  if (typeof a === 'boolean' && typeof b === 'boolean') {
    return Number(a) - Number(b);
  }
  return String(a) < String(b) ? -1 : String(a) > String(b) ? 1 : 0;
}

export function visibleRows(
  table: ResultTable,
  state: TableViewState,
): unknown[][] {
  let rows = table.rows.slice();
  if (state.sortColumn !== null) {
    const col = state.sortColumn;
    const sign = state.sortDir === 'asc' ? 1 : -1;
    rows = rows
      .map((row, index) => ({ row, index }))
      .sort((x, y) => {
        const a = x.row[col];
        const b = y.row[col];
        const aNull = a === null || a === undefined;
        const bNull = b === null || b === undefined;
        // nulls sort last regardless of direction, like the engine
        if (aNull || bNull) {
          const byNull = Number(aNull) - Number(bNull);
          return byNull !== 0 ? byNull : x.index - y.index;
        }
        const byValue = compareCells(a, b) * sign;
        return byValue !== 0 ? byValue : x.index - y.index; // stable
      })
      .map((entry) => entry.row);
  }
  const start = state.page * state.pageSize;
  return rows.slice(start, start + state.pageSize);
}

export function pageCount(table: ResultTable, state: TableViewState): number {
  return Math.max(1, Math.ceil(table.rows.length / state.pageSize));
}

/** Serialize the table's rows to CSV exactly as the server exports them. */
export function tableToCsv(table: ResultTable): string {
  const lines = [table.columns.map(csvCell).join(',')];
  for (const row of table.rows) {
    lines.push(row.map(csvCell).join(','));
  }
  return lines.join('\n') + '\n';
}

export function renderResultTable(
  table: ResultTable,
  state: TableViewState,
  csvUrl: string,
): string {
  const header = table.columns
    .map((name, i) => {
      const marker =
        state.sortColumn === i ? (state.sortDir === 'asc' ? ' ▲' : ' ▼') : '';
      return `<th data-col="${i}" class="sortable">${escapeHtml(name)}${marker}</th>`;
    })
    .join('');
  const body = visibleRows(table, state)
    .map(
      (row) =>
        `<tr>${row.map((v) => `<td>${escapeHtml(cellText(v))}</td>`).join('')}</tr>`,
    )
    .join('');
  const pages = pageCount(table, state);
  const truncation = table.truncated
    ? `<div class="truncation-notice">showing the first ${table.rows.length} of ` +
      `${table.row_count} rows; download the CSV for the full result</div>`
    : '';
  const pager =
    pages > 1
      ? `<div class="pager"><button data-page="${state.page - 1}" ` +
        `${state.page === 0 ? 'disabled' : ''}>prev</button>` +
        `<span>page ${state.page + 1}/${pages}</span>` +
        `<button data-page="${state.page + 1}" ` +
        `${state.page >= pages - 1 ? 'disabled' : ''}>next</button></div>`
      : '';
  return (
    `<section class="result-table">` +
    `<table><thead><tr>${header}</tr></thead><tbody>${body}</tbody></table>` +
    truncation +
    pager +
    `<a class="csv-download" href="${escapeHtml(csvUrl)}" download>download CSV</a>` +
    `</section>`
  );
}
