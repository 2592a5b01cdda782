// Pure model for the run table: editable y per pending row, read-only
// once submitted. Validation happens here so a bad entry never reaches
// the network.

import type { BatchRow } from "./api.js";

export interface RunRow {
  rowId: number;
  levels: number[];
  input: string;
  submitted: boolean;
  error: string | null;
}

export function makeRows(batch: BatchRow[]): RunRow[] {
  return batch.map((b) => ({
    rowId: b.row_id,
    levels: b.levels,
    input: "",
    submitted: false,
    error: null,
  }));
}

export function parseY(input: string): number | null {
  const trimmed = input.trim();
  if (trimmed === "") return null;
  const v = Number(trimmed);
  return Number.isFinite(v) ? v : null;
}

export function setInput(rows: RunRow[], rowId: number, input: string): void {
  const row = rows.find((r) => r.rowId === rowId);
  if (!row || row.submitted) return;
  row.input = input;
  row.error = null;
}

// Rows ready to send: unsubmitted, non-empty, numeric. Rows with a
// non-numeric entry get an inline error instead and block nothing else.
export function collectSubmittable(
  rows: RunRow[],
): { row_id: number; y: number }[] {
  const out: { row_id: number; y: number }[] = [];
  for (const row of rows) {
    if (row.submitted || row.input.trim() === "") continue;
    const y = parseY(row.input);
    if (y === null) {
      row.error = "not a number";
    } else {
      out.push({ row_id: row.rowId, y });
    }
  }
  return out;
}

export function markSubmitted(rows: RunRow[], rowIds: number[]): void {
  const ids = new Set(rowIds);
  for (const row of rows) {
    if (ids.has(row.rowId)) {
      row.submitted = true;
      row.error = null;
    }
  }
}

export function setRowError(
  rows: RunRow[],
  rowIds: number[],
  message: string,
): void {
  const ids = new Set(rowIds);
  for (const row of rows) {
    if (ids.has(row.rowId)) row.error = message;
  }
}

export function pendingCount(rows: RunRow[]): number {
  return rows.filter((r) => !r.submitted).length;
}
