// Comparison (adjudication) view model: side-by-side run values per
// entity, mismatch highlighting, per-entity comment drafts, and
// queue-ordered navigation.

import type { Api } from "./api.js";
import type { CompareEntityRow, ComparePayload, QueueItem } from "./types.js";

const TIER_RANK = { high: 3, medium: 2, low: 1 } as const;

export interface CompareRowState extends CompareEntityRow {
  highlight: boolean;
  draft: string;
}

export function orderRows(rows: CompareEntityRow[]): CompareEntityRow[] {
  // priority tier descending; schema order (payload order) breaks ties
  return rows
    .map((row, index) => ({ row, index }))
    .sort((a, b) => TIER_RANK[b.row.tier] - TIER_RANK[a.row.tier] || a.index - b.index)
    .map(({ row }) => row);
}

export interface CompareState {
  reportId: string | null;
  runA: string;
  runB: string;
  clinicianCheck: boolean;
  rows: CompareRowState[];
  queue: QueueItem[];
  error: string | null;
}

export class CompareController {
  state: CompareState = {
    reportId: null,
    runA: "",
    runB: "",
    clinicianCheck: false,
    rows: [],
    queue: [],
    error: null,
  };

  constructor(private api: Api) {}

  async loadQueue(): Promise<QueueItem[]> {
    const payload = await this.api.queue();
    this.state.queue = payload.items;
    return payload.items;
  }

  async load(reportId: string): Promise<CompareState> {
    const payload: ComparePayload = await this.api.comparison(reportId);
    const drafts = new Map(this.state.rows.map((r) => [r.code, r.draft]));
    this.state = {
      ...this.state,
      reportId,
      runA: payload.run_a,
      runB: payload.run_b,
      clinicianCheck: payload.clinician_check,
      error: null,
      rows: orderRows(payload.entities).map((row) => ({
        ...row,
        highlight: row.match === false,
        draft: this.state.reportId === reportId ? (drafts.get(row.code) ?? "") : "",
      })),
    };
    return this.state;
  }

  setDraft(code: string, text: string): void {
    const row = this.state.rows.find((r) => r.code === code);
    if (row) row.draft = text;
  }

  async submitComment(code: string, author = "reviewer"): Promise<boolean> {
    const row = this.state.rows.find((r) => r.code === code);
    if (!row || !this.state.reportId || !row.draft.trim()) return false;
    try {
      const saved = await this.api.postComment(this.state.reportId, code, row.draft, author);
      row.comments = [...row.comments, saved];
      row.draft = ""; // cleared only on success
      this.state.error = null;
      return true;
    } catch (err) {
      // failed POST keeps the draft text so nothing typed is lost
      this.state.error = err instanceof Error ? err.message : String(err);
      return false;
    }
  }

  nextInQueue(): string | null {
    if (!this.state.queue.length) return null;
    const ids = this.state.queue.map((item) => item.report_id);
    if (this.state.reportId === null) return ids[0];
    const at = ids.indexOf(this.state.reportId);
    return at === -1 || at + 1 >= ids.length ? null : ids[at + 1];
  }
}
