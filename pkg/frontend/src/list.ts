// Report list with the review-only (flagged) toggle and paging.

import type { Api } from "./api.js";
import type { ReportFilter, ReportPage, ReportRow } from "./types.js";

export interface ListState {
  filter: ReportFilter;
  page: number;
  pageCount: number;
  total: number;
  rows: ReportRow[];
}

export class ListController {
  state: ListState = { filter: "all", page: 1, pageCount: 1, total: 0, rows: [] };

  constructor(
    private api: Api,
    private pageSize?: number,
  ) {}

  async load(filter?: ReportFilter, page = 1): Promise<ListState> {
    if (filter) this.state.filter = filter;
    const payload: ReportPage = await this.api.reports(this.state.filter, page, this.pageSize);
    this.state = {
      filter: this.state.filter,
      page: payload.page,
      pageCount: payload.page_count,
      total: payload.total,
      rows: payload.items,
    };
    return this.state;
  }

  async toggleFlaggedOnly(on: boolean): Promise<ListState> {
    return this.load(on ? "flagged-only" : "all", 1);
  }
}
