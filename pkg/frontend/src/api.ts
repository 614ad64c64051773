// Thin typed client for the local service API. The UI only ever talks to
// this localhost API; no clinical text goes anywhere else.

import type {
  ComparePayload,
  CommentPayload,
  EntityValue,
  QueuePayload,
  ReportBundle,
  ReportFilter,
  ReportPage,
  SaveEcho,
  SchemaPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public detail: unknown = null,
  ) {
    super(message);
  }
}

export interface Api {
  schema(): Promise<SchemaPayload>;
  reports(filter: ReportFilter, page?: number, pageSize?: number): Promise<ReportPage>;
  report(id: string): Promise<ReportBundle>;
  saveAnnotation(id: string, values: Record<string, EntityValue>): Promise<SaveEcho>;
  queue(): Promise<QueuePayload>;
  comparison(id: string): Promise<ComparePayload>;
  postComment(id: string, entity: string, text: string, author?: string): Promise<CommentPayload>;
}

async function parseResponse<T>(response: Response): Promise<T> {
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // error responses without a JSON body fall through
  }
  if (!response.ok) {
    const message =
      body && typeof body === "object" && "error" in body
        ? String((body as { error: unknown }).error)
        : `HTTP ${response.status}`;
    throw new ApiError(response.status, message, body);
  }
  return body as T;
}

export class HttpApi implements Api {
  constructor(private base = "/api") {}

  private get<T>(path: string): Promise<T> {
    return fetch(`${this.base}${path}`).then((r) => parseResponse<T>(r));
  }

  schema(): Promise<SchemaPayload> {
    return this.get("/schema");
  }

  reports(filter: ReportFilter, page = 1, pageSize?: number): Promise<ReportPage> {
    const params = new URLSearchParams({ filter, page: String(page) });
    if (pageSize !== undefined) params.set("page_size", String(pageSize));
    return this.get(`/reports?${params}`);
  }

  report(id: string): Promise<ReportBundle> {
    return this.get(`/reports/${encodeURIComponent(id)}`);
  }

  async saveAnnotation(id: string, values: Record<string, EntityValue>): Promise<SaveEcho> {
    const response = await fetch(`${this.base}/reports/${encodeURIComponent(id)}/annotation`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ values }),
    });
    return parseResponse<SaveEcho>(response);
  }

  queue(): Promise<QueuePayload> {
    return this.get("/queue");
  }

  comparison(id: string): Promise<ComparePayload> {
    return this.get(`/compare/${encodeURIComponent(id)}`);
  }

  async postComment(id: string, entity: string, text: string, author = "reviewer"): Promise<CommentPayload> {
    const response = await fetch(`${this.base}/compare/${encodeURIComponent(id)}/comments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ entity, text, author }),
    });
    return parseResponse<CommentPayload>(response);
  }
}
