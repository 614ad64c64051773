// In-memory stand-in for the service API, mirroring its documented
// semantics: canonical value echo on save, flagged-only filtering,
// append-only comments, burden-ordered queue.

import type { Api } from "../src/api.js";
import type {
  AnnotationRecord,
  ComparePayload,
  CommentPayload,
  EntityInfo,
  EntityValue,
  QueuePayload,
  ReportBundle,
  ReportFilter,
  ReportPage,
  ReportRow,
  SaveEcho,
  SchemaPayload,
} from "../src/types.js";

const KINDS = ["binary", "numerical", "string_simple", "string_complex", "union"] as const;

export function makeEntity(code: string, kind: string, weight: 1 | 2 | 3 = 3): EntityInfo {
  const tier = weight === 3 ? "high" : weight === 2 ? "medium" : "low";
  return {
    code,
    question: `What about ${code}?`,
    data_type: kind === "union" ? "numerical/string_simple" : kind,
    kind,
    guidelines: `Guidance for ${code}.`,
    group_id: `group_${code}`,
    priority_weight: weight,
    tier,
    default_on_missing: "",
  };
}

export function makeSchema(nEntities: number): SchemaPayload {
  const entities = Array.from({ length: nEntities }, (_, i) =>
    makeEntity(`e${i + 1}`, KINDS[i % KINDS.length]),
  );
  return {
    schema_id: "fixture",
    entities,
    groups: entities.map((e) => ({
      group_id: e.group_id,
      combined_question: e.question,
      combined_guidelines: e.guidelines,
      member_codes: [e.code],
    })),
  };
}

function canonicalize(entity: EntityInfo, raw: EntityValue): { value: EntityValue; mismatch: boolean } {
  if (raw === "" || raw === null || raw === undefined) return { value: "", mismatch: false };
  const text = String(raw).trim();
  const tryBinary = () => {
    const low = text.toLowerCase();
    if (["true", "yes"].includes(low) || raw === true) return true;
    if (["false", "no"].includes(low) || raw === false) return false;
    return null;
  };
  const tryNumber = () => (/^\d+$/.test(text) ? Number(text) : null);
  const kinds = entity.kind === "union" ? ["numerical", "string_simple"] : [entity.kind];
  for (const kind of kinds) {
    if (kind === "binary") {
      const value = tryBinary();
      if (value !== null) return { value, mismatch: false };
    } else if (kind === "numerical") {
      const value = tryNumber();
      if (value !== null) return { value, mismatch: false };
    } else {
      return { value: text, mismatch: false };
    }
  }
  return { value: text, mismatch: true };
}

export interface FakeReport {
  report_id: string;
  sections: Record<string, string>;
  flagged: boolean;
  valuesA: Record<string, EntityValue>;
  valuesB: Record<string, EntityValue>;
}

export class FakeApi implements Api {
  annotations = new Map<string, AnnotationRecord>();
  comments: CommentPayload[] = [];
  failNextComment = false;

  constructor(
    public schemaPayload: SchemaPayload,
    public reportsData: FakeReport[],
  ) {}

  private entity(code: string): EntityInfo {
    const found = this.schemaPayload.entities.find((e) => e.code === code);
    if (!found) throw Object.assign(new Error(`unknown entity ${code}`), { status: 422 });
    return found;
  }

  async schema(): Promise<SchemaPayload> {
    return this.schemaPayload;
  }

  async reports(filter: ReportFilter, page = 1, pageSize = 50): Promise<ReportPage> {
    let rows: ReportRow[] = this.reportsData.map((r) => ({
      report_id: r.report_id,
      flagged: r.flagged,
      annotated: this.annotations.has(r.report_id),
      burden: this.burden(r),
      status: r.flagged ? "flagged" : this.annotations.has(r.report_id) ? "annotated" : "unannotated",
    }));
    if (filter === "flagged-only") rows = rows.filter((r) => r.flagged).sort((a, b) => b.burden - a.burden);
    if (filter === "unannotated-only") rows = rows.filter((r) => !r.annotated);
    const start = (page - 1) * pageSize;
    return {
      items: rows.slice(start, start + pageSize),
      total: rows.length,
      page,
      page_size: pageSize,
      page_count: Math.max(1, Math.ceil(rows.length / pageSize)),
    };
  }

  private find(id: string): FakeReport {
    const report = this.reportsData.find((r) => r.report_id === id);
    if (!report) throw Object.assign(new Error(`unknown report ${id}`), { status: 404 });
    return report;
  }

  private burden(report: FakeReport): number {
    return this.schemaPayload.entities
      .filter((e) => report.valuesA[e.code] !== report.valuesB[e.code])
      .reduce((sum, e) => sum + e.priority_weight, 0);
  }

  async report(id: string): Promise<ReportBundle> {
    const report = this.find(id);
    return {
      report_id: id,
      sections: report.sections,
      schema: this.schemaPayload,
      annotation: this.annotations.get(id) ?? null,
      clinician_check: report.flagged,
    };
  }

  async saveAnnotation(id: string, values: Record<string, EntityValue>): Promise<SaveEcho> {
    this.find(id);
    const canonical: Record<string, EntityValue> = {};
    const mismatches: string[] = [];
    for (const entity of this.schemaPayload.entities) {
      const { value, mismatch } = canonicalize(entity, values[entity.code] ?? "");
      canonical[entity.code] = value;
      if (mismatch) mismatches.push(entity.code);
    }
    this.annotations.set(id, {
      report_id: id,
      values: canonical,
      parse_error: false,
      clinician_check: this.find(id).flagged,
      type_mismatches: mismatches,
    });
    return {
      report_id: id,
      values: canonical,
      type_mismatches: mismatches,
      warnings: mismatches.map((code) => `${code}: kept as text`),
    };
  }

  async queue(): Promise<QueuePayload> {
    const items = this.reportsData
      .map((r) => ({
        report_id: r.report_id,
        burden: this.burden(r),
        entities: this.schemaPayload.entities
          .filter((e) => r.valuesA[e.code] !== r.valuesB[e.code])
          .map((e) => ({ code: e.code, weight: e.priority_weight, tier: e.tier, category: null })),
      }))
      .filter((item) => item.burden > 0)
      .sort((a, b) => b.burden - a.burden || a.report_id.localeCompare(b.report_id));
    return { pair: "run_a__run_b", items };
  }

  async comparison(id: string): Promise<ComparePayload> {
    const report = this.find(id);
    return {
      report_id: id,
      pair: "run_a__run_b",
      run_a: "run_a",
      run_b: "run_b",
      clinician_check: report.flagged,
      entities: this.schemaPayload.entities.map((e) => ({
        code: e.code,
        question: e.question,
        value_a: report.valuesA[e.code] ?? "",
        value_b: report.valuesB[e.code] ?? "",
        match: report.valuesA[e.code] === report.valuesB[e.code],
        category: null,
        weight: e.priority_weight,
        tier: e.tier,
        comments: this.comments.filter((c) => c.report_id === id && c.entity_code === e.code),
      })),
    };
  }

  async postComment(id: string, entity: string, text: string, author = "reviewer"): Promise<CommentPayload> {
    if (this.failNextComment) {
      this.failNextComment = false;
      throw Object.assign(new Error("storage unavailable"), { status: 500 });
    }
    this.find(id);
    this.entity(entity);
    if (!text.trim()) throw Object.assign(new Error("comment text must be non-empty"), { status: 422 });
    const record: CommentPayload = {
      report_id: id,
      entity_code: entity,
      author,
      text,
      run_pair: ["run_a", "run_b"],
      created_at: new Date().toISOString(),
    };
    this.comments.push(record);
    return record;
  }
}

export function fixtureReports(schema: SchemaPayload): FakeReport[] {
  const codes = schema.entities.map((e) => e.code);
  const base = Object.fromEntries(codes.map((c, i) => [c, `v${i}`]));
  const reports: FakeReport[] = [];
  for (let i = 0; i < 6; i++) {
    const id = `r${i}`;
    const flagged = i < 3; // exactly three flagged fixtures
    const valuesB = { ...base };
    if (flagged) {
      for (const code of codes.slice(0, 4)) valuesB[code] = "different";
    } else if (i === 3) {
      valuesB[codes[0]] = "different"; // mild disagreement, below threshold
    }
    reports.push({
      report_id: id,
      sections: { microscopy: `micro text ${id}`, conclusion: `conclusion ${id}` },
      flagged,
      valuesA: { ...base },
      valuesB,
    });
  }
  return reports;
}
