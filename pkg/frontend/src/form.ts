// Schema-driven annotation form model. Rows derive entirely from the
// schema payload fetched at load time, so a new entity in the schema file
// shows up as a new row with no client changes.

import type { Api } from "./api.js";
import type { EntityInfo, EntityValue, ReportBundle, SchemaPayload } from "./types.js";

export type Widget = "toggle" | "integer" | "select" | "text" | "textarea";

export interface FormRow {
  code: string;
  question: string;
  guidelines: string;
  widget: Widget;
  options: string[];
  tier: "high" | "medium" | "low";
  tabIndex: number;
}

const WIDGET_BY_KIND: Record<string, Widget> = {
  binary: "toggle",
  numerical: "integer",
  categorical: "select",
  string_simple: "text",
  string_complex: "textarea",
  union: "text",
};

function categoricalOptions(entity: EntityInfo): string[] {
  const match = entity.data_type.match(/categorical\{(.*)\}/);
  return match ? match[1].split(";").filter(Boolean) : [];
}

export function buildFormRows(schema: SchemaPayload): FormRow[] {
  return schema.entities.map((entity, index) => ({
    code: entity.code,
    question: entity.question,
    guidelines: entity.guidelines,
    widget: WIDGET_BY_KIND[entity.kind] ?? "text",
    options: entity.kind === "categorical" ? categoricalOptions(entity) : [],
    tier: entity.tier,
    tabIndex: index + 1, // keyboard-first: tab order follows schema order
  }));
}

export interface FieldCheck {
  warning: string | null;
}

// Client-side hinting only; the server echo stays the source of truth.
export function checkFieldInput(row: FormRow, raw: string): FieldCheck {
  const text = raw.trim();
  if (!text) return { warning: null };
  if (row.widget === "integer" && !/^\d+$/.test(text)) {
    return { warning: "not a whole number; will be saved as text (type mismatch)" };
  }
  if (row.widget === "select" && row.options.length && !row.options.includes(text)) {
    return { warning: "not one of the schema labels" };
  }
  return { warning: null };
}

export interface FormState {
  reportId: string | null;
  rows: FormRow[];
  values: Record<string, EntityValue>;
  sections: Record<string, string>;
  clinicianCheck: boolean;
  dirty: boolean;
  warnings: Record<string, string>;
  lastEcho: string[] | null; // type_mismatches from the last save
}

export class FormController {
  state: FormState = {
    reportId: null,
    rows: [],
    values: {},
    sections: {},
    clinicianCheck: false,
    dirty: false,
    warnings: {},
    lastEcho: null,
  };

  constructor(private api: Api) {}

  async load(reportId: string): Promise<FormState> {
    const bundle: ReportBundle = await this.api.report(reportId);
    const rows = buildFormRows(bundle.schema);
    const values: Record<string, EntityValue> = {};
    for (const row of rows) {
      values[row.code] = bundle.annotation?.values[row.code] ?? "";
    }
    this.state = {
      reportId,
      rows,
      values,
      sections: bundle.sections,
      clinicianCheck: bundle.clinician_check,
      dirty: false,
      warnings: {},
      lastEcho: null,
    };
    return this.state;
  }

  setField(code: string, raw: EntityValue): void {
    const row = this.state.rows.find((r) => r.code === code);
    if (!row) throw new Error(`unknown entity ${code}`);
    this.state.values[code] = raw;
    this.state.dirty = true;
    const check = typeof raw === "string" ? checkFieldInput(row, raw) : { warning: null };
    if (check.warning) {
      this.state.warnings[code] = check.warning;
    } else {
      delete this.state.warnings[code];
    }
  }

  async save(): Promise<FormState> {
    if (!this.state.reportId) throw new Error("no report loaded");
    const echo = await this.api.saveAnnotation(this.state.reportId, this.state.values);
    // canonical echo replaces whatever was typed
    this.state.values = { ...echo.values };
    this.state.dirty = false;
    this.state.lastEcho = echo.type_mismatches;
    return this.state;
  }

  // unsaved-changes guard for navigation; confirm() is injected by the view
  canNavigate(confirmFn: () => boolean): boolean {
    return !this.state.dirty || confirmFn();
  }
}
