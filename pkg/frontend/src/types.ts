// Payload shapes of the local service API (everything under /api/).

export type EntityValue = boolean | number | string;

export interface EntityInfo {
  code: string;
  question: string;
  data_type: string;
  kind: string;
  guidelines: string;
  group_id: string;
  priority_weight: number;
  tier: "high" | "medium" | "low";
  default_on_missing: EntityValue;
}

export interface GroupInfo {
  group_id: string;
  combined_question: string;
  combined_guidelines: string;
  member_codes: string[];
}

export interface SchemaPayload {
  schema_id: string;
  entities: EntityInfo[];
  groups: GroupInfo[];
}

export interface ReportRow {
  report_id: string;
  flagged: boolean;
  annotated: boolean;
  burden: number;
  status: "flagged" | "annotated" | "unannotated";
}

export interface ReportPage {
  items: ReportRow[];
  total: number;
  page: number;
  page_size: number;
  page_count: number;
}

export interface AnnotationRecord {
  report_id: string;
  values: Record<string, EntityValue>;
  parse_error: boolean;
  clinician_check: boolean;
  type_mismatches: string[];
}

export interface ReportBundle {
  report_id: string;
  sections: Record<string, string>;
  schema: SchemaPayload;
  annotation: AnnotationRecord | null;
  clinician_check: boolean;
}

export interface SaveEcho {
  report_id: string;
  values: Record<string, EntityValue>;
  type_mismatches: string[];
  warnings: string[];
}

export interface CommentPayload {
  report_id: string;
  entity_code: string;
  author: string;
  text: string;
  run_pair: [string, string];
  created_at: string;
}

export interface CompareEntityRow {
  code: string;
  question: string;
  value_a: EntityValue;
  value_b: EntityValue;
  match: boolean | null;
  category: string | null;
  weight: number;
  tier: "high" | "medium" | "low";
  comments: CommentPayload[];
}

export interface ComparePayload {
  report_id: string;
  pair: string;
  run_a: string;
  run_b: string;
  clinician_check: boolean;
  entities: CompareEntityRow[];
}

export interface QueueEntity {
  code: string;
  weight: number;
  tier: string;
  category: string | null;
}

export interface QueueItem {
  report_id: string;
  burden: number;
  entities: QueueEntity[];
}

export interface QueuePayload {
  pair: string | null;
  items: QueueItem[];
}

export type ReportFilter = "all" | "flagged-only" | "unannotated-only";
