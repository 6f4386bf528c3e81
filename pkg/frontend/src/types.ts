/** Wire types mirroring the charting service's JSON payloads. */

export type Json =
  | null
  | boolean
  | number
  | string
  | Json[]
  | { [key: string]: Json };

export interface ApiEnvelopeOk<T> {
  ok: true;
  payload: T;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, Json>;
}

export interface ApiEnvelopeErr {
  ok: false;
  error: ApiErrorBody;
}

export type ApiEnvelope<T> = ApiEnvelopeOk<T> | ApiEnvelopeErr;

export type ConceptKind = "original" | "custom" | "derived";

export interface Concept {
  id: string;
  name: string;
  kind: ConceptKind;
  semantic_type: string;
  example_values: Json[];
  known: boolean;
  resolution: { table_id: string; column: string } | null;
  sources: string[];
  formula_text: string | null;
}

export interface TableColumn {
  name: string;
  semantic_type: string;
}

export interface TablePage {
  name: string;
  columns: TableColumn[];
  rows: Record<string, Json>[];
  total_rows: number;
  offset: number;
}

export interface CandidateFormula {
  formula_text: string;
  origin: string;
  sample_outputs: { inputs: Json[]; output: Json }[];
}

export interface ChartCandidate {
  index: number;
  spec: Record<string, Json>;
  table: TablePage;
  provenance: {
    reshape_program: string;
    formulas: [string, string][];
    column_binding: [string, string][];
  };
}

export interface EncodingPayload {
  channel: string;
  concept_id: string | null;
  aggregate?: string | null;
}

export interface FormulateNeedsExample {
  status: "needs_example_relation";
  columns: string[];
  prefilled_rows: (Json | null)[][];
  session_version: number;
}

export interface FormulateReady {
  status: "ready";
  candidates: ChartCandidate[];
  session_version: number;
}

export type FormulateOutcome = FormulateNeedsExample | FormulateReady;

export interface SessionSummary {
  session_id: string;
  version: number;
  current_table_id: string;
  concepts: Concept[];
  saved_charts: Json[];
}

export interface TemplateInfo {
  id: string;
  mark: Json;
  channels: { name: string; required: boolean }[];
}
