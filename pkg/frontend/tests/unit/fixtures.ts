import type { ApiClient } from "../../src/api.js";
import type {
  ChartCandidate,
  Concept,
  FormulateOutcome,
  TablePage,
  TemplateInfo,
} from "../../src/types.js";

export function concept(over: Partial<Concept> = {}): Concept {
  return {
    id: "c1",
    name: "Date",
    kind: "original",
    semantic_type: "date",
    example_values: [],
    known: true,
    resolution: { table_id: "t1", column: "Date" },
    sources: [],
    formula_text: null,
    ...over,
  };
}

export const TEMPLATES: TemplateInfo[] = [
  {
    id: "scatter",
    mark: "circle",
    channels: [
      { name: "x", required: true },
      { name: "y", required: true },
      { name: "color", required: false },
    ],
  },
  {
    id: "bar",
    mark: "bar",
    channels: [
      { name: "x", required: true },
      { name: "y", required: true },
      { name: "color", required: false },
    ],
  },
];

export function tablePage(over: Partial<TablePage> = {}): TablePage {
  return {
    name: "temps",
    columns: [
      { name: "Date", semantic_type: "date" },
      { name: "City", semantic_type: "text" },
      { name: "Temperature", semantic_type: "integer" },
    ],
    rows: [
      { Date: "2020-01-01", City: "Seattle", Temperature: 51 },
      { Date: "2020-01-01", City: "Atlanta", Temperature: 45 },
    ],
    total_rows: 6,
    offset: 0,
    ...over,
  };
}

export function chartCandidate(
  over: Partial<ChartCandidate> = {},
): ChartCandidate {
  return {
    index: 0,
    spec: { mark: "circle" },
    table: tablePage(),
    provenance: {
      reshape_program:
        '(pivot_wider (input) name_col="City" value_col="Temperature")',
      formulas: [],
      column_binding: [
        ["Seattle Temp", "Seattle"],
        ["Atlanta Temp", "Atlanta"],
      ],
    },
    ...over,
  };
}

export interface FakeCalls {
  [method: string]: unknown[][];
}

/** Minimal scripted ApiClient double. */
export function fakeClient(script: {
  concepts?: Concept[];
  formulateOutcome?: FormulateOutcome;
  completeCandidates?: ChartCandidate[];
  table?: TablePage;
}): { client: ApiClient; calls: FakeCalls } {
  const calls: FakeCalls = {};
  const record = (name: string, args: unknown[]) => {
    (calls[name] ??= []).push(args);
  };
  let version = 1;
  const client = {
    uploadCsv: async (...args: unknown[]) => {
      record("uploadCsv", args);
      return { session_id: "s-test", concepts: script.concepts ?? [] };
    },
    getTemplates: async () => ({ templates: TEMPLATES }),
    getSession: async (...args: unknown[]) => {
      record("getSession", args);
      return {
        session_id: "s-test",
        version,
        current_table_id: "t1",
        concepts: script.concepts ?? [],
        saved_charts: [],
      };
    },
    getTable: async (...args: unknown[]) => {
      record("getTable", args);
      return script.table ?? tablePage();
    },
    createCustomConcept: async (...args: unknown[]) => {
      record("createCustomConcept", args);
      version += 1;
      return { concept: concept() };
    },
    derivePreview: async (...args: unknown[]) => {
      record("derivePreview", args);
      return {
        candidates: [
          {
            formula_text: "fn(a, b) = a - b",
            origin: "simple",
            sample_outputs: [{ inputs: [51, 45], output: 6 }],
          },
          {
            formula_text: "fn(a, b) = abs(a - b)",
            origin: "simple",
            sample_outputs: [{ inputs: [51, 45], output: 6 }],
          },
        ],
      };
    },
    deriveCommit: async (...args: unknown[]) => {
      record("deriveCommit", args);
      version += 1;
      return { concept: concept(), table: script.table ?? tablePage() };
    },
    formulate: async (...args: unknown[]) => {
      record("formulate", args);
      return (
        script.formulateOutcome ?? {
          status: "ready",
          candidates: [chartCandidate()],
          session_version: version,
        }
      );
    },
    formulateComplete: async (...args: unknown[]) => {
      record("formulateComplete", args);
      return {
        status: "ready",
        candidates: script.completeCandidates ?? [chartCandidate()],
        session_version: version,
      };
    },
    saveChart: async (...args: unknown[]) => {
      record("saveChart", args);
      version += 1;
      return {
        chart_id: "chart1",
        session_version: version,
        concepts: script.concepts ?? [],
        current_table: script.table ?? tablePage(),
      };
    },
  } as unknown as ApiClient;
  return { client, calls };
}
