/** Typed fetch client for the charting service.
 *
 * Every method unwraps the service's response envelope and raises ApiError
 * on error envelopes, so callers deal in payloads only.  All business
 * decisions (candidate ordering, validation, type inference) stay on the
 * server; this client never filters or reorders what it receives.
 */

import type {
  ApiEnvelope,
  ApiErrorBody,
  CandidateFormula,
  ChartCandidate,
  Concept,
  EncodingPayload,
  FormulateOutcome,
  FormulateReady,
  Json,
  SessionSummary,
  TablePage,
  TemplateInfo,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly details: Record<string, Json>;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.code = body.code;
    this.details = body.details;
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export interface ClientOptions {
  fetchImpl?: FetchLike;
  /** Supplies Idempotency-Key values for mutating calls. */
  idempotencyKey?: () => string;
}

async function unwrap<T>(resp: Response): Promise<T> {
  const body = (await resp.json()) as ApiEnvelope<T>;
  if (!body.ok) {
    throw new ApiError(resp.status, body.error);
  }
  return body.payload;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;
  private readonly idempotencyKey?: () => string;

  constructor(baseUrl: string, options: ClientOptions = {}) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
    this.idempotencyKey = options.idempotencyKey;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.base + path);
    return unwrap<T>(resp);
  }

  private async post<T>(
    path: string,
    body: Json,
    idempotent = false,
  ): Promise<T> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
    };
    if (idempotent && this.idempotencyKey) {
      headers["Idempotency-Key"] = this.idempotencyKey();
    }
    const resp = await this.fetchImpl(this.base + path, {
      method: "POST",
      headers,
      body: JSON.stringify(body),
    });
    return unwrap<T>(resp);
  }

  async uploadCsv(
    csv: string,
    name = "table",
  ): Promise<{ session_id: string; concepts: Concept[] }> {
    const resp = await this.fetchImpl(
      `${this.base}/sessions?name=${encodeURIComponent(name)}`,
      {
        method: "POST",
        headers: { "Content-Type": "text/csv" },
        body: csv,
      },
    );
    return unwrap(resp);
  }

  getSession(sessionId: string): Promise<SessionSummary> {
    return this.get(`/sessions/${sessionId}`);
  }

  getTable(sessionId: string, offset = 0, limit = 100): Promise<TablePage> {
    return this.get(
      `/sessions/${sessionId}/table?offset=${offset}&limit=${limit}`,
    );
  }

  getTemplates(): Promise<{ templates: TemplateInfo[] }> {
    return this.get("/templates");
  }

  createCustomConcept(
    sessionId: string,
    name: string,
    examples: Json[],
  ): Promise<{ concept: Concept }> {
    return this.post(
      `/sessions/${sessionId}/concepts/custom`,
      { name, examples },
      true,
    );
  }

  derivePreview(
    sessionId: string,
    sourceIds: string[],
    description: string,
  ): Promise<{ candidates: CandidateFormula[] }> {
    return this.post(`/sessions/${sessionId}/concepts/derive/preview`, {
      source_ids: sourceIds,
      description,
    });
  }

  deriveCommit(
    sessionId: string,
    name: string,
    sourceIds: string[],
    description: string,
    formulaText: string,
  ): Promise<{ concept: Concept; table: TablePage }> {
    return this.post(
      `/sessions/${sessionId}/concepts/derive`,
      {
        name,
        source_ids: sourceIds,
        description,
        formula_text: formulaText,
      },
      true,
    );
  }

  formulate(
    sessionId: string,
    templateId: string,
    encodings: EncodingPayload[],
  ): Promise<FormulateOutcome> {
    return this.post(`/sessions/${sessionId}/formulate`, {
      template_id: templateId,
      encodings: encodings as unknown as Json,
    });
  }

  formulateComplete(
    sessionId: string,
    templateId: string,
    encodings: EncodingPayload[],
    exampleRows: Json[][],
  ): Promise<FormulateReady> {
    return this.post(`/sessions/${sessionId}/formulate/complete`, {
      template_id: templateId,
      encodings: encodings as unknown as Json,
      example_rows: exampleRows,
    });
  }

  saveChart(
    sessionId: string,
    templateId: string,
    encodings: EncodingPayload[],
    options: {
      exampleRows?: Json[][];
      candidateIndex?: number;
      sessionVersion?: number;
    } = {},
  ): Promise<{
    chart_id: string;
    session_version: number;
    concepts: Concept[];
    current_table: TablePage;
  }> {
    return this.post(
      `/sessions/${sessionId}/charts/save`,
      {
        template_id: templateId,
        encodings: encodings as unknown as Json,
        example_rows: (options.exampleRows ?? null) as Json,
        candidate_index: options.candidateIndex ?? 0,
        session_version: options.sessionVersion ?? null,
      },
      true,
    );
  }
}

export type { ChartCandidate };
