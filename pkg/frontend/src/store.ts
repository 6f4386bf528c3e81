/** Client-side session state.
 *
 * The store is a thin mirror of the service: every mutation goes through
 * the API and is followed by a re-fetch, so local state is always
 * reconcilable with GET /sessions/{id}.  Candidate lists are kept exactly
 * as received — ordering and filtering are server decisions.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  CandidateFormula,
  ChartCandidate,
  Concept,
  EncodingPayload,
  Json,
  TablePage,
  TemplateInfo,
} from "./types.js";

export interface ExampleDialogState {
  columns: string[];
  /** Server-prefilled cells; null marks a blank the author must fill. */
  prefilled: (Json | null)[][];
  /** Author edits overlaying the blanks; same shape as `prefilled`. */
  edits: (Json | null)[][];
  sessionVersion: number;
  highlightMatches: boolean;
}

export interface DeriveDialogState {
  sourceIds: string[];
  description: string;
  candidates: CandidateFormula[] | null;
  selected: number;
  /** Author's in-place edit of the selected candidate, if any. */
  editedFormula: string | null;
  name: string;
  rejections: { formula_text: string; reason: string }[] | null;
  generating: boolean;
}

export interface UiState {
  sessionId: string | null;
  version: number;
  concepts: Concept[];
  table: TablePage | null;
  templates: TemplateInfo[];
  templateId: string | null;
  /** channel name -> concept id */
  encodings: Record<string, string>;
  dragConceptId: string | null;
  exampleDialog: ExampleDialogState | null;
  deriveDialog: DeriveDialogState | null;
  candidates: ChartCandidate[] | null;
  candidateVersion: number | null;
  /** Columns added by the most recent mutation, for data-view highlight. */
  newColumns: string[];
  savedChartIds: string[];
  error: string | null;
}

function initialState(): UiState {
  return {
    sessionId: null,
    version: 0,
    concepts: [],
    table: null,
    templates: [],
    templateId: null,
    encodings: {},
    dragConceptId: null,
    exampleDialog: null,
    deriveDialog: null,
    candidates: null,
    candidateVersion: null,
    newColumns: [],
    savedChartIds: [],
    error: null,
  };
}

export type Listener = (state: UiState) => void;

export class Store {
  private state: UiState = initialState();
  private listeners = new Set<Listener>();

  constructor(private readonly client: ApiClient) {}

  getState(): UiState {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private set(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  private fail(err: unknown): never {
    const message =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.set({ error: message });
    throw err;
  }

  // -- session lifecycle ----------------------------------------------------

  async uploadCsv(csv: string, name = "table"): Promise<void> {
    try {
      const { session_id } = await this.client.uploadCsv(csv, name);
      this.set({ ...initialState(), sessionId: session_id });
      const { templates } = await this.client.getTemplates();
      this.set({ templates });
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Re-fetch concepts and the working table from the service. */
  async refresh(): Promise<void> {
    const sid = this.requireSession();
    const [summary, table] = await Promise.all([
      this.client.getSession(sid),
      this.client.getTable(sid),
    ]);
    this.set({
      version: summary.version,
      concepts: summary.concepts,
      table,
      savedChartIds: summary.saved_charts.map(
        (c) => (c as { id: string }).id,
      ),
      error: null,
    });
  }

  private requireSession(): string {
    if (!this.state.sessionId) throw new Error("no active session");
    return this.state.sessionId;
  }

  // -- concept shelf --------------------------------------------------------

  async createCustomConcept(name: string, examples: Json[]): Promise<void> {
    const sid = this.requireSession();
    try {
      await this.client.createCustomConcept(sid, name, examples);
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
  }

  openDeriveDialog(sourceIds: string[]): void {
    this.set({
      deriveDialog: {
        sourceIds,
        description: "",
        candidates: null,
        selected: 0,
        editedFormula: null,
        name: "",
        rejections: null,
        generating: false,
      },
    });
  }

  updateDeriveDialog(patch: Partial<DeriveDialogState>): void {
    const dialog = this.state.deriveDialog;
    if (!dialog) return;
    this.set({ deriveDialog: { ...dialog, ...patch } });
  }

  async generateDerivation(): Promise<void> {
    const sid = this.requireSession();
    const dialog = this.state.deriveDialog;
    if (!dialog) return;
    this.updateDeriveDialog({ generating: true, rejections: null });
    try {
      const { candidates } = await this.client.derivePreview(
        sid,
        dialog.sourceIds,
        dialog.description,
      );
      // order preserved verbatim: the server already ranked them
      this.updateDeriveDialog({
        candidates,
        selected: 0,
        editedFormula: null,
        generating: false,
      });
    } catch (err) {
      if (err instanceof ApiError && err.code === "AllCandidatesRejected") {
        this.updateDeriveDialog({
          generating: false,
          rejections: err.details["rejections"] as DeriveDialogState["rejections"],
        });
        return;
      }
      this.updateDeriveDialog({ generating: false });
      this.fail(err);
    }
  }

  async confirmDerivation(): Promise<void> {
    const sid = this.requireSession();
    const dialog = this.state.deriveDialog;
    if (!dialog || !dialog.candidates) return;
    const chosen = dialog.candidates[dialog.selected];
    if (!chosen) return;
    const formula = dialog.editedFormula ?? chosen.formula_text;
    const before = this.state.table?.columns.map((c) => c.name) ?? [];
    try {
      await this.client.deriveCommit(
        sid,
        dialog.name,
        dialog.sourceIds,
        dialog.description,
        formula,
      );
      this.set({ deriveDialog: null });
      await this.refresh();
      const after = this.state.table?.columns.map((c) => c.name) ?? [];
      this.set({ newColumns: after.filter((c) => !before.includes(c)) });
    } catch (err) {
      this.fail(err);
    }
  }

  // -- chart builder --------------------------------------------------------

  setTemplate(templateId: string): void {
    this.set({ templateId, candidates: null });
  }

  beginDrag(conceptId: string): void {
    this.set({ dragConceptId: conceptId });
  }

  endDrag(): void {
    this.set({ dragConceptId: null });
  }

  dropConcept(channel: string, conceptId?: string): void {
    const id = conceptId ?? this.state.dragConceptId;
    if (!id) return;
    this.set({
      encodings: { ...this.state.encodings, [channel]: id },
      dragConceptId: null,
      candidates: null,
    });
  }

  removeEncoding(channel: string): void {
    const encodings = { ...this.state.encodings };
    delete encodings[channel];
    this.set({ encodings, candidates: null });
  }

  /** True when every required channel of the chosen template is filled. */
  canFormulate(): boolean {
    const template = this.state.templates.find(
      (t) => t.id === this.state.templateId,
    );
    if (!template) return false;
    return template.channels
      .filter((c) => c.required)
      .every((c) => c.name in this.state.encodings);
  }

  private encodingPayload(): EncodingPayload[] {
    return Object.entries(this.state.encodings).map(
      ([channel, conceptId]) => ({ channel, concept_id: conceptId }),
    );
  }

  async formulate(): Promise<void> {
    const sid = this.requireSession();
    if (!this.state.templateId || !this.canFormulate()) {
      throw new Error("required channels are not filled");
    }
    try {
      const outcome = await this.client.formulate(
        sid,
        this.state.templateId,
        this.encodingPayload(),
      );
      if (outcome.status === "needs_example_relation") {
        this.set({
          exampleDialog: {
            columns: outcome.columns,
            prefilled: outcome.prefilled_rows,
            edits: outcome.prefilled_rows.map((row) => row.map(() => null)),
            sessionVersion: outcome.session_version,
            highlightMatches: false,
          },
        });
        return;
      }
      this.set({
        candidates: outcome.candidates,
        candidateVersion: outcome.session_version,
      });
    } catch (err) {
      this.fail(err);
    }
  }

  editExampleCell(row: number, col: number, value: Json | null): void {
    const dialog = this.state.exampleDialog;
    if (!dialog) return;
    if (dialog.prefilled[row]?.[col] != null) {
      return; // prefilled cells are locked
    }
    const edits = dialog.edits.map((r) => [...r]);
    const target = edits[row];
    if (!target) return;
    target[col] = value;
    this.set({ exampleDialog: { ...dialog, edits } });
  }

  toggleHighlightMatches(): void {
    const dialog = this.state.exampleDialog;
    if (!dialog) return;
    this.set({
      exampleDialog: {
        ...dialog,
        highlightMatches: !dialog.highlightMatches,
      },
    });
  }

  exampleRows(): (Json | null)[][] | null {
    const dialog = this.state.exampleDialog;
    if (!dialog) return null;
    return dialog.prefilled.map((row, i) =>
      row.map((cell, j) => cell ?? dialog.edits[i]?.[j] ?? null),
    );
  }

  /** At least two fully filled rows are needed before submitting. */
  canSubmitExample(): boolean {
    const rows = this.exampleRows();
    if (!rows) return false;
    const complete = rows.filter((r) => r.every((c) => c != null));
    return complete.length >= 2;
  }

  async submitExample(): Promise<void> {
    const sid = this.requireSession();
    const dialog = this.state.exampleDialog;
    if (!dialog || !this.state.templateId || !this.canSubmitExample()) {
      throw new Error("need at least two complete example rows");
    }
    const rows = this.exampleRows()!.filter((r) =>
      r.every((c) => c != null),
    ) as Json[][];
    try {
      const outcome = await this.client.formulateComplete(
        sid,
        this.state.templateId,
        this.encodingPayload(),
        rows,
      );
      this.rememberExampleRows(rows);
      this.set({
        exampleDialog: null,
        candidates: outcome.candidates,
        candidateVersion: outcome.session_version,
      });
    } catch (err) {
      this.fail(err);
    }
  }

  async saveChart(candidateIndex: number): Promise<void> {
    const sid = this.requireSession();
    const dialogRows = this.state.candidates ? null : this.exampleRows();
    if (!this.state.templateId) throw new Error("no template selected");
    const before = this.state.table?.columns.map((c) => c.name) ?? [];
    try {
      await this.client.saveChart(
        sid,
        this.state.templateId,
        this.encodingPayload(),
        {
          exampleRows: (dialogRows ?? this.lastExampleRows) as
            | Json[][]
            | undefined,
          candidateIndex,
          sessionVersion: this.state.candidateVersion ?? undefined,
        },
      );
      this.set({ candidates: null, candidateVersion: null, encodings: {} });
      await this.refresh();
      const after = this.state.table?.columns.map((c) => c.name) ?? [];
      this.set({ newColumns: after.filter((c) => !before.includes(c)) });
    } catch (err) {
      this.fail(err);
    }
  }

  private lastExampleRows: Json[][] | undefined;

  /** Remember the example rows that produced the current candidates, so the
   * stateless save call can replay them. */
  rememberExampleRows(rows: Json[][]): void {
    this.lastExampleRows = rows;
  }
}
