/** Paged working-table grid.  Newly created columns are highlighted, and
 * when the example dialog's "highlight matching rows" toggle is on, rows
 * containing any of the dialog's cell values are marked. */

import { clear, el } from "../dom.js";
import type { Store } from "../store.js";
import type { Json } from "../types.js";

function cellText(v: Json): string {
  return v === null ? "" : String(v);
}

export class DataView {
  readonly root: HTMLElement;

  constructor(private readonly store: Store) {
    this.root = el("div.data-view");
    store.subscribe(() => this.render());
    this.render();
  }

  private dialogValues(): Set<string> {
    const dialog = this.store.getState().exampleDialog;
    if (!dialog || !dialog.highlightMatches) return new Set();
    const values = new Set<string>();
    const rows = this.store.exampleRows() ?? [];
    for (const row of rows) {
      for (const cell of row) {
        if (cell != null) values.add(String(cell));
      }
    }
    return values;
  }

  private render(): void {
    clear(this.root);
    const state = this.store.getState();
    if (!state.table) return;
    const highlightValues = this.dialogValues();

    const table = el("table.data-grid");
    const head = el("tr");
    for (const column of state.table.columns) {
      const th = el("th", {}, [column.name]);
      if (state.newColumns.includes(column.name)) {
        th.classList.add("new-column");
      }
      head.append(th);
    }
    table.append(head);

    for (const record of state.table.rows) {
      const tr = el("tr");
      let matches = false;
      for (const column of state.table.columns) {
        const text = cellText(record[column.name] ?? null);
        if (highlightValues.has(text)) matches = true;
        const td = el("td", {}, [text]);
        if (state.newColumns.includes(column.name)) {
          td.classList.add("new-column");
        }
        tr.append(td);
      }
      if (matches) tr.classList.add("match-highlight");
      table.append(tr);
    }
    this.root.append(table);
    this.root.append(
      el("p.row-count", {}, [`${state.table.total_rows} rows`]),
    );
  }
}
