/** Example-relation dialog.
 *
 * Server-prefilled cells are locked; blanks are editable.  Submission
 * requires at least two complete rows.  The dialog reminds the author that
 * values must come verbatim from the input table and offers a toggle that
 * highlights matching rows in the data view.
 */

import { clear, el } from "../dom.js";
import type { Store } from "../store.js";

export const VERBATIM_HINT =
  "Example values must appear verbatim in the input table — " +
  "exact cell values, not plausible ones.";

export class ExampleDialog {
  readonly root: HTMLElement;

  constructor(private readonly store: Store) {
    this.root = el("div.example-dialog");
    store.subscribe(() => this.render());
    this.render();
  }

  private render(): void {
    clear(this.root);
    const dialog = this.store.getState().exampleDialog;
    this.root.hidden = dialog === null;
    if (!dialog) return;

    this.root.append(el("p.verbatim-hint", {}, [VERBATIM_HINT]));

    const highlight = el("label.highlight-toggle", {}, [
      el("input", {
        type: "checkbox",
        checked: dialog.highlightMatches,
        change: () => this.store.toggleHighlightMatches(),
      }),
      "highlight matching rows",
    ]);
    this.root.append(highlight);

    const table = el("table.example-grid");
    const head = el("tr");
    for (const column of dialog.columns) {
      head.append(el("th", {}, [column]));
    }
    table.append(head);

    dialog.prefilled.forEach((row, i) => {
      const tr = el("tr");
      row.forEach((cell, j) => {
        const locked = cell != null;
        const input = el("input.example-cell", {
          "data-row": String(i),
          "data-col": String(j),
          input: (ev) => {
            const text = (ev.target as HTMLInputElement).value;
            const n = Number(text);
            this.store.editExampleCell(
              i,
              j,
              text === "" ? null : Number.isFinite(n) ? n : text,
            );
          },
        });
        if (locked) {
          input.value = String(cell);
          input.readOnly = true;
          input.classList.add("locked");
        } else {
          const edit = dialog.edits[i]?.[j];
          if (edit != null) input.value = String(edit);
        }
        tr.append(el("td", {}, [input]));
      });
      table.append(tr);
    });
    this.root.append(table);

    this.root.append(
      el(
        "button.submit-example",
        {
          disabled: !this.store.canSubmitExample(),
          click: () => void this.store.submitExample(),
        },
        ["Formulate with examples"],
      ),
    );
  }
}
