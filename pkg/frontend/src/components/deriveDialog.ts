/** Derive dialog: description box, generate button, and a candidate pager
 * showing each candidate's formula next to its sample-output table, with
 * edit-in-place.  Rejection reasons are listed when every completion was
 * filtered out. */

import { clear, el } from "../dom.js";
import type { Store } from "../store.js";

export class DeriveDialog {
  readonly root: HTMLElement;

  constructor(private readonly store: Store) {
    this.root = el("div.derive-dialog");
    store.subscribe(() => this.render());
    this.render();
  }

  private render(): void {
    clear(this.root);
    const state = this.store.getState();
    const dialog = state.deriveDialog;
    this.root.hidden = dialog === null;
    if (!dialog) return;

    const sourceNames = dialog.sourceIds
      .map((id) => state.concepts.find((c) => c.id === id)?.name ?? id)
      .join(", ");
    this.root.append(el("p.derive-sources", {}, [`from: ${sourceNames}`]));

    this.root.append(
      el("input.derive-name", {
        placeholder: "new concept name",
        value: dialog.name,
        input: (ev) =>
          this.store.updateDeriveDialog({
            name: (ev.target as HTMLInputElement).value,
          }),
      }),
    );
    this.root.append(
      el("textarea.derive-description", {
        placeholder: "describe the computation",
        input: (ev) =>
          this.store.updateDeriveDialog({
            description: (ev.target as HTMLTextAreaElement).value,
          }),
      }),
    );
    this.root.append(
      el(
        "button.derive-generate",
        {
          disabled: dialog.generating,
          click: () => void this.store.generateDerivation(),
        },
        [dialog.generating ? "generating…" : "generate"],
      ),
    );

    if (dialog.rejections) {
      const list = el("ul.derive-rejections");
      for (const r of dialog.rejections) {
        list.append(
          el("li", {}, [`${r.formula_text} — ${r.reason}`]),
        );
      }
      this.root.append(list);
    }

    if (dialog.candidates) {
      const pager = el("div.candidate-pager", {}, [
        el(
          "button.candidate-prev",
          {
            disabled: dialog.selected === 0,
            click: () =>
              this.store.updateDeriveDialog({
                selected: dialog.selected - 1,
                editedFormula: null,
              }),
          },
          ["◀"],
        ),
        el("span.candidate-index", {}, [
          `${dialog.selected + 1} / ${dialog.candidates.length}`,
        ]),
        el(
          "button.candidate-next",
          {
            disabled: dialog.selected >= dialog.candidates.length - 1,
            click: () =>
              this.store.updateDeriveDialog({
                selected: dialog.selected + 1,
                editedFormula: null,
              }),
          },
          ["▶"],
        ),
      ]);
      this.root.append(pager);

      const candidate = dialog.candidates[dialog.selected];
      if (candidate) {
        const code = el("textarea.candidate-code", {
          input: (ev) =>
            this.store.updateDeriveDialog({
              editedFormula: (ev.target as HTMLTextAreaElement).value,
            }),
        });
        code.value = dialog.editedFormula ?? candidate.formula_text;
        this.root.append(code);

        const samples = el("table.candidate-samples");
        for (const s of candidate.sample_outputs) {
          samples.append(
            el("tr", {}, [
              el("td", {}, [s.inputs.map(String).join(", ")]),
              el("td.sample-output", {}, [String(s.output)]),
            ]),
          );
        }
        this.root.append(samples);
      }

      this.root.append(
        el(
          "button.derive-confirm",
          {
            disabled: dialog.name.trim() === "",
            click: () => void this.store.confirmDerivation(),
          },
          ["confirm"],
        ),
      );
    }
  }
}
