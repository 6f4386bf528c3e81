/** Candidate review: renders each chart candidate with its provenance
 * (reshaping program and formulas) and its derived table, in exactly the
 * order the service returned them.  SAVE commits the chosen candidate. */

import { clear, el } from "../dom.js";
import type { Store } from "../store.js";
import { renderChart } from "./chartView.js";

export class CandidateReview {
  readonly root: HTMLElement;

  constructor(private readonly store: Store) {
    this.root = el("div.candidate-review");
    store.subscribe(() => this.render());
    this.render();
  }

  private render(): void {
    clear(this.root);
    const state = this.store.getState();
    this.root.hidden = state.candidates === null;
    if (!state.candidates) return;

    state.candidates.forEach((candidate, position) => {
      const card = el("div.candidate-card", {
        "data-candidate-index": String(candidate.index),
      });
      const chart = el("div.candidate-chart");
      void renderChart(chart, candidate.spec);
      card.append(chart);

      card.append(
        el("pre.candidate-program", {}, [
          candidate.provenance.reshape_program,
        ]),
      );
      for (const [name, formula] of candidate.provenance.formulas) {
        card.append(el("pre.candidate-formula", {}, [`${name}: ${formula}`]));
      }

      const grid = el("table.candidate-table");
      const head = el("tr");
      for (const column of candidate.table.columns) {
        head.append(el("th", {}, [column.name]));
      }
      grid.append(head);
      for (const record of candidate.table.rows.slice(0, 10)) {
        const tr = el("tr");
        for (const column of candidate.table.columns) {
          const v = record[column.name];
          tr.append(el("td", {}, [v == null ? "" : String(v)]));
        }
        grid.append(tr);
      }
      card.append(grid);

      card.append(
        el(
          "button.save-candidate",
          { click: () => void this.store.saveChart(position) },
          ["SAVE"],
        ),
      );
      this.root.append(card);
    });
  }
}
