/** Concept shelf: one draggable chip per concept, a "new ⊕" card for
 * custom concepts, and a multi-select + derive entry point. */

import { clear, el } from "../dom.js";
import type { Store } from "../store.js";
import type { Concept, Json } from "../types.js";

export function parseExampleValues(text: string): Json[] {
  return text
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => {
      const n = Number(s);
      return Number.isFinite(n) && s !== "" ? n : s;
    });
}

export class ConceptShelf {
  readonly root: HTMLElement;
  private selected = new Set<string>();

  constructor(private readonly store: Store) {
    this.root = el("div.concept-shelf");
    store.subscribe(() => this.render());
    this.render();
  }

  private chip(concept: Concept): HTMLElement {
    const chip = el(
      "div.concept-chip",
      {
        draggable: "true",
        "data-concept-id": concept.id,
        "data-kind": concept.kind,
        dragstart: () => this.store.beginDrag(concept.id),
        dragend: () => this.store.endDrag(),
      },
      [
        el("span.concept-name", {}, [concept.name]),
        el("span.concept-status", {}, [
          concept.known ? "known" : "unknown",
        ]),
      ],
    );
    chip.classList.add(concept.known ? "known" : "unknown");
    const box = el("input", {
      type: "checkbox",
      "data-select": concept.id,
      change: (ev) => {
        const checked = (ev.target as HTMLInputElement).checked;
        if (checked) this.selected.add(concept.id);
        else this.selected.delete(concept.id);
        this.syncDeriveButton();
      },
    });
    chip.prepend(box);
    return chip;
  }

  private syncDeriveButton(): void {
    const button = this.root.querySelector<HTMLButtonElement>(
      "button.derive-selected",
    );
    if (button) button.disabled = this.selected.size === 0;
  }

  private newCard(): HTMLElement {
    const name = el("input.new-concept-name", {
      placeholder: "concept name",
    });
    const examples = el("input.new-concept-examples", {
      placeholder: "example values, comma separated",
    });
    const create = el(
      "button.new-concept-create",
      {
        click: () => {
          void this.store.createCustomConcept(
            name.value,
            parseExampleValues(examples.value),
          );
        },
      },
      ["new ⊕"],
    );
    return el("div.new-concept-card", {}, [name, examples, create]);
  }

  private render(): void {
    clear(this.root);
    const state = this.store.getState();
    this.selected = new Set(
      [...this.selected].filter((id) =>
        state.concepts.some((c) => c.id === id),
      ),
    );
    for (const concept of state.concepts) {
      this.root.append(this.chip(concept));
    }
    this.root.append(this.newCard());
    this.root.append(
      el(
        "button.derive-selected",
        {
          disabled: this.selected.size === 0,
          click: () => this.store.openDeriveDialog([...this.selected]),
        },
        ["derive from selected"],
      ),
    );
  }
}
