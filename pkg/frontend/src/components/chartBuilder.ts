/** Chart builder: template picker, one drop shelf per channel, and the
 * FORMULATE button (disabled until every required channel is filled). */

import { clear, el } from "../dom.js";
import type { Store } from "../store.js";

export class ChartBuilder {
  readonly root: HTMLElement;

  constructor(private readonly store: Store) {
    this.root = el("div.chart-builder");
    store.subscribe(() => this.render());
    this.render();
  }

  private render(): void {
    clear(this.root);
    const state = this.store.getState();

    const picker = el("select.template-picker", {
      change: (ev) =>
        this.store.setTemplate((ev.target as HTMLSelectElement).value),
    });
    picker.append(el("option", { value: "" }, ["choose a chart…"]));
    for (const t of state.templates) {
      const opt = el("option", { value: t.id }, [t.id]);
      if (t.id === state.templateId) opt.selected = true;
      picker.append(opt);
    }
    this.root.append(picker);

    const template = state.templates.find((t) => t.id === state.templateId);
    if (template) {
      for (const channel of template.channels) {
        this.root.append(this.channelShelf(channel.name, channel.required));
      }
    }

    this.root.append(
      el(
        "button.formulate",
        {
          disabled: !this.store.canFormulate(),
          click: () => void this.store.formulate(),
        },
        ["FORMULATE"],
      ),
    );
  }

  private channelShelf(channel: string, required: boolean): HTMLElement {
    const state = this.store.getState();
    const conceptId = state.encodings[channel];
    const concept = state.concepts.find((c) => c.id === conceptId);
    const shelf = el(
      "div.channel-shelf",
      {
        "data-channel": channel,
        dragover: (ev) => ev.preventDefault(),
        drop: (ev) => {
          ev.preventDefault();
          this.store.dropConcept(channel);
        },
      },
      [
        el("span.channel-name", {}, [
          `${channel}${required ? " *" : ""}`,
        ]),
      ],
    );
    if (concept) {
      shelf.append(
        el("span.encoded-chip", { "data-concept-id": concept.id }, [
          concept.name,
        ]),
        el(
          "button.remove-encoding",
          { click: () => this.store.removeEncoding(channel) },
          ["✕"],
        ),
      );
    }
    return shelf;
  }
}
