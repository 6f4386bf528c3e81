/** Application wiring: build the store and mount every panel. */

import { ApiClient } from "./api.js";
import { CandidateReview } from "./components/candidateReview.js";
import { ChartBuilder } from "./components/chartBuilder.js";
import { ConceptShelf } from "./components/conceptShelf.js";
import { DataView } from "./components/dataView.js";
import { DeriveDialog } from "./components/deriveDialog.js";
import { ExampleDialog } from "./components/exampleDialog.js";
import { el } from "./dom.js";
import { Store } from "./store.js";

export interface App {
  root: HTMLElement;
  store: Store;
}

export function createApp(baseUrl: string): App {
  const client = new ApiClient(baseUrl, {
    idempotencyKey: () => crypto.randomUUID(),
  });
  const store = new Store(client);

  const upload = el("div.upload-panel");
  const file = el("input.upload-input", { type: "file", accept: ".csv" });
  const button = el(
    "button.upload-button",
    {
      click: () => {
        const chosen = file.files?.[0];
        if (!chosen) return;
        void chosen.text().then((text) =>
          store.uploadCsv(text, chosen.name.replace(/\.csv$/i, "")),
        );
      },
    },
    ["Upload CSV"],
  );
  upload.append(file, button);

  const errorBar = el("div.error-bar");
  store.subscribe((state) => {
    errorBar.textContent = state.error ?? "";
    errorBar.hidden = state.error === null;
  });

  const root = el("div.conceptviz-app", {}, [
    upload,
    errorBar,
    new ConceptShelf(store).root,
    new ChartBuilder(store).root,
    new ExampleDialog(store).root,
    new DeriveDialog(store).root,
    new CandidateReview(store).root,
    new DataView(store).root,
  ]);
  return { root, store };
}
