/** Chart rendering via the embedded Vega-Lite runtime when available.
 *
 * The runtime is loaded lazily; in environments without it (tests, or a
 * build without the optional dependency) the spec is shown as formatted
 * JSON so the review flow still works. */

import { el } from "../dom.js";
import type { Json } from "../types.js";

type EmbedFn = (
  node: HTMLElement,
  spec: Record<string, Json>,
  options?: Record<string, Json>,
) => Promise<unknown>;

let embedLoader: Promise<EmbedFn | null> | null = null;

function loadEmbed(): Promise<EmbedFn | null> {
  if (!embedLoader) {
    embedLoader = import("vega-embed")
      .then((mod) => (mod.default ?? mod) as unknown as EmbedFn)
      .catch(() => null);
  }
  return embedLoader;
}

/** For tests: force the fallback path or inject a fake runtime. */
export function setEmbedForTesting(fn: EmbedFn | null): void {
  embedLoader = Promise.resolve(fn);
}

export async function renderChart(
  node: HTMLElement,
  spec: Record<string, Json>,
): Promise<void> {
  const embed = await loadEmbed();
  if (embed) {
    try {
      await embed(node, spec, { actions: false });
      return;
    } catch {
      // fall through to the JSON fallback
    }
  }
  node.append(
    el("pre.spec-fallback", {}, [JSON.stringify(spec, null, 2)]),
  );
}
