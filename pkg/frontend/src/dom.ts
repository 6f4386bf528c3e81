/** Tiny DOM construction helper: el("div.card", {title: "x"}, children). */

type TagOf<S extends string> = S extends `${infer T}.${string}` ? T : S;
type ElementOf<S extends string> =
  TagOf<S> extends keyof HTMLElementTagNameMap
    ? HTMLElementTagNameMap[TagOf<S>]
    : HTMLElement;

export function el<S extends string>(
  spec: S,
  attrs: Record<string, string | boolean | ((ev: Event) => void)> = {},
  children: (Node | string)[] = [],
): ElementOf<S> {
  const [tag, ...classes] = spec.split(".");
  const node = document.createElement(tag as string) as ElementOf<S>;
  if (classes.length) node.className = classes.join(" ");
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      node.addEventListener(key, value);
    } else if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
      else node.removeAttribute(key);
      if (key === "disabled") {
        (node as unknown as { disabled: boolean }).disabled = value;
      }
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}
