/**
 * Minimal virtual-node layer.
 *
 * Views are pure functions from payloads to trees of these nodes, which
 * keeps them testable without a DOM: the contract tests walk the tree and
 * compare attribute values against the stub payload byte for byte.  The
 * app mounts a tree by serializing it to HTML.
 */

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: Array<VNode | string>;
}

export function h(tag: string, attrs: Record<string, string> = {},
                  ...children: Array<VNode | string | null | undefined>): VNode {
  const kept: Array<VNode | string> = [];
  for (const child of children) {
    if (child !== null && child !== undefined) kept.push(child);
  }
  return { tag, attrs, children: kept };
}

const VOID_TAGS = new Set(["br", "hr", "img", "input", "meta", "link"]);

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function render(node: VNode | string): string {
  if (typeof node === "string") return escapeHtml(node);
  const attrs = Object.entries(node.attrs)
    .map(([key, value]) => ` ${key}="${escapeHtml(value)}"`)
    .join("");
  if (VOID_TAGS.has(node.tag)) return `<${node.tag}${attrs}>`;
  const inner = node.children.map(render).join("");
  return `<${node.tag}${attrs}>${inner}</${node.tag}>`;
}

/** Depth-first search in document order; handy for tests and wiring. */
export function findAll(node: VNode,
                        pred: (n: VNode) => boolean): VNode[] {
  const hits: VNode[] = [];
  const walk = (n: VNode) => {
    if (pred(n)) hits.push(n);
    for (const child of n.children) {
      if (typeof child !== "string") walk(child);
    }
  };
  walk(node);
  return hits;
}

export function findByClass(node: VNode, cls: string): VNode[] {
  return findAll(node, n => (n.attrs.class ?? "").split(" ").includes(cls));
}

/** Concatenated text content of a subtree. */
export function text(node: VNode | string): string {
  if (typeof node === "string") return node;
  return node.children.map(text).join("");
}
