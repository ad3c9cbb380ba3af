/** DOM construction for one HIT page.
 *
 * Layout is deliberately plain: a numbered list of task cards, each with
 * the context paragraph (subject and object marked), the relation label
 * with its description on hover, and a true/false pair. The submit button
 * stays disabled until every working item has an answer.
 */

import { segmentItem } from "./segments.js";
import type { HitSession } from "./hit_state.js";
import type { HitItem, RelationTable } from "./types.js";

export interface RenderHandlers {
  onSubmit: () => void;
}

export function relationName(relations: RelationTable, pid: string): string {
  return relations[pid]?.name ?? pid;
}

export function relationDescription(relations: RelationTable, pid: string): string {
  return relations[pid]?.description ?? "";
}

function el<K extends keyof HTMLElementTagNameMap>(
  root: HTMLElement,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = root.ownerDocument.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderContext(root: HTMLElement, item: HitItem): HTMLElement {
  const p = el(root, "p", "context");
  for (const seg of segmentItem(item)) {
    if (seg.role === "plain") {
      p.appendChild(root.ownerDocument.createTextNode(seg.text));
    } else {
      const mark = el(root, "mark", seg.role, seg.text);
      p.appendChild(mark);
    }
  }
  return p;
}

function renderVerdict(
  root: HTMLElement,
  session: HitSession,
  item: HitItem,
  rerender: () => void,
): HTMLElement {
  const wrap = el(root, "div", "verdict");
  for (const verdict of [true, false]) {
    const current = session.answerOf(item.triplet_id);
    const cls = "verdict-btn" + (current === verdict ? " selected" : "");
    const btn = el(root, "button", cls, verdict ? "true" : "false");
    btn.type = "button";
    btn.dataset.verdict = String(verdict);
    btn.addEventListener("click", () => {
      session.answer(item.triplet_id, verdict);
      rerender();
    });
    wrap.appendChild(btn);
  }
  return wrap;
}

function renderTask(
  root: HTMLElement,
  session: HitSession,
  relations: RelationTable,
  item: HitItem,
  index: number,
  rerender: () => void,
): HTMLElement {
  const broken = session.broken(item);
  const li = el(root, "li", "task" + (broken ? " broken" : ""));
  li.dataset.tripletId = item.triplet_id;

  const total = session.hit.items.length;
  li.appendChild(el(root, "div", "progress", `${index + 1} / ${total}`));
  li.appendChild(renderContext(root, item));

  const line = el(root, "div", "relation-line");
  const label = el(root, "span", "relation-label", relationName(relations, item.relation));
  const description = relationDescription(relations, item.relation);
  label.title = description;
  label.dataset.description = description;
  line.appendChild(label);
  li.appendChild(line);

  if (broken) {
    li.appendChild(
      el(root, "p", "broken-note", "span offsets do not fit this text; item excluded"),
    );
  } else {
    li.appendChild(renderVerdict(root, session, item, rerender));
  }
  return li;
}

export interface RenderState {
  submitting: boolean;
}

export function renderHit(
  root: HTMLElement,
  session: HitSession,
  relations: RelationTable,
  handlers: RenderHandlers,
  state: RenderState = { submitting: false },
): void {
  const rerender = () => renderHit(root, session, relations, handlers, state);
  root.replaceChildren();

  const header = el(root, "div", "hit-header");
  header.appendChild(el(root, "h2", "hit-id", session.hit.hit_id));
  header.appendChild(el(root, "span", "hit-lang", session.hit.lang));
  root.appendChild(header);

  const list = el(root, "ol", "tasks");
  session.hit.items.forEach((item, i) => {
    list.appendChild(renderTask(root, session, relations, item, i, rerender));
  });
  root.appendChild(list);

  const footer = el(root, "div", "hit-footer");
  const answered = session.answeredCount();
  const total = session.answerable().length;
  footer.appendChild(el(root, "span", "answered-count", `${answered} / ${total} answered`));

  const submit = el(root, "button", "submit", state.submitting ? "submitting…" : "submit");
  submit.type = "button";
  submit.disabled = !session.complete() || state.submitting;
  submit.addEventListener("click", () => {
    if (submit.disabled) {
      return;
    }
    handlers.onSubmit();
  });
  footer.appendChild(submit);
  root.appendChild(footer);
}

export function renderMessage(root: HTMLElement, className: string, text: string): void {
  root.replaceChildren();
  root.appendChild(el(root, "p", className, text));
}
