/** Split an item's text into plain and highlighted runs.
 *
 * The one rule that matters: a highlighted run must be exactly the slice
 * the server pointed at, text[start:end]. Anything that would force us to
 * bend that rule (a span out of bounds, subject and object overlapping)
 * marks the item broken instead; broken items render flagged and are left
 * out of the submission payload.
 */

import type { HitItem, Span } from "./types.js";

export type Role = "plain" | "subject" | "object";

export interface Segment {
  text: string;
  role: Role;
}

export function spanInBounds(span: Span, textLength: number): boolean {
  return (
    Number.isInteger(span.start) &&
    Number.isInteger(span.end) &&
    span.start >= 0 &&
    span.end <= textLength &&
    span.start < span.end
  );
}

function overlap(a: Span, b: Span): boolean {
  return a.start < b.end && b.start < a.end;
}

export function isBroken(item: HitItem): boolean {
  const n = item.text.length;
  return (
    !spanInBounds(item.subject, n) ||
    !spanInBounds(item.object, n) ||
    overlap(item.subject, item.object)
  );
}

/** Ordered runs covering the whole text; concatenation restores it. */
export function segmentItem(item: HitItem): Segment[] {
  if (isBroken(item)) {
    return [{ text: item.text, role: "plain" }];
  }
  const marks: { span: Span; role: Role }[] = [
    { span: item.subject, role: "subject" },
    { span: item.object, role: "object" },
  ];
  marks.sort((a, b) => a.span.start - b.span.start);

  const out: Segment[] = [];
  let cursor = 0;
  for (const { span, role } of marks) {
    if (span.start > cursor) {
      out.push({ text: item.text.slice(cursor, span.start), role: "plain" });
    }
    out.push({ text: item.text.slice(span.start, span.end), role });
    cursor = span.end;
  }
  if (cursor < item.text.length) {
    out.push({ text: item.text.slice(cursor), role: "plain" });
  }
  return out;
}
