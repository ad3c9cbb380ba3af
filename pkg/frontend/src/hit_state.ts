/** Answer tracking for one HIT.
 *
 * Broken items never block submission and never enter the payload; the
 * remaining items all need an answer before the session is complete.
 */

import { isBroken } from "./segments.js";
import type { Hit, HitItem, Judgment } from "./types.js";

export class HitSession {
  readonly hit: Hit;
  readonly annotatorId: string;
  private answers = new Map<string, boolean>();

  constructor(hit: Hit, annotatorId: string) {
    this.hit = hit;
    this.annotatorId = annotatorId;
  }

  broken(item: HitItem): boolean {
    return isBroken(item);
  }

  answerable(): HitItem[] {
    return this.hit.items.filter((it) => !isBroken(it));
  }

  answer(tripletId: string, verdict: boolean): void {
    const item = this.hit.items.find((it) => it.triplet_id === tripletId);
    if (!item || isBroken(item)) {
      return;
    }
    this.answers.set(tripletId, verdict);
  }

  answerOf(tripletId: string): boolean | undefined {
    return this.answers.get(tripletId);
  }

  answeredCount(): number {
    return this.answers.size;
  }

  /** True once every answerable item has a verdict (and there is at least one). */
  complete(): boolean {
    const pool = this.answerable();
    return pool.length > 0 && pool.every((it) => this.answers.has(it.triplet_id));
  }

  /** One judgment per answerable item, in served order. */
  payload(): Judgment[] {
    return this.answerable().map((it) => ({
      triplet_id: it.triplet_id,
      annotator_id: this.annotatorId,
      verdict: this.answers.get(it.triplet_id) as boolean,
    }));
  }
}
