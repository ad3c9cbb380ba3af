/** Wire types for the triplet validation HTTP API. */

export interface Span {
  start: number;
  end: number;
}

export interface HitItem {
  triplet_id: string;
  text: string;
  subject: Span;
  object: Span;
  /** Relation identifier (a vocabulary pid, e.g. "P131"). */
  relation: string;
}

export interface Hit {
  hit_id: string;
  lang: string;
  items: HitItem[];
}

export interface Judgment {
  triplet_id: string;
  annotator_id: string;
  verdict: boolean;
}

export interface SubmitResult {
  accepted: boolean;
  duplicate: boolean;
}

export interface RelationInfo {
  name: string;
  description: string;
}

export type RelationTable = Record<string, RelationInfo>;

export interface Progress {
  lang: string;
  hits_total: number;
  hits_complete: number;
  triplets_total: number;
  triplets_done: number;
  triplets_pending: number;
  triplets_untouched: number;
  judgments: number;
}
