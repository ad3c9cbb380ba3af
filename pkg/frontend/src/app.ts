/** Session loop: fetch a HIT, collect verdicts, submit, fetch the next. */

import { AnnotationClient, QualificationError } from "./api.js";
import { HitSession } from "./hit_state.js";
import { renderHit, renderMessage } from "./render.js";
import type { RelationTable, SubmitResult } from "./types.js";

export interface AppConfig {
  lang: string;
  annotator: string;
}

export class AnnotationApp {
  readonly root: HTMLElement;
  readonly client: AnnotationClient;
  readonly config: AppConfig;
  session: HitSession | null = null;
  private relations: RelationTable = {};
  private submitting = false;

  constructor(root: HTMLElement, client: AnnotationClient, config: AppConfig) {
    this.root = root;
    this.client = client;
    this.config = config;
  }

  async start(): Promise<void> {
    try {
      this.relations = await this.client.relations(this.config.lang);
      await this.loadNext();
    } catch (err) {
      this.showError(err);
    }
  }

  async loadNext(): Promise<void> {
    const hit = await this.client.nextHit(this.config.lang, this.config.annotator);
    if (hit === null) {
      this.session = null;
      renderMessage(this.root, "done", "no open tasks for this language — all caught up");
      return;
    }
    this.session = new HitSession(hit, this.config.annotator);
    this.draw();
  }

  private draw(): void {
    if (!this.session) {
      return;
    }
    renderHit(
      this.root,
      this.session,
      this.relations,
      { onSubmit: () => void this.submit() },
      { submitting: this.submitting },
    );
  }

  /** Post every answer, then move on; server-side dedupe makes retries safe. */
  async submit(): Promise<SubmitResult[] | null> {
    if (!this.session || this.submitting || !this.session.complete()) {
      return null;
    }
    this.submitting = true;
    this.draw();
    try {
      const results = await this.client.submitAll(this.session.payload());
      await this.loadNext();
      return results;
    } catch (err) {
      this.showError(err);
      return null;
    } finally {
      this.submitting = false;
    }
  }

  private showError(err: unknown): void {
    const text =
      err instanceof QualificationError
        ? `not qualified: ${err.message}`
        : `request failed: ${err instanceof Error ? err.message : String(err)}`;
    renderMessage(this.root, "error", text);
  }
}
