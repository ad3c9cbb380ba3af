/** Typed client over the validation service's HTTP API.
 *
 * Submission is safe to retry: the server deduplicates on
 * (triplet_id, annotator_id), so resending the same judgment after a
 * dropped connection can only come back as a duplicate, never as a
 * second count.
 */

import type { Hit, Judgment, Progress, RelationTable, SubmitResult } from "./types.js";

export class QualificationError extends Error {}

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  /** Injection point for tests; defaults to the global fetch. */
  fetchImpl?: FetchLike;
  /** Attempts per judgment before giving up on a network failure. */
  maxAttempts?: number;
  /** Pause between attempts; injectable so tests run instantly. */
  sleep?: (ms: number) => Promise<void>;
  retryDelayMs?: number;
}

const realSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class AnnotationClient {
  readonly baseUrl: string;
  private fetchImpl: FetchLike;
  private maxAttempts: number;
  private sleep: (ms: number) => Promise<void>;
  private retryDelayMs: number;

  constructor(baseUrl: string, options: ClientOptions = {}) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = options.fetchImpl ?? ((url, init) => fetch(url, init));
    this.maxAttempts = options.maxAttempts ?? 3;
    this.sleep = options.sleep ?? realSleep;
    this.retryDelayMs = options.retryDelayMs ?? 500;
  }

  private async get(path: string): Promise<Response> {
    const resp = await this.fetchImpl(this.baseUrl + path);
    if (resp.status === 403) {
      throw new QualificationError(await errorDetail(resp));
    }
    return resp;
  }

  /** Next open HIT for this annotator, or null when none are left. */
  async nextHit(lang: string, annotator: string): Promise<Hit | null> {
    const q = `?lang=${encodeURIComponent(lang)}&annotator=${encodeURIComponent(annotator)}`;
    const resp = await this.get("/hits/next" + q);
    if (resp.status === 404) {
      return null;
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, await errorDetail(resp));
    }
    return (await resp.json()) as Hit;
  }

  async relations(lang: string): Promise<RelationTable> {
    const resp = await this.get(`/relations?lang=${encodeURIComponent(lang)}`);
    if (!resp.ok) {
      throw new ApiError(resp.status, await errorDetail(resp));
    }
    return (await resp.json()) as RelationTable;
  }

  async progress(lang: string): Promise<Progress> {
    const resp = await this.get(`/progress?lang=${encodeURIComponent(lang)}`);
    if (!resp.ok) {
      throw new ApiError(resp.status, await errorDetail(resp));
    }
    return (await resp.json()) as Progress;
  }

  /** POST one judgment, retrying the identical payload on network failure. */
  async submitJudgment(judgment: Judgment): Promise<SubmitResult> {
    let lastError: unknown;
    for (let attempt = 0; attempt < this.maxAttempts; attempt++) {
      if (attempt > 0) {
        await this.sleep(this.retryDelayMs);
      }
      let resp: Response;
      try {
        resp = await this.fetchImpl(this.baseUrl + "/judgments", {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(judgment),
        });
      } catch (err) {
        lastError = err;
        continue;
      }
      if (resp.status === 403) {
        throw new QualificationError(await errorDetail(resp));
      }
      if (!resp.ok) {
        throw new ApiError(resp.status, await errorDetail(resp));
      }
      return (await resp.json()) as SubmitResult;
    }
    throw lastError instanceof Error ? lastError : new Error(String(lastError));
  }

  /** Submit in served order; stops at the first hard failure. */
  async submitAll(judgments: Judgment[]): Promise<SubmitResult[]> {
    const results: SubmitResult[] = [];
    for (const j of judgments) {
      results.push(await this.submitJudgment(j));
    }
    return results;
  }
}

async function errorDetail(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === "string") {
      return body.detail;
    }
  } catch {
    // fall through to the generic message
  }
  return `request failed with status ${resp.status}`;
}
