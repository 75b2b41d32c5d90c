/** Typed client for the audit service; records every exchange. */

import type { RequestLogEntry } from "./provenance.js";
import type {
  ApiErrorBody,
  ContestView,
  PlanView,
  RoundResponse,
  SessionView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ApiErrorBody,
    public logEntry: RequestLogEntry,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface Logged<T> {
  data: T;
  entry: RequestLogEntry;
}

export class ApiClient {
  readonly log: RequestLogEntry[] = [];
  private nextId = 1;

  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
    private token: string | null = null,
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<Logged<T>> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const data: unknown = await resp.json();
    const entry: RequestLogEntry = {
      id: this.nextId++,
      method,
      path,
      body: body ?? null,
      status: resp.status,
      response: data,
    };
    this.log.push(entry);
    if (!resp.ok) {
      throw new ApiError(resp.status, data as ApiErrorBody, entry);
    }
    return { data: data as T, entry };
  }

  createContest(contestId: string, resultsCsv: string, manifestCsv?: string) {
    return this.call<ContestView>("POST", "/contests", {
      contest_id: contestId,
      results_csv: resultsCsv,
      manifest_csv: manifestCsv ?? null,
    });
  }

  getContest(contestId: string) {
    return this.call<ContestView>("GET", `/contests/${contestId}`);
  }

  createAudit(contestId: string, alpha: number, auditKind: string, seed: number) {
    return this.call<SessionView>("POST", "/audits", {
      contest_id: contestId,
      alpha,
      audit_kind: auditKind,
      seed,
    });
  }

  getAudit(sessionId: string) {
    return this.call<SessionView>("GET", `/audits/${sessionId}`);
  }

  plan(sessionId: string, targetP: number | null, misleadingLimit: number | null, maxN?: number) {
    return this.call<PlanView>("POST", `/audits/${sessionId}/plan`, {
      target_p: targetP,
      misleading_limit: misleadingLimit,
      ...(maxN !== undefined ? { max_n: maxN } : {}),
    });
  }

  submitRound(
    sessionId: string,
    round: {
      cumulative_n: number;
      cumulative_k?: number;
      tallies?: Record<string, number>;
      selection_order?: number[];
      version?: number;
    },
  ) {
    return this.call<RoundResponse>("POST", `/audits/${sessionId}/rounds`, round);
  }

  sample(sessionId: string, count: number) {
    return this.call<{ already_drawn: number; draws: unknown[] }>(
      "GET",
      `/audits/${sessionId}/sample?count=${count}`,
    );
  }
}
