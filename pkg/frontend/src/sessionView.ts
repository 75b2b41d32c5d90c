/** Whole-session view: metadata, per-round table, status banner. */

import { ApiClient } from "./apiClient.js";
import { sourced, type Sourced } from "./provenance.js";
import type { SessionView } from "./types.js";

export interface RoundRow {
  roundIndex: Sourced<number>;
  cumulativeN: Sourced<number>;
  tallies: Sourced<Record<string, number>>;
  risk: Sourced<number> | null;
  kmin: Sourced<number> | null;
  misleading: Sourced<boolean> | null;
  correction: Sourced<boolean>;
}

export interface SessionViewState {
  sessionId: Sourced<string>;
  contestId: Sourced<string>;
  auditKind: Sourced<string>;
  alpha: Sourced<number>;
  status: Sourced<string>;
  statusBanner: "open" | "stopped" | "closed";
  rounds: RoundRow[];
  raw: SessionView;
}

export class SessionViewModel {
  state: SessionViewState | null = null;

  constructor(
    private client: ApiClient,
    private sessionId: string,
  ) {}

  async refresh(): Promise<SessionViewState> {
    const { data, entry } = await this.client.getAudit(this.sessionId);
    const status = sourced<string>(entry, "status");
    const rounds: RoundRow[] = data.rounds.map((rec, i) => ({
      roundIndex: sourced(entry, `rounds.${i}.round_index`),
      cumulativeN: sourced(entry, `rounds.${i}.cumulative_n`),
      tallies: sourced(entry, `rounds.${i}.tallies`),
      risk: rec.verdict ? sourced(entry, `rounds.${i}.verdict.measured_risk`) : null,
      kmin:
        rec.verdict && rec.verdict.pairwise.length > 0
          ? sourced(entry, `rounds.${i}.verdict.pairwise.0.kmin`)
          : null,
      misleading: rec.verdict ? sourced(entry, `rounds.${i}.verdict.misleading_now`) : null,
      correction: sourced(entry, `rounds.${i}.correction`),
    }));
    this.state = {
      sessionId: sourced(entry, "session_id"),
      contestId: sourced(entry, "contest_id"),
      auditKind: sourced(entry, "audit_kind"),
      alpha: sourced(entry, "alpha"),
      status,
      statusBanner:
        status.value === "Open" ? "open" : status.value === "Stopped-Correct" ? "stopped" : "closed",
      rounds,
      raw: data,
    };
    return this.state;
  }
}
