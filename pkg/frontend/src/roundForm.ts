/**
 * Round entry: cumulative counts typed in (or a selection-order file),
 * client-side pre-validation mirroring the history invariants, and the
 * verdict view built from the service response.
 */

import { ApiClient, ApiError } from "./apiClient.js";
import { sourced, type Sourced } from "./provenance.js";
import type { SessionView, SoChart } from "./types.js";

export interface VerdictPanel {
  decision: Sourced<string>;
  risk: Sourced<number>;
  misleadingNow: Sourced<boolean>;
  badge: "stop-green" | "continue-grey";
  misleadingWarning: boolean;
  pairwise: {
    loser: Sourced<string>;
    decision: Sourced<string>;
    risk: Sourced<number>;
    kmin: Sourced<number>;
  }[];
  soChart: {
    ballot: Sourced<number[]>;
    tally: Sourced<number[]>;
    threshold: Sourced<number[]>;
    firstCrossing: Sourced<number | null>;
  } | null;
}

export interface RoundFormState {
  verdict: VerdictPanel | null;
  sessionStatus: Sourced<string> | null;
  validationErrors: string[];
  conflictDialog: { message: string } | null;
  inlineError: { code: string; message: string } | null;
}

export function parseOrderFile(text: string): number[] {
  return text
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => {
      if (line !== "0" && line !== "1") throw new Error(`order lines must be 0 or 1, got '${line}'`);
      return Number(line);
    });
}

/** Mirrors the service-side invariants so obvious slips fail fast. */
export function preValidate(
  session: SessionView,
  cumulativeN: number,
  tallies: Record<string, number>,
  selectionOrder: number[] | null,
): string[] {
  const errors: string[] = [];
  const last = session.rounds[session.rounds.length - 1];
  const prevN = last ? last.cumulative_n : 0;
  if (!Number.isInteger(cumulativeN) || cumulativeN <= prevN) {
    errors.push(`cumulative ballots must exceed the previous round's ${prevN}`);
  }
  let total = 0;
  for (const [candidate, count] of Object.entries(tallies)) {
    if (!Number.isInteger(count) || count < 0) {
      errors.push(`count for ${candidate} must be a nonnegative integer`);
    }
    const prev = last ? (last.tallies[candidate] ?? 0) : 0;
    if (count < prev) {
      errors.push(`cumulative count for ${candidate} fell below round ${last?.round_index}`);
    }
    total += count;
  }
  if (total > cumulativeN) errors.push("candidate counts exceed the ballots drawn");
  if (selectionOrder) {
    const marginal = Object.values(tallies).reduce((a, b) => a + b, 0)
      - (last ? Object.values(last.tallies).reduce((a, b) => a + b, 0) : 0);
    if (selectionOrder.length !== marginal) {
      errors.push(
        `selection order lists ${selectionOrder.length} relevant ballots, tallies imply ${marginal}`,
      );
    }
  }
  return errors;
}

export class RoundFormModel {
  state: RoundFormState = {
    verdict: null,
    sessionStatus: null,
    validationErrors: [],
    conflictDialog: null,
    inlineError: null,
  };

  constructor(
    private client: ApiClient,
    private session: SessionView,
  ) {}

  async submit(
    cumulativeN: number,
    tallies: Record<string, number>,
    selectionOrder: number[] | null = null,
  ): Promise<void> {
    this.state.conflictDialog = null;
    this.state.inlineError = null;
    this.state.validationErrors = preValidate(this.session, cumulativeN, tallies, selectionOrder);
    if (this.state.validationErrors.length > 0) return;
    try {
      const { data, entry } = await this.client.submitRound(this.session.session_id, {
        cumulative_n: cumulativeN,
        tallies,
        ...(selectionOrder ? { selection_order: selectionOrder } : {}),
        version: this.session.version,
      });
      const decision = sourced<string>(entry, "verdict.decision");
      const misleadingNow = sourced<boolean>(entry, "verdict.misleading_now");
      let soChart: VerdictPanel["soChart"] = null;
      if (data.so_chart) {
        soChart = {
          ballot: sourced(entry, "so_chart.ballot"),
          tally: sourced(entry, "so_chart.cumulative_winner_tally"),
          threshold: sourced(entry, "so_chart.stopping_threshold"),
          firstCrossing: sourced(entry, "so_chart.first_crossing"),
        };
      }
      this.state.verdict = {
        decision,
        risk: sourced(entry, "verdict.measured_risk"),
        misleadingNow,
        badge: decision.value === "Correct" ? "stop-green" : "continue-grey",
        misleadingWarning: misleadingNow.value,
        pairwise: data.verdict.pairwise.map((_, i) => ({
          loser: sourced(entry, `verdict.pairwise.${i}.loser`),
          decision: sourced(entry, `verdict.pairwise.${i}.decision`),
          risk: sourced(entry, `verdict.pairwise.${i}.measured_risk`),
          kmin: sourced(entry, `verdict.pairwise.${i}.kmin`),
        })),
        soChart,
      };
      this.state.sessionStatus = sourced(entry, "session.status");
      this.session = data.session;
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.status === 409) {
          this.state.conflictDialog = {
            message: `${err.body.message} - reload the session and re-enter the round.`,
          };
        } else {
          this.state.inlineError = { code: err.body.code, message: err.body.message };
        }
        return;
      }
      throw err;
    }
  }
}

export function chartPolyline(chart: SoChart, width: number, height: number): string {
  // presentation-only scaling of served series into SVG coordinates
  const n = chart.ballot.length;
  const maxY = Math.max(...chart.stopping_threshold, ...chart.cumulative_winner_tally, 1);
  const pt = (i: number, y: number) =>
    `${((i + 1) / n) * width},${height - (y / maxY) * height}`;
  return chart.cumulative_winner_tally.map((y, i) => pt(i, y)).join(" ");
}
