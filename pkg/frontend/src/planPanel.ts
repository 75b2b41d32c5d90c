/**
 * Plan panel: target stopping probability slider plus an optional
 * misleading-sample limit; shows which constraint binds and what the
 * suggested round buys. All figures come from the service response.
 */

import { ApiClient, ApiError } from "./apiClient.js";
import { sourced, type Sourced } from "./provenance.js";

export interface PlanPanelState {
  targetP: number;
  misleadingLimitEnabled: boolean;
  misleadingLimit: number;
  plan: {
    cumulativeN: Sourced<number>;
    pairCumulativeN: Sourced<number>;
    kmin: Sourced<number>;
    stopProb: Sourced<number>;
    misleadingProb: Sourced<number | null>;
    binding: Sourced<string>;
    bindingLabel: string;
  } | null;
  capacityBanner: {
    message: string;
    bestN: Sourced<number> | null;
    bestStopProb: Sourced<number> | null;
  } | null;
  error: { code: string; message: string; hint: string } | null;
}

const REMEDIATION: Record<string, string> = {
  capacity_exceeded: "Lower the target, raise the search cap, or accept the best plan shown.",
  validation_error: "Check the submitted values against the session's current state.",
  version_conflict: "Someone else updated this session; reload before retrying.",
  schedule_violation: "This audit committed to a round schedule; draw exactly the scheduled size.",
  not_found: "The session or contest id no longer exists.",
  parse_error: "The uploaded file is malformed; fix the reported line.",
};

export class PlanPanelModel {
  state: PlanPanelState = {
    targetP: 0.9,
    misleadingLimitEnabled: false,
    misleadingLimit: 0.01,
    plan: null,
    capacityBanner: null,
    error: null,
  };

  constructor(
    private client: ApiClient,
    private sessionId: string,
  ) {}

  setTargetP(p: number): void {
    this.state.targetP = p;
  }

  setMisleadingLimit(enabled: boolean, limit?: number): void {
    this.state.misleadingLimitEnabled = enabled;
    if (limit !== undefined) this.state.misleadingLimit = limit;
  }

  async refresh(): Promise<void> {
    this.state.error = null;
    this.state.capacityBanner = null;
    const limit = this.state.misleadingLimitEnabled ? this.state.misleadingLimit : null;
    try {
      const { entry } = await this.client.plan(this.sessionId, this.state.targetP, limit);
      const binding = sourced<string>(entry, "binding_constraint");
      this.state.plan = {
        cumulativeN: sourced(entry, "cumulative_n"),
        pairCumulativeN: sourced(entry, "pair_cumulative_n"),
        kmin: sourced(entry, "kmin"),
        stopProb: sourced(entry, "stop_prob"),
        misleadingProb: sourced(entry, "misleading_prob"),
        binding,
        bindingLabel:
          binding.value === "misleading_limit"
            ? "misleading limit binds (larger than the target-p size)"
            : "stopping-probability target binds",
      };
    } catch (err) {
      if (err instanceof ApiError) {
        this.state.plan = null;
        if (err.body.code === "capacity_exceeded") {
          const best = err.body.details["best_plan"] as Record<string, unknown> | undefined;
          this.state.capacityBanner = {
            message: err.body.message,
            bestN: best ? sourced(err.logEntry, "details.best_plan.cumulative_n") : null,
            bestStopProb: best ? sourced(err.logEntry, "details.best_plan.stop_prob") : null,
          };
        } else {
          this.state.error = {
            code: err.body.code,
            message: err.body.message,
            hint: REMEDIATION[err.body.code] ?? "See the service logs.",
          };
        }
        return;
      }
      throw err;
    }
  }
}
