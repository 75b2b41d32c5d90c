import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/apiClient.js";
import { PlanPanelModel } from "../src/planPanel.js";
import { verifyProvenance } from "../src/provenance.js";
import { fakeFetch } from "./fakeTransport.js";

const PLAN_TARGET = {
  loser: "No",
  pair_cumulative_n: 130,
  cumulative_n: 130,
  kmin: 73,
  stop_prob: 0.9511,
  misleading_prob: 0.0019,
  binding_constraint: "target_p",
  first_round: true,
};

const PLAN_LIMIT = {
  ...PLAN_TARGET,
  pair_cumulative_n: 2163,
  cumulative_n: 2163,
  binding_constraint: "misleading_limit",
};

describe("plan panel", () => {
  it("shows a target-bound plan with full provenance", async () => {
    const client = new ApiClient(
      "http://svc",
      fakeFetch([{ method: "POST", path: "/audits/s1/plan", status: 200, response: PLAN_TARGET }]),
    );
    const panel = new PlanPanelModel(client, "s1");
    panel.setTargetP(0.95);
    await panel.refresh();
    const plan = panel.state.plan;
    expect(plan).not.toBeNull();
    expect(plan!.cumulativeN.value).toBe(130);
    expect(plan!.bindingLabel).toMatch(/target/);
    expect(verifyProvenance(panel.state, client.log)).toBeGreaterThanOrEqual(6);
  });

  it("marks the misleading limit as binding when it dominates", async () => {
    const client = new ApiClient(
      "http://svc",
      fakeFetch([{ method: "POST", path: "/audits/s1/plan", status: 200, response: PLAN_LIMIT }]),
    );
    const panel = new PlanPanelModel(client, "s1");
    panel.setMisleadingLimit(true, 0.01);
    await panel.refresh();
    expect(panel.state.plan!.cumulativeN.value).toBe(2163);
    expect(panel.state.plan!.binding.value).toBe("misleading_limit");
    expect(panel.state.plan!.bindingLabel).toMatch(/misleading limit binds/);
  });

  it("surfaces a capacity banner with the best achievable plan", async () => {
    const client = new ApiClient(
      "http://svc",
      fakeFetch([
        {
          method: "POST",
          path: "/audits/s1/plan",
          status: 422,
          response: {
            code: "capacity_exceeded",
            message: "stopping probability 0.95 unattainable within max_n=200",
            details: { best_plan: { cumulative_n: 200, kmin: 117, stop_prob: 0.41, misleading_prob: 0.1 } },
          },
        },
      ]),
    );
    const panel = new PlanPanelModel(client, "s1");
    await panel.refresh();
    expect(panel.state.plan).toBeNull();
    expect(panel.state.capacityBanner).not.toBeNull();
    expect(panel.state.capacityBanner!.bestN!.value).toBe(200);
    verifyProvenance(panel.state, client.log);
  });

  it("surfaces other errors verbatim with a remediation hint", async () => {
    const client = new ApiClient(
      "http://svc",
      fakeFetch([
        {
          method: "POST",
          path: "/audits/s1/plan",
          status: 400,
          response: { code: "validation_error", message: "session is Stopped-Correct", details: {} },
        },
      ]),
    );
    const panel = new PlanPanelModel(client, "s1");
    await panel.refresh();
    expect(panel.state.error).toEqual({
      code: "validation_error",
      message: "session is Stopped-Correct",
      hint: expect.stringMatching(/(Check|session)/),
    });
  });
});
