/** Browser bootstrap: wires the models to a minimal DOM shell. */

import { ApiClient } from "./apiClient.js";
import { countText, probabilityText, riskBadgeText } from "./format.js";
import { PlanPanelModel } from "./planPanel.js";
import { chartPolyline, parseOrderFile, RoundFormModel } from "./roundForm.js";
import { SessionViewModel } from "./sessionView.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function baseUrl(): string {
  return (el<HTMLInputElement>("base-url").value || "http://127.0.0.1:8000").replace(/\/$/, "");
}

let client = new ApiClient(baseUrl());
let sessionModel: SessionViewModel | null = null;
let planModel: PlanPanelModel | null = null;
let roundModel: RoundFormModel | null = null;

async function openSession(): Promise<void> {
  client = new ApiClient(baseUrl());
  const sessionId = el<HTMLInputElement>("session-id").value.trim();
  sessionModel = new SessionViewModel(client, sessionId);
  const state = await sessionModel.refresh();
  planModel = new PlanPanelModel(client, sessionId);
  roundModel = new RoundFormModel(client, state.raw);
  renderSession();
}

function renderSession(): void {
  const state = sessionModel?.state;
  if (!state) return;
  el("session-meta").textContent =
    `${state.sessionId.value} - ${state.auditKind.value} at risk limit ${state.alpha.value}`;
  const banner = el("status-banner");
  banner.textContent = state.status.value;
  banner.className = `banner ${state.statusBanner}`;
  const rows = state.rounds
    .map(
      (r) => `<tr${r.correction.value ? ' class="correction"' : ""}>
        <td>${r.roundIndex.value}</td>
        <td>${countText(r.cumulativeN)}</td>
        <td>${Object.entries(r.tallies.value)
          .map(([c, v]) => `${c}: ${v}`)
          .join(", ")}</td>
        <td>${r.risk ? riskBadgeText(r.risk) : ""}</td>
        <td>${r.kmin ? countText(r.kmin) : ""}</td>
        <td>${r.misleading?.value ? "misleading" : ""}</td>
      </tr>`,
    )
    .join("");
  el("rounds-body").innerHTML = rows;
}

async function refreshPlan(): Promise<void> {
  if (!planModel) return;
  planModel.setTargetP(Number(el<HTMLInputElement>("target-p").value));
  planModel.setMisleadingLimit(
    el<HTMLInputElement>("limit-enabled").checked,
    Number(el<HTMLInputElement>("limit-value").value),
  );
  await planModel.refresh();
  const s = planModel.state;
  const out = el("plan-out");
  if (s.plan) {
    out.innerHTML = `
      <p>next round: draw to <b>${countText(s.plan.cumulativeN)}</b> ballots
        (${countText(s.plan.pairCumulativeN)} relevant to the tightest pair)</p>
      <p>stops at tally ${countText(s.plan.kmin)};
         stopping probability ${probabilityText(s.plan.stopProb)};
         misleading probability ${probabilityText(s.plan.misleadingProb)}</p>
      <p class="binding">${s.plan.bindingLabel}</p>`;
  } else if (s.capacityBanner) {
    const best = s.capacityBanner.bestN
      ? ` best achievable: ${countText(s.capacityBanner.bestN)} ballots` +
        (s.capacityBanner.bestStopProb
          ? ` (stopping probability ${probabilityText(s.capacityBanner.bestStopProb)})`
          : "")
      : "";
    out.innerHTML = `<p class="capacity">${s.capacityBanner.message}.${best}</p>`;
  } else if (s.error) {
    out.innerHTML = `<p class="error">${s.error.code}: ${s.error.message}<br>${s.error.hint}</p>`;
  }
}

async function submitRound(): Promise<void> {
  if (!roundModel || !sessionModel?.state) return;
  const cumulativeN = Number(el<HTMLInputElement>("round-n").value);
  const tallies: Record<string, number> = {};
  for (const part of el<HTMLInputElement>("round-tallies").value.split(",")) {
    const [cand, count] = part.split(":");
    if (cand && count !== undefined) tallies[cand.trim()] = Number(count);
  }
  const orderText = el<HTMLTextAreaElement>("order-text").value.trim();
  const order = orderText ? parseOrderFile(orderText) : null;
  await roundModel.submit(cumulativeN, tallies, order);
  const s = roundModel.state;
  const out = el("verdict-out");
  if (s.validationErrors.length) {
    out.innerHTML = `<p class="error">${s.validationErrors.join("<br>")}</p>`;
    return;
  }
  if (s.conflictDialog) {
    out.innerHTML = `<p class="conflict">${s.conflictDialog.message}</p>`;
    return;
  }
  if (s.inlineError) {
    out.innerHTML = `<p class="error">${s.inlineError.code}: ${s.inlineError.message}</p>`;
    return;
  }
  if (s.verdict) {
    const v = s.verdict;
    out.innerHTML = `
      <p><span class="badge ${v.badge}">${v.decision.value}</span>
         measured risk <b>${riskBadgeText(v.risk)}</b>
         ${v.misleadingWarning ? '<span class="warn">misleading sample - audit continues</span>' : ""}</p>
      ${v.pairwise
        .map(
          (p) =>
            `<p>vs ${p.loser.value}: ${p.decision.value}, risk ${riskBadgeText(p.risk)}, ` +
            `threshold ${countText(p.kmin)}</p>`,
        )
        .join("")}`;
    if (v.soChart) {
      const chart = {
        ballot: v.soChart.ballot.value,
        cumulative_winner_tally: v.soChart.tally.value,
        stopping_threshold: v.soChart.threshold.value,
        first_crossing: v.soChart.firstCrossing.value,
      };
      const tallyLine = chartPolyline(chart, 600, 200);
      const thresholdLine = chartPolyline(
        { ...chart, cumulative_winner_tally: chart.stopping_threshold },
        600,
        200,
      );
      el("chart-holder").innerHTML = `
        <svg viewBox="0 0 600 200" width="600" height="200">
          <polyline points="${thresholdLine}" fill="none" stroke="#356" stroke-dasharray="4 3"/>
          <polyline points="${tallyLine}" fill="none" stroke="#d72"/>
        </svg>
        <p>${chart.first_crossing !== null ? `per-ballot rule crossed at ballot ${chart.first_crossing}` : "no per-ballot crossing"}</p>`;
    }
  }
  await sessionModel.refresh();
  renderSession();
}

el("open-session").addEventListener("click", () => void openSession());
el("refresh-plan").addEventListener("click", () => void refreshPlan());
el("submit-round").addEventListener("click", () => void submitRound());
