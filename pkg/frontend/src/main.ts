/** DOM wiring for the operator console.
 *
 * Left panel: the service-ranked candidate table with checkboxes. Right
 * panel: campaign setup, the request composer, and live campaign metrics.
 * All data flows through ApiClient; this file only moves strings into cells.
 */

import { ApiClient } from "./api.ts";
import { dispatchSelection } from "./dispatch.ts";
import { validateDraft } from "./draft.ts";
import { buildMetricsView } from "./metricsPanel.ts";
import { Poller } from "./poll.ts";
import {
  ConsoleViewState,
  applyCandidates,
  initialState,
  toggleSelection,
} from "./state.ts";
import { buildCandidateRows } from "./table.ts";
import type { MetricsPayload, ScoredCandidate } from "./types.ts";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let state: ConsoleViewState = initialState();
const api = new ApiClient("");
let candidatePoller: Poller<ScoredCandidate[]> | null = null;
let metricsPoller: Poller<MetricsPayload> | null = null;

function renderCandidates(): void {
  const tbody = el<HTMLTableSectionElement>("candidate-rows");
  tbody.replaceChildren();
  for (const row of buildCandidateRows(state.candidates)) {
    const tr = document.createElement("tr");
    const pick = document.createElement("td");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = state.selection.has(row.userId);
    box.addEventListener("change", () => {
      state = toggleSelection(state, row.userId);
      renderCandidates();
    });
    pick.appendChild(box);
    tr.appendChild(pick);
    for (const cell of [
      String(row.rank), row.userId, row.retweetProbability,
      row.probWithinDeadline, row.followers, row.meanWait,
    ]) {
      const td = document.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  }
  el("empty-state").hidden = state.candidates.length > 0;
  el("stale-banner").hidden = !(state.candidatesStale || state.metricsStale);
}

function renderMetrics(): void {
  if (!state.metrics) return;
  const view = buildMetricsView(state.metrics);
  el("m-contacted").textContent = view.contacted;
  el("m-retweeted").textContent = view.retweeted;
  el("m-rate").textContent = view.rate;
  el("m-windowed-label").textContent = view.windowLabel;
  el("m-windowed").textContent = view.windowedRate;
  el("m-reach").textContent = view.unitInfoReach;
  el("m-reach-note").textContent = view.reachNote;
}

function renderDraftCheck(): void {
  const draft = el<HTMLTextAreaElement>("draft").value;
  const check = validateDraft(draft);
  el("draft-error").textContent = check.ok ? "" : check.reason;
  el<HTMLButtonElement>("send").disabled = !check.ok || state.selection.size === 0;
}

function attachPollers(campaignId: string): void {
  candidatePoller?.stop();
  metricsPoller?.stop();
  candidatePoller = new Poller(
    () => api.recommendations(campaignId),
    (view) => {
      if (view.snapshot) state = applyCandidates(state, view.snapshot);
      state = { ...state, candidatesStale: view.stale };
      renderCandidates();
      renderDraftCheck();
    },
    state.pollIntervalMs,
  );
  metricsPoller = new Poller(
    () => api.metrics(campaignId),
    (view) => {
      if (view.snapshot) state = { ...state, metrics: view.snapshot, metricsStale: false };
      state = { ...state, metricsStale: view.stale };
      renderMetrics();
      renderCandidates();
    },
    state.pollIntervalMs,
  );
  candidatePoller.start();
  metricsPoller.start();
}

function openCampaign(campaignId: string): void {
  state = { ...initialState(state.pollIntervalMs), campaignId, draft: state.draft };
  el("campaign-label").textContent = campaignId;
  attachPollers(campaignId);
}

async function createCampaign(): Promise<void> {
  const definition = {
    keywords: el<HTMLInputElement>("f-keywords").value.split(",").map((s) => s.trim()).filter(Boolean),
    template: el<HTMLTextAreaElement>("draft").value,
    deadline: Number(el<HTMLInputElement>("f-deadline").value) * 3600,
    cutoff: Number(el<HTMLInputElement>("f-cutoff").value),
    top_n: Number(el<HTMLInputElement>("f-topn").value),
    model_id: el<HTMLInputElement>("f-model").value.trim(),
  };
  try {
    openCampaign(await api.createCampaign(definition));
    el("create-error").textContent = "";
  } catch (err) {
    el("create-error").textContent = String(err);
  }
}

async function sendRequests(): Promise<void> {
  if (!state.campaignId) return;
  const draft = el<HTMLTextAreaElement>("draft").value;
  const outcomes = await dispatchSelection(api, state.campaignId, [...state.selection], draft);
  const log = el<HTMLUListElement>("dispatch-log");
  log.replaceChildren();
  for (const o of outcomes) {
    const li = document.createElement("li");
    li.textContent = o.ok ? `${o.userId}: sent` : `${o.userId}: ${o.errorCode ?? "error"} ${o.error}`;
    li.className = o.ok ? "ok" : "failed";
    log.appendChild(li);
  }
  await candidatePoller?.pollOnce();
  await metricsPoller?.pollOnce();
}

export function boot(): void {
  el<HTMLButtonElement>("create").addEventListener("click", () => void createCampaign());
  el<HTMLButtonElement>("attach").addEventListener("click", () => {
    const id = el<HTMLInputElement>("f-campaign").value.trim();
    if (id) openCampaign(id);
  });
  el<HTMLButtonElement>("send").addEventListener("click", () => void sendRequests());
  el<HTMLTextAreaElement>("draft").addEventListener("input", renderDraftCheck);
  renderDraftCheck();
}

if (typeof document !== "undefined" && document.getElementById("candidate-rows")) {
  boot();
}
