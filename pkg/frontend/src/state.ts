/** Console view state: served candidate rows, selection, draft, metrics.
 *
 * The selection is always a subset of the rows currently displayed; when a
 * poll drops a row (for example after its user was dispatched), the selection
 * loses it too.
 */

import type { MetricsPayload, ScoredCandidate } from "./types.ts";

export interface ConsoleViewState {
  campaignId: string | null;
  candidates: ScoredCandidate[];
  selection: Set<string>;
  draft: string;
  metrics: MetricsPayload | null;
  candidatesStale: boolean;
  metricsStale: boolean;
  pollIntervalMs: number;
}

export function initialState(pollIntervalMs = 2000): ConsoleViewState {
  return {
    campaignId: null,
    candidates: [],
    selection: new Set(),
    draft: "{user} please help pass this along",
    metrics: null,
    candidatesStale: false,
    metricsStale: false,
    pollIntervalMs,
  };
}

export function applyCandidates(
  state: ConsoleViewState,
  candidates: ScoredCandidate[],
): ConsoleViewState {
  const visible = new Set(candidates.map((c) => c.user_id));
  const selection = new Set([...state.selection].filter((id) => visible.has(id)));
  return { ...state, candidates, selection, candidatesStale: false };
}

export function toggleSelection(state: ConsoleViewState, userId: string): ConsoleViewState {
  if (!state.candidates.some((c) => c.user_id === userId)) {
    return state; // selection stays within displayed rows
  }
  const selection = new Set(state.selection);
  if (selection.has(userId)) {
    selection.delete(userId);
  } else {
    selection.add(userId);
  }
  return { ...state, selection };
}
