/**
 * Application state and its transitions.
 *
 * Everything in this module is a pure function from old state to new
 * state so the review workflow can be tested without a DOM:
 *   - worklist rows stay in the exact order the service returned them
 *   - the tier filter only hides rows from view, it never reorders or
 *     reclassifies anything
 *   - a review in progress (an open reason field, a failed submission)
 *     survives refreshes until the server acknowledges the decision
 */

import type { FeedbackAck, MetricsPayload, Tier, WorklistPayload, WorklistRow } from "./api.js";

export type RowPhase = "idle" | "reason" | "saving";

export type RowView = {
  row: WorklistRow;
  phase: RowPhase;
  draftReason: string;
  error: string | null;
};

export type TierFilter = Tier | "all";

export type AppState = {
  reviewerId: string;
  date: string;
  tierFilter: TierFilter;
  worklist: WorklistPayload | null;
  rows: RowView[];
  worklistError: string | null;
  metricsWindow: string;
  metrics: MetricsPayload | null;
  metricsError: string | null;
};

export function initialState(today: string): AppState {
  return {
    reviewerId: "",
    date: today,
    tierFilter: "all",
    worklist: null,
    rows: [],
    worklistError: null,
    metricsWindow: "all",
    metrics: null,
    metricsError: null,
  };
}

// ----- Worklist -----

export function worklistLoaded(state: AppState, payload: WorklistPayload): AppState {
  const previous = new Map(state.rows.map((view) => [view.row.case_id, view]));
  const rows = payload.rows.map((row) => {
    const before = previous.get(row.case_id);
    if (before && row.feedback_status === "pending") {
      // Keep an in-progress review alive across refreshes; once the
      // server reports the row as reviewed, its word is final.
      return { row, phase: before.phase, draftReason: before.draftReason, error: before.error };
    }
    return { row, phase: "idle" as RowPhase, draftReason: "", error: null };
  });
  return { ...state, worklist: payload, rows, worklistError: null };
}

export function worklistFailed(state: AppState, message: string): AppState {
  // Drop the table entirely: an error banner over yesterday's rows would
  // read as current data.
  return { ...state, worklist: null, rows: [], worklistError: message };
}

export function visibleRows(state: AppState): RowView[] {
  if (state.tierFilter === "all") return state.rows;
  return state.rows.filter((view) => view.row.tier === state.tierFilter);
}

// ----- Review actions -----

function mapRow(state: AppState, caseId: string, fn: (view: RowView) => RowView): AppState {
  return {
    ...state,
    rows: state.rows.map((view) => (view.row.case_id === caseId ? fn(view) : view)),
  };
}

export function beginNo(state: AppState, caseId: string): AppState {
  return mapRow(state, caseId, (view) => ({ ...view, phase: "reason", error: null }));
}

export function cancelNo(state: AppState, caseId: string): AppState {
  return mapRow(state, caseId, (view) => ({ ...view, phase: "idle", draftReason: "", error: null }));
}

export function editReason(state: AppState, caseId: string, text: string): AppState {
  return mapRow(state, caseId, (view) => ({ ...view, draftReason: text }));
}

export function markSaving(state: AppState, caseId: string): AppState {
  return mapRow(state, caseId, (view) => ({ ...view, phase: "saving", error: null }));
}

export function applyAck(state: AppState, caseId: string, ack: FeedbackAck): AppState {
  return mapRow(state, caseId, (view) => ({
    row: { ...view.row, feedback_status: "reviewed", feedback_decision: ack.decision },
    phase: "idle",
    draftReason: "",
    error: null,
  }));
}

export function submitFailed(
  state: AppState,
  caseId: string,
  decision: "Yes" | "No",
  message: string,
): AppState {
  // Reopen the form the reviewer was in so nothing they typed is lost.
  const phase: RowPhase = decision === "No" ? "reason" : "idle";
  return mapRow(state, caseId, (view) => ({ ...view, phase, error: message }));
}

// ----- Metrics -----

export function metricsLoaded(state: AppState, payload: MetricsPayload): AppState {
  return { ...state, metrics: payload, metricsError: null };
}

export function metricsFailed(state: AppState, message: string): AppState {
  return { ...state, metrics: null, metricsError: message };
}

export function histogramTotal(histogram: Record<string, number>): number {
  return Object.values(histogram).reduce((sum, count) => sum + count, 0);
}
