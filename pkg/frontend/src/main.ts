/**
 * Entry point: owns the mutable state, wires delegated DOM events, and
 * re-renders the whole page after every transition. All behavior lives
 * in state.ts and render.ts; this file is plumbing only.
 */

import { fetchMetrics, fetchWorklist, submitFeedback } from "./api.js";
import { renderApp } from "./render.js";
import {
  applyAck,
  beginNo,
  cancelNo,
  editReason,
  initialState,
  markSaving,
  metricsFailed,
  metricsLoaded,
  submitFailed,
  worklistFailed,
  worklistLoaded,
  type AppState,
  type TierFilter,
} from "./state.js";

export function createApp(root: HTMLElement) {
  let current: AppState = initialState(new Date().toISOString().slice(0, 10));

  function render(): void {
    root.innerHTML = renderApp(current);
  }

  function set(next: AppState): void {
    current = next;
    render();
  }

  // Reason drafts live in the DOM while the reviewer types; fold them
  // into state before any re-render so a refresh cannot eat the text.
  function captureDrafts(): void {
    root.querySelectorAll<HTMLTextAreaElement>("textarea[data-field='reason']").forEach((area) => {
      const caseId = area.dataset.case;
      if (caseId) current = editReason(current, caseId, area.value);
    });
  }

  async function loadWorklist(): Promise<void> {
    captureDrafts();
    try {
      const payload = await fetchWorklist(current.date);
      set(worklistLoaded(current, payload));
    } catch (err) {
      set(worklistFailed(current, err instanceof Error ? err.message : String(err)));
    }
  }

  async function loadMetrics(): Promise<void> {
    try {
      const payload = await fetchMetrics(current.metricsWindow);
      set(metricsLoaded(current, payload));
    } catch (err) {
      set(metricsFailed(current, err instanceof Error ? err.message : String(err)));
    }
  }

  async function submit(caseId: string, decision: "Yes" | "No", reason: string | null): Promise<void> {
    set(markSaving(current, caseId));
    try {
      const ack = await submitFeedback({
        case_id: caseId,
        decision,
        reviewer_id: current.reviewerId,
        reason: reason || null,
      });
      set(applyAck(current, caseId, ack));
    } catch (err) {
      set(submitFailed(current, caseId, decision, err instanceof Error ? err.message : String(err)));
    }
  }

  root.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLButtonElement>("button[data-action]");
    if (!button) return;
    const action = button.dataset.action;
    const caseId = button.dataset.case ?? "";
    if (action === "refresh-worklist") {
      void loadWorklist();
    } else if (action === "load-metrics") {
      const input = root.querySelector<HTMLInputElement>("input[data-field='window']");
      if (input) current = { ...current, metricsWindow: input.value.trim() || "all" };
      void loadMetrics();
    } else if (action === "yes") {
      void submit(caseId, "Yes", null);
    } else if (action === "no") {
      captureDrafts();
      set(beginNo(current, caseId));
    } else if (action === "cancel-reason") {
      set(cancelNo(current, caseId));
    }
  });

  root.addEventListener("submit", (event) => {
    const form = (event.target as HTMLElement).closest<HTMLFormElement>("form[data-action]");
    if (!form) return;
    event.preventDefault();
    const action = form.dataset.action;
    if (action === "set-reviewer") {
      const input = form.querySelector<HTMLInputElement>("input[data-field='reviewer']");
      const value = (input?.value ?? "").trim();
      if (value) set({ ...current, reviewerId: value });
    } else if (action === "submit-no") {
      const caseId = form.dataset.case ?? "";
      const area = form.querySelector<HTMLTextAreaElement>("textarea[data-field='reason']");
      const reason = (area?.value ?? "").trim();
      current = editReason(current, caseId, reason);
      void submit(caseId, "No", reason === "" ? null : reason);
    }
  });

  root.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement | HTMLSelectElement;
    const field = target.dataset.field;
    if (field === "date") {
      current = { ...current, date: target.value };
      void loadWorklist();
    } else if (field === "tier-filter") {
      captureDrafts();
      set({ ...current, tierFilter: target.value as TierFilter });
    } else if (field === "window") {
      current = { ...current, metricsWindow: target.value };
    }
  });

  render();
  void loadWorklist();
  void loadMetrics();
  return { refresh: loadWorklist };
}

const rootEl = document.getElementById("app");
if (rootEl !== null) {
  createApp(rootEl);
}
