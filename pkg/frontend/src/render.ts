/**
 * HTML renderers for the review UI.
 *
 * Every function here maps state to a markup string and nothing else, so
 * the whole visual layer can be asserted on as text. The metric displays
 * arrive preformatted from the service and are shown verbatim; this file
 * never recomputes a rate, a confidence interval, or a tier.
 */

import type { MetricsPayload, WorklistRow } from "./api.js";
import { TIERS } from "./api.js";
import type { AppState, RowView } from "./state.js";
import { histogramTotal, visibleRows } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

// ----- Badges and chips -----

export function tierBadge(tier: string): string {
  return `<span class="badge tier-${tier.toLowerCase()}">${escapeHtml(tier)}</span>`;
}

export function siteCell(row: WorklistRow): string {
  const badge = row.external_provider_group ? '<span class="badge badge-pamf">PAMF</span>' : "";
  return `${escapeHtml(row.site)}${badge}`;
}

function decisionChip(decision: "Yes" | "No" | null): string {
  if (decision === null) return '<span class="chip">Reviewed</span>';
  const cls = decision === "Yes" ? "chip-yes" : "chip-no";
  return `<span class="chip ${cls}">Reviewed: ${decision}</span>`;
}

// ----- Worklist -----

function reviewCell(view: RowView, reviewerReady: boolean): string {
  const caseId = escapeHtml(view.row.case_id);
  const error = view.error ? `<div class="inline-error">${escapeHtml(view.error)}</div>` : "";

  if (view.row.feedback_status === "reviewed") {
    return decisionChip(view.row.feedback_decision);
  }
  if (view.phase === "saving") {
    return '<span class="saving">Saving…</span>';
  }
  if (view.phase === "reason") {
    return `
      <form data-action="submit-no" data-case="${caseId}">
        <textarea data-field="reason" data-case="${caseId}"
          placeholder="Reason (optional)">${escapeHtml(view.draftReason)}</textarea>
        <button type="submit" class="primary">Record No</button>
        <button type="button" data-action="cancel-reason" data-case="${caseId}">Cancel</button>
      </form>${error}`;
  }
  const disabled = reviewerReady ? "" : " disabled";
  const hint = reviewerReady ? "" : ' title="Enter your reviewer id first"';
  return `
    <button data-action="yes" data-case="${caseId}"${disabled}${hint}>Yes</button>
    <button data-action="no" data-case="${caseId}"${disabled}${hint}>No</button>${error}`;
}

function worklistRow(view: RowView, reviewerReady: boolean): string {
  const row = view.row;
  return `
    <tr data-case-row="${escapeHtml(row.case_id)}">
      <td><strong>${escapeHtml(row.case_id)}</strong><br />
        <span class="muted">${escapeHtml(row.patient_ref)} · ${escapeHtml(row.surgery_date)}</span></td>
      <td>${tierBadge(row.tier)}</td>
      <td>${escapeHtml(row.patient_class)}</td>
      <td>${siteCell(row)}</td>
      <td>${escapeHtml(row.specialty)}</td>
      <td class="excerpt">${escapeHtml(row.explanation_excerpt)}</td>
      <td class="review-cell">${reviewCell(view, reviewerReady)}</td>
    </tr>`;
}

export function renderWorklist(state: AppState): string {
  const toolbar = `
    <div class="toolbar">
      <label>Batch date
        <input type="date" data-field="date" value="${escapeHtml(state.date)}" /></label>
      <label>Tier
        <select data-field="tier-filter">
          <option value="all"${state.tierFilter === "all" ? " selected" : ""}>All tiers</option>
          ${TIERS.map(
            (t) => `<option value="${t}"${state.tierFilter === t ? " selected" : ""}>${t}</option>`,
          ).join("")}
        </select></label>
      <button data-action="refresh-worklist">Refresh</button>
    </div>`;

  let body: string;
  if (state.worklistError) {
    body = `<div class="banner banner-error">Could not reach the triage service: ${escapeHtml(
      state.worklistError,
    )}</div>`;
  } else if (state.worklist === null) {
    body = '<div class="muted">Loading worklist…</div>';
  } else if (state.rows.length === 0) {
    const notice = state.worklist.notice ? escapeHtml(state.worklist.notice) : "";
    body = `<div class="empty-state">No cases to review.<br />${notice}</div>`;
  } else {
    const views = visibleRows(state);
    const table =
      views.length === 0
        ? `<div class="empty-state">No ${escapeHtml(state.tierFilter)} cases on this list.</div>`
        : `<table class="worklist">
            <thead><tr>
              <th>Case</th><th>Tier</th><th>Class</th><th>Site</th>
              <th>Specialty</th><th>Explanation</th><th>Review</th>
            </tr></thead>
            <tbody>${views.map((v) => worklistRow(v, state.reviewerId !== "")).join("")}</tbody>
          </table>`;
    body = table;
  }

  return `<section class="panel"><h2>Worklist</h2>${toolbar}${body}</section>`;
}

// ----- Metrics -----

const METRIC_LABELS: Record<string, string> = {
  sensitivity: "Sensitivity",
  specificity: "Specificity",
  ppv: "PPV",
  npv: "NPV",
  accuracy: "Accuracy",
  balanced_accuracy: "Balanced accuracy",
};

function metricCards(payload: MetricsPayload): string {
  const cards = Object.entries(payload.metrics ?? {}).map(([name, entry]) => {
    const label = METRIC_LABELS[name] ?? name;
    return `
      <div class="metric-card" data-metric="${escapeHtml(name)}">
        <div class="metric-value">${escapeHtml(entry.display)}</div>
        <div class="metric-label">${escapeHtml(label)}</div>
      </div>`;
  });
  return `<div class="card-grid">${cards.join("")}</div>`;
}

function tierPpvBars(payload: MetricsPayload): string {
  const rows = TIERS.map((tier) => {
    const entry = payload.tier_ppv?.[tier];
    if (!entry) {
      return `
        <div class="bar-row">
          <span>${tierBadge(tier)}</span>
          <div class="bar-track"></div>
          <span class="muted">(no predictions)</span>
        </div>`;
    }
    const width = Math.round(entry.point * 100);
    return `
      <div class="bar-row">
        <span>${tierBadge(tier)}</span>
        <div class="bar-track"><div class="bar-fill" style="width: ${width}%"></div></div>
        <span>${escapeHtml(entry.display)} · n=${entry.n}</span>
      </div>`;
  });
  return `<h2>PPV by tier</h2>${rows.join("")}`;
}

function categoryHistogram(payload: MetricsPayload): string {
  const histogram = payload.category_histogram ?? {};
  const entries = Object.entries(histogram).sort(
    (a, b) => b[1] - a[1] || a[0].localeCompare(b[0]),
  );
  if (entries.length === 0) {
    return '<h2>Discordance categories</h2><div class="muted">No coded No-reasons yet.</div>';
  }
  const max = entries[0][1];
  const rows = entries.map(([category, count]) => {
    const width = Math.round((count / max) * 100);
    return `
      <div class="bar-row" data-count="${count}">
        <span>${escapeHtml(category)}</span>
        <div class="bar-track"><div class="bar-fill hist" style="width: ${width}%"></div></div>
        <span>${count}</span>
      </div>`;
  });
  const total = histogramTotal(histogram);
  return `
    <h2>Discordance categories</h2>
    <div class="section-note">${total} coded No-reasons</div>
    ${rows.join("")}`;
}

export function renderMetrics(state: AppState): string {
  const toolbar = `
    <div class="toolbar">
      <label>Window
        <input type="text" data-field="window" value="${escapeHtml(state.metricsWindow)}"
          placeholder="all, 2025-07, 2025-01-01:2025-06-30" /></label>
      <button data-action="load-metrics">Load metrics</button>
    </div>`;

  let body: string;
  const payload = state.metrics;
  if (state.metricsError) {
    body = `<div class="banner banner-error">Could not load metrics: ${escapeHtml(
      state.metricsError,
    )}</div>`;
  } else if (payload === null) {
    body = '<div class="muted">Loading metrics…</div>';
  } else if (payload.notice === "no evaluable cases") {
    body = `<div class="empty-state">No evaluable cases in this window
      (${payload.n_triaged} triaged, ${payload.n_labeled} labeled).</div>`;
  } else {
    const confusion = payload.confusion;
    const summary = confusion
      ? `<div class="section-note">Labeled cases: ${payload.n_labeled} of ${payload.n_triaged} triaged
          (tp=${confusion.tp} fp=${confusion.fp} fn=${confusion.fn} tn=${confusion.tn})</div>`
      : "";
    body = `${summary}${metricCards(payload)}${tierPpvBars(payload)}${categoryHistogram(payload)}`;
  }

  return `<section class="panel"><h2>Evaluation</h2>${toolbar}${body}</section>`;
}

// ----- Page -----

function reviewerBar(state: AppState): string {
  if (state.reviewerId !== "") {
    return `<div class="toolbar">Reviewing as <strong>${escapeHtml(state.reviewerId)}</strong></div>`;
  }
  return `
    <form class="toolbar" data-action="set-reviewer">
      <label>Reviewer id
        <input type="text" data-field="reviewer" placeholder="e.g. dr-chen" /></label>
      <button type="submit" class="primary">Start reviewing</button>
    </form>`;
}

export function renderApp(state: AppState): string {
  return `
    <h1>SCM Triage Review</h1>
    ${reviewerBar(state)}
    ${renderWorklist(state)}
    ${renderMetrics(state)}`;
}
