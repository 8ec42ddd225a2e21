import { describe, expect, it } from "vitest";

import type { MetricsPayload, Tier } from "../src/api.js";
import { escapeHtml, renderApp, renderMetrics, renderWorklist, siteCell } from "../src/render.js";
import {
  beginNo,
  editReason,
  initialState,
  markSaving,
  metricsFailed,
  metricsLoaded,
  submitFailed,
  worklistFailed,
  worklistLoaded,
} from "../src/state.js";
import { makeMetrics, makeRow, makeWorklist } from "./fixtures.js";

const TODAY = "2025-07-01";

function stateWithRows(rows = [makeRow()]) {
  return worklistLoaded({ ...initialState(TODAY), reviewerId: "dr-chen" }, makeWorklist(rows));
}

function caseOrder(html: string): string[] {
  return [...html.matchAll(/data-case-row="([^"]+)"/g)].map((m) => m[1]);
}

describe("worklist rendering", () => {
  it("renders rows exactly in the order the service sent them", () => {
    const rows = [
      makeRow({ case_id: "SC-A1", tier: "Affirmative" }),
      makeRow({ case_id: "SC-A2", tier: "Affirmative" }),
      makeRow({ case_id: "SC-M1", tier: "Maybe" }),
      makeRow({ case_id: "SC-N1", tier: "Negative" }),
    ];
    const html = renderWorklist(stateWithRows(rows));
    expect(caseOrder(html)).toEqual(["SC-A1", "SC-A2", "SC-M1", "SC-N1"]);
    expect(html.indexOf("tier-affirmative")).toBeLessThan(html.indexOf("tier-negative"));
  });

  it("shows a PAMF badge only for external provider group rows", () => {
    const rows = [
      makeRow({ case_id: "SC-X1", external_provider_group: true, site: "DowntownClinic" }),
      makeRow({ case_id: "SC-X2", external_provider_group: false }),
    ];
    const html = renderWorklist(stateWithRows(rows));
    expect(html.match(/badge-pamf/g)).toHaveLength(1);
    expect(siteCell(rows[0])).toContain(">PAMF<");
    expect(siteCell(rows[1])).not.toContain("PAMF");
  });

  it("renders an explicit no-cases state for an empty day", () => {
    const html = renderWorklist(stateWithRows([]));
    expect(html).toContain("No cases to review.");
    expect(html).toContain("no triage batch recorded for this date");
    expect(html).not.toContain("<table");
  });

  it("renders an error banner instead of a table when the service is unreachable", () => {
    const failed = worklistFailed(stateWithRows(), "API /v1/worklist?date=2025-07-01: 503");
    const html = renderWorklist(failed);
    expect(html).toContain("banner-error");
    expect(html).toContain("Could not reach the triage service");
    expect(html).toContain("503");
    expect(html).not.toContain("<table");
  });

  it("filtering to a tier with no rows says so instead of showing nothing", () => {
    const rows = [makeRow({ case_id: "SC-A1", tier: "Affirmative" })];
    const state = { ...stateWithRows(rows), tierFilter: "Maybe" as Tier };
    const html = renderWorklist(state);
    expect(html).toContain("No Maybe cases on this list.");
  });

  it("escapes markup that arrives in service text", () => {
    const rows = [makeRow({ explanation_excerpt: '<script>alert("x")</script>' })];
    const html = renderWorklist(stateWithRows(rows));
    expect(html).toContain("&lt;script&gt;");
    expect(html).not.toContain("<script");
  });

  it("pending rows offer Yes and No; the reason field appears only after No", () => {
    let state = stateWithRows([makeRow({ case_id: "SC-A1" })]);
    let html = renderWorklist(state);
    expect(html).toContain('data-action="yes"');
    expect(html).toContain('data-action="no"');
    expect(html).not.toContain("<textarea");

    state = beginNo(state, "SC-A1");
    html = renderWorklist(state);
    expect(html).toContain("<textarea");
    expect(html).toContain("Record No");
    expect(html).toContain("Cancel");
  });

  it("a submission in flight shows a saving indicator", () => {
    const state = markSaving(stateWithRows([makeRow({ case_id: "SC-A1" })]), "SC-A1");
    const html = renderWorklist(state);
    expect(html).toContain("Saving…");
    expect(html).not.toContain('data-action="yes"');
  });

  it("reviewed rows show the recorded decision instead of buttons", () => {
    const rows = [makeRow({ feedback_status: "reviewed", feedback_decision: "No" })];
    const html = renderWorklist(stateWithRows(rows));
    expect(html).toContain("Reviewed: No");
    expect(html).not.toContain('data-action="yes"');
  });

  it("review buttons stay disabled until a reviewer id is set", () => {
    const anonymous = worklistLoaded(initialState(TODAY), makeWorklist([makeRow()]));
    expect(renderWorklist(anonymous)).toMatch(/data-action="yes"[^>]*disabled/);
    expect(renderWorklist(stateWithRows())).not.toMatch(/data-action="yes"[^>]*disabled/);
  });

  it("a failed submission shows the error inline and keeps the typed reason", () => {
    let state = stateWithRows([makeRow({ case_id: "SC-A1" })]);
    state = beginNo(state, "SC-A1");
    state = editReason(state, "SC-A1", "went home the same day");
    state = submitFailed(state, "SC-A1", "No", "API /v1/feedback: 500");
    const html = renderWorklist(state);
    expect(html).toContain("went home the same day");
    expect(html).toContain("inline-error");
    expect(html).toContain("API /v1/feedback: 500");
  });
});

describe("metrics rendering", () => {
  function metricsState(payload: MetricsPayload = makeMetrics()) {
    return metricsLoaded(initialState(TODAY), payload);
  }

  it("shows the service display strings verbatim, never reformatted", () => {
    const html = renderMetrics(metricsState());
    expect(html).toContain("0.94 (0.91–0.96)");
    expect(html).toContain("0.74 (0.71–0.77)");
    expect(html).not.toContain("0.9373");
  });

  it("labels all six summary metrics", () => {
    const html = renderMetrics(metricsState());
    for (const label of ["Sensitivity", "Specificity", "PPV", "NPV", "Accuracy", "Balanced accuracy"]) {
      expect(html).toContain(label);
    }
  });

  it("scales tier bars from the service point value and labels n", () => {
    const html = renderMetrics(metricsState());
    expect(html).toContain("width: 63%");
    expect(html).toContain("n=435");
    expect(html).toContain("width: 23%");
    expect(html).toContain("n=52");
  });

  it("marks tiers with no predictions instead of inventing a bar", () => {
    const payload = makeMetrics({ omitted_tiers: ["Negative"] });
    delete payload.tier_ppv?.Negative;
    const html = renderMetrics(metricsState(payload));
    expect(html).toContain("(no predictions)");
  });

  it("histogram bars sum to the coded No-reason total", () => {
    const payload = makeMetrics();
    const html = renderMetrics(metricsState(payload));
    const counts = [...html.matchAll(/data-count="(\d+)"/g)].map((m) => Number(m[1]));
    expect(counts.reduce((a, b) => a + b, 0)).toBe(169);
    expect(html).toContain("169 coded No-reasons");
  });

  it("renders the no-evaluable-cases state for an empty window", () => {
    const payload: MetricsPayload = {
      window: "2031-01",
      n_triaged: 0,
      n_labeled: 0,
      notice: "no evaluable cases",
    };
    const html = renderMetrics(metricsState(payload));
    expect(html).toContain("No evaluable cases in this window");
    expect(html).not.toContain("metric-card");
  });

  it("renders an error banner when the metrics request fails", () => {
    const state = metricsFailed(initialState(TODAY), "API /v1/metrics?window=nope: 422");
    const html = renderMetrics(state);
    expect(html).toContain("banner-error");
    expect(html).toContain("422");
  });
});

describe("page shell", () => {
  it("asks for the reviewer id once, then shows who is reviewing", () => {
    const anonymous = initialState(TODAY);
    expect(renderApp(anonymous)).toContain('data-action="set-reviewer"');
    const named = { ...anonymous, reviewerId: "dr-chen" };
    const html = renderApp(named);
    expect(html).toContain("Reviewing as <strong>dr-chen</strong>");
    expect(html).not.toContain('data-action="set-reviewer"');
  });

  it("escapeHtml neutralizes the five special characters", () => {
    expect(escapeHtml(`<a href="x">&'</a>`)).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&#39;&lt;/a&gt;");
  });
});
