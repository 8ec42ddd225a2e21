/**
 * Shared builders for wire-shaped payloads used across the test suites.
 */

import type { MetricsPayload, WorklistPayload, WorklistRow } from "../src/api.js";

export function makeRow(overrides: Partial<WorklistRow> = {}): WorklistRow {
  return {
    case_id: "SC-00001",
    patient_ref: "P-00001",
    surgery_date: "2025-07-01",
    specialty: "Neurosurgery",
    patient_class: "Inpatient",
    site: "MainHospital",
    external_provider_group: false,
    scm_team_assigned: null,
    tier: "Affirmative",
    source: "LlmWorkflow",
    explanation_excerpt: "Scheduled as inpatient with a planned ICU admission.",
    feedback_status: "pending",
    feedback_decision: null,
    ...overrides,
  };
}

export function makeWorklist(rows: WorklistRow[], date = "2025-07-01"): WorklistPayload {
  return {
    date,
    notice: rows.length === 0 ? "no triage batch recorded for this date" : null,
    rows,
  };
}

export function makeMetrics(overrides: Partial<MetricsPayload> = {}): MetricsPayload {
  return {
    window: "all",
    n_triaged: 6193,
    n_labeled: 1077,
    notice: null,
    replicates: 10_000,
    seed: 12345,
    maybe_positive: true,
    confusion: { tp: 284, fp: 203, fn: 19, tn: 571 },
    metrics: {
      sensitivity: {
        point: 0.9373,
        ci_lo: 0.9081,
        ci_hi: 0.963,
        undefined_replicates: 0,
        display: "0.94 (0.91–0.96)",
      },
      specificity: {
        point: 0.7378,
        ci_lo: 0.7066,
        ci_hi: 0.7688,
        undefined_replicates: 0,
        display: "0.74 (0.71–0.77)",
      },
      ppv: {
        point: 0.5832,
        ci_lo: 0.5391,
        ci_hi: 0.6268,
        undefined_replicates: 0,
        display: "0.58 (0.54–0.63)",
      },
      npv: {
        point: 0.9678,
        ci_lo: 0.9523,
        ci_hi: 0.9812,
        undefined_replicates: 0,
        display: "0.97 (0.95–0.98)",
      },
      accuracy: {
        point: 0.7939,
        ci_lo: 0.7697,
        ci_hi: 0.8180,
        undefined_replicates: 0,
        display: "0.79 (0.77–0.82)",
      },
      balanced_accuracy: {
        point: 0.8375,
        ci_lo: 0.8190,
        ci_hi: 0.8554,
        undefined_replicates: 0,
        display: "0.84 (0.82–0.86)",
      },
    },
    tier_ppv: {
      Affirmative: { point: 0.6253, n: 435, ci_lo: 0.5797, ci_hi: 0.6701, display: "0.63 (0.58–0.67)" },
      Maybe: { point: 0.2308, n: 52, ci_lo: 0.1224, ci_hi: 0.3492, display: "0.23 (0.12–0.35)" },
      Negative: { point: 0.0322, n: 590, ci_lo: 0.0186, ci_hi: 0.0475, display: "0.03 (0.02–0.05)" },
    },
    omitted_tiers: [],
    agreement: {
      Affirmative: {
        total: 1429,
        with_feedback: 435,
        feedback_rate: 0.3044,
        agreements: 272,
        agreement_fraction: 0.6253,
      },
      Maybe: { total: 187, with_feedback: 52, feedback_rate: 0.278, agreements: 12, agreement_fraction: 0.2308 },
      Negative: {
        total: 4577,
        with_feedback: 590,
        feedback_rate: 0.1289,
        agreements: 571,
        agreement_fraction: 0.9678,
      },
    },
    category_histogram: {
      IncompatibleLevelOfCare: 30,
      InsufficientComplexity: 76,
      Other: 20,
      OutpatientDayOfSurgeryChange: 10,
      UndocumentedOutsideProvider: 11,
      WrongPrimaryService: 22,
    },
    ...overrides,
  };
}
