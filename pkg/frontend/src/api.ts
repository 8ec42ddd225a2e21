/**
 * Typed client for the triage service's /v1 endpoints.
 *
 * The types below mirror the JSON payloads byte for byte (snake_case and
 * all); nothing is renamed or recomputed on this side of the wire.
 */

const BASE = "";

export type Tier = "Affirmative" | "Maybe" | "Negative";

export const TIERS: Tier[] = ["Affirmative", "Maybe", "Negative"];

export type WorklistRow = {
  case_id: string;
  patient_ref: string;
  surgery_date: string;
  specialty: string;
  patient_class: string;
  site: string;
  external_provider_group: boolean;
  scm_team_assigned: string | null;
  tier: Tier;
  source: string;
  explanation_excerpt: string;
  feedback_status: "pending" | "reviewed";
  feedback_decision: "Yes" | "No" | null;
};

export type WorklistPayload = {
  date: string;
  notice: string | null;
  rows: WorklistRow[];
};

export type FeedbackRequest = {
  case_id: string;
  decision: "Yes" | "No";
  reviewer_id: string;
  reason?: string | null;
  category?: string | null;
};

export type FeedbackAck = {
  recorded: boolean;
  case_id: string;
  decision: "Yes" | "No";
  category: string | null;
};

export type MetricEntry = {
  point: number | null;
  ci_lo: number | null;
  ci_hi: number | null;
  undefined_replicates: number;
  display: string;
};

export type TierPpvEntry = {
  point: number;
  n: number;
  ci_lo: number | null;
  ci_hi: number | null;
  display: string;
};

export type AgreementEntry = {
  total: number;
  with_feedback: number;
  feedback_rate: number | null;
  agreements: number;
  agreement_fraction: number | null;
};

export type MetricsPayload = {
  window: string;
  n_triaged: number;
  n_labeled: number;
  notice: string | null;
  replicates?: number;
  seed?: number;
  maybe_positive?: boolean;
  confusion?: { tp: number; fp: number; fn: number; tn: number };
  metrics?: Record<string, MetricEntry>;
  tier_ppv?: Record<string, TierPpvEntry>;
  omitted_tiers?: string[];
  agreement?: Record<string, AgreementEntry>;
  category_histogram?: Record<string, number>;
};

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(`${BASE}${path}`, init);
  if (!res.ok) throw new Error(`API ${path}: ${res.status}`);
  return res.json() as Promise<T>;
}

export async function fetchWorklist(date: string): Promise<WorklistPayload> {
  const params = new URLSearchParams({ date });
  return request<WorklistPayload>(`/v1/worklist?${params}`);
}

export async function submitFeedback(body: FeedbackRequest): Promise<FeedbackAck> {
  return request<FeedbackAck>("/v1/feedback", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
}

export async function fetchMetrics(window: string, replicates?: number): Promise<MetricsPayload> {
  const params = new URLSearchParams({ window });
  if (replicates !== undefined) params.set("replicates", String(replicates));
  return request<MetricsPayload>(`/v1/metrics?${params}`);
}
