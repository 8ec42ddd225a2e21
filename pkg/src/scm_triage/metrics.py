"""Evaluation over clinician-adjudicated screening decisions.

Predictions are three-tier; the reference standard is the binary Yes/No
adjudication. Affirmative and Maybe both collapse to the positive class by
default (the polarity of Maybe is configurable, and flipping it moves exactly
the Maybe-tier records between the confusion cells).

Confidence intervals are percentile bootstrap: case-level resampling with
replacement, 2.5th/97.5th percentiles with linear interpolation, replicates
whose metric is undefined dropped from the percentile computation and counted.
Deterministic under the resampling seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from scm_triage.feedback import FeedbackDecision
from scm_triage.rubric import TIERS_DESCENDING, Classification

METRIC_NAMES = (
    "sensitivity",
    "specificity",
    "ppv",
    "npv",
    "accuracy",
    "balanced_accuracy",
)

DEFAULT_REPLICATES = 10_000
DEFAULT_SEED = 12345

# Range separator used in display strings like "0.94 (0.91–0.96)".
RANGE_DASH = "–"


class NoEvaluableCasesError(RuntimeError):
    """Raised when a metric computation is requested with zero labeled cases."""


@dataclass(frozen=True)
class LabeledRecord:
    case_id: str
    predicted: Classification
    reference: FeedbackDecision


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def collapse(predicted: Classification, maybe_positive: bool = True) -> bool:
    """Tier-to-binary mapping; the single place it happens."""
    if predicted == Classification.AFFIRMATIVE:
        return True
    if predicted == Classification.MAYBE:
        return maybe_positive
    return False


def confusion(records: Sequence[LabeledRecord], maybe_positive: bool = True) -> ConfusionCounts:
    if not records:
        raise NoEvaluableCasesError("no evaluable cases: every record lacks a reference decision")
    tp = fp = fn = tn = 0
    for rec in records:
        positive = collapse(rec.predicted, maybe_positive)
        yes = rec.reference == FeedbackDecision.YES
        if positive and yes:
            tp += 1
        elif positive:
            fp += 1
        elif yes:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def point_metrics(c: ConfusionCounts) -> dict[str, Optional[float]]:
    sensitivity = _ratio(c.tp, c.tp + c.fn)
    specificity = _ratio(c.tn, c.tn + c.fp)
    balanced = (
        (sensitivity + specificity) / 2
        if sensitivity is not None and specificity is not None
        else None
    )
    return {
        "sensitivity": sensitivity,
        "specificity": specificity,
        "ppv": _ratio(c.tp, c.tp + c.fp),
        "npv": _ratio(c.tn, c.tn + c.fn),
        "accuracy": _ratio(c.tp + c.tn, c.total),
        "balanced_accuracy": balanced,
    }


# ---------------------------------------------------------------------------
# Bootstrap
# ---------------------------------------------------------------------------
#
# Each record is one of six categories (tier x reference), so a replicate is
# fully described by six counts. Resampling indexes into the category codes
# and every metric is then vectorized arithmetic over a (replicates, 6) count
# matrix; this is what keeps 10,000 replicates well under the time budget.

_TIER_INDEX = {
    Classification.AFFIRMATIVE: 0,
    Classification.MAYBE: 1,
    Classification.NEGATIVE: 2,
}


def _encode(records: Sequence[LabeledRecord]) -> np.ndarray:
    codes = np.empty(len(records), dtype=np.int8)
    for i, rec in enumerate(records):
        codes[i] = _TIER_INDEX[rec.predicted] * 2 + (
            0 if rec.reference == FeedbackDecision.YES else 1
        )
    return codes


def _counts_matrix(codes: np.ndarray, replicates: int, seed: int) -> np.ndarray:
    n = codes.shape[0]
    rng = np.random.default_rng(seed)
    counts = np.empty((replicates, 6), dtype=np.int64)
    # Chunked so the index matrix stays modest for large datasets.
    chunk = max(1, min(replicates, 2_000_000 // max(n, 1)))
    done = 0
    while done < replicates:
        take = min(chunk, replicates - done)
        idx = rng.integers(0, n, size=(take, n))
        sampled = codes[idx].astype(np.int64)
        offsets = (np.arange(take, dtype=np.int64) * 6)[:, None]
        flat = np.bincount((sampled + offsets).ravel(), minlength=take * 6)
        counts[done: done + take] = flat.reshape(take, 6)
        done += take
    return counts


def _metric_arrays(counts: np.ndarray, maybe_positive: bool) -> dict[str, np.ndarray]:
    a_yes = counts[:, 0].astype(np.float64)
    a_no = counts[:, 1].astype(np.float64)
    m_yes = counts[:, 2].astype(np.float64)
    m_no = counts[:, 3].astype(np.float64)
    n_yes = counts[:, 4].astype(np.float64)
    n_no = counts[:, 5].astype(np.float64)
    if maybe_positive:
        tp, fp = a_yes + m_yes, a_no + m_no
        fn, tn = n_yes, n_no
    else:
        tp, fp = a_yes, a_no
        fn, tn = m_yes + n_yes, m_no + n_no

    def ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
        out = np.full(num.shape, np.nan)
        np.divide(num, den, out=out, where=den > 0)
        return out

    sensitivity = ratio(tp, tp + fn)
    specificity = ratio(tn, tn + fp)
    total = tp + fp + fn + tn
    return {
        "sensitivity": sensitivity,
        "specificity": specificity,
        "ppv": ratio(tp, tp + fp),
        "npv": ratio(tn, tn + fn),
        "accuracy": ratio(tp + tn, total),
        "balanced_accuracy": (sensitivity + specificity) / 2.0,
        "tier_ppv:Affirmative": ratio(a_yes, a_yes + a_no),
        "tier_ppv:Maybe": ratio(m_yes, m_yes + m_no),
        "tier_ppv:Negative": ratio(n_yes, n_yes + n_no),
    }


@dataclass(frozen=True)
class CiEstimate:
    lo: Optional[float]
    hi: Optional[float]
    undefined_replicates: int
    defined_replicates: int

    @property
    def defined(self) -> bool:
        return self.lo is not None and self.hi is not None


def bootstrap_all(
    records: Sequence[LabeledRecord],
    replicates: int = DEFAULT_REPLICATES,
    seed: int = DEFAULT_SEED,
    maybe_positive: bool = True,
) -> dict[str, CiEstimate]:
    """CIs for every headline metric and every tier PPV from one resampling
    pass, so any subset of metrics agrees with any other run at the same seed."""
    if not records:
        raise NoEvaluableCasesError("no evaluable cases: nothing to resample")
    codes = _encode(records)
    counts = _counts_matrix(codes, replicates, seed)
    arrays = _metric_arrays(counts, maybe_positive)
    out: dict[str, CiEstimate] = {}
    for name, values in arrays.items():
        defined = values[~np.isnan(values)]
        undefined_count = int(values.shape[0] - defined.shape[0])
        if defined.shape[0] == 0:
            out[name] = CiEstimate(None, None, undefined_count, 0)
            continue
        lo, hi = np.percentile(defined, [2.5, 97.5])
        out[name] = CiEstimate(float(lo), float(hi), undefined_count, int(defined.shape[0]))
    return out


def bootstrap_ci(
    records: Sequence[LabeledRecord],
    metric: str,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = DEFAULT_SEED,
    maybe_positive: bool = True,
) -> CiEstimate:
    if metric not in METRIC_NAMES and not metric.startswith("tier_ppv:"):
        raise ValueError(f"unknown metric {metric!r}")
    return bootstrap_all(records, replicates, seed, maybe_positive)[metric]


# ---------------------------------------------------------------------------
# Tier-level views
# ---------------------------------------------------------------------------

def tier_counts(records: Sequence[LabeledRecord]) -> dict[Classification, tuple[int, int]]:
    """Per predicted tier: (reference-Yes count, total with feedback)."""
    out: dict[Classification, tuple[int, int]] = {}
    for tier in TIERS_DESCENDING:
        subset = [r for r in records if r.predicted == tier]
        yes = sum(1 for r in subset if r.reference == FeedbackDecision.YES)
        out[tier] = (yes, len(subset))
    return out


def tier_ppv(records: Sequence[LabeledRecord]) -> dict[Classification, float]:
    """Point PPV within each predicted tier; tiers without feedback omitted."""
    out: dict[Classification, float] = {}
    for tier, (yes, total) in tier_counts(records).items():
        if total:
            out[tier] = yes / total
    return out


@dataclass(frozen=True)
class AgreementRow:
    total: int
    with_feedback: int
    agreements: int

    @property
    def feedback_rate(self) -> Optional[float]:
        return self.with_feedback / self.total if self.total else None

    @property
    def agreement_fraction(self) -> Optional[float]:
        return self.agreements / self.with_feedback if self.with_feedback else None


def agreement_table(
    all_predictions: Sequence[Classification],
    records: Sequence[LabeledRecord],
    maybe_positive: bool = True,
) -> dict[Classification, AgreementRow]:
    """Feedback coverage and concordance per tier, over every triaged case.

    Agreement means the adjudication confirms the tier's polarity: Yes for a
    positive tier, No for a negative one.
    """
    rows: dict[Classification, AgreementRow] = {}
    for tier in TIERS_DESCENDING:
        total = sum(1 for p in all_predictions if p == tier)
        subset = [r for r in records if r.predicted == tier]
        positive = collapse(tier, maybe_positive)
        agree = sum(
            1
            for r in subset
            if (r.reference == FeedbackDecision.YES) == positive
        )
        rows[tier] = AgreementRow(total=total, with_feedback=len(subset), agreements=agree)
    return rows


# ---------------------------------------------------------------------------
# Assembled report
# ---------------------------------------------------------------------------

def _display(point: Optional[float], ci: Optional[CiEstimate]) -> str:
    if point is None:
        return "undefined"
    if ci is None or not ci.defined:
        return f"{point:.2f}"
    return f"{point:.2f} ({ci.lo:.2f}{RANGE_DASH}{ci.hi:.2f})"


@dataclass(frozen=True)
class MetricsReport:
    n_triaged: int
    n_labeled: int
    confusion: ConfusionCounts
    metrics: dict
    tier_ppv: dict
    omitted_tiers: tuple[str, ...]
    agreement: dict
    replicates: int
    seed: int
    maybe_positive: bool

    def to_json_dict(self) -> dict:
        return {
            "n_triaged": self.n_triaged,
            "n_labeled": self.n_labeled,
            "replicates": self.replicates,
            "seed": self.seed,
            "maybe_positive": self.maybe_positive,
            "confusion": self.confusion.to_dict(),
            "metrics": self.metrics,
            "tier_ppv": self.tier_ppv,
            "omitted_tiers": list(self.omitted_tiers),
            "agreement": self.agreement,
        }

    def render_text(self) -> str:
        lines = [
            f"Labeled cases: {self.n_labeled} of {self.n_triaged} triaged  "
            f"(tp={self.confusion.tp} fp={self.confusion.fp} "
            f"fn={self.confusion.fn} tn={self.confusion.tn})",
        ]
        for name in METRIC_NAMES:
            entry = self.metrics[name]
            lines.append(f"{name:<18} {entry['display']}")
        lines.append("PPV by tier:")
        for tier in TIERS_DESCENDING:
            entry = self.tier_ppv.get(tier.value)
            if entry is None:
                lines.append(f"  {tier.value:<12} (no predictions)")
                continue
            lines.append(f"  {tier.value:<12} {entry['display']}  n={entry['n']}")
        lines.append("Agreement by tier:")
        for tier in TIERS_DESCENDING:
            row = self.agreement.get(tier.value)
            if not row:
                continue
            rate = f"{row['feedback_rate'] * 100:.0f}%" if row["feedback_rate"] is not None else "n/a"
            frac = (
                f"{row['agreement_fraction'] * 100:.0f}%"
                if row["agreement_fraction"] is not None
                else "n/a"
            )
            lines.append(
                f"  {tier.value:<12} total={row['total']} "
                f"feedback={row['with_feedback']} ({rate}) "
                f"agreement={row['agreements']} ({frac})"
            )
        return "\n".join(lines)


def build_report(
    all_predictions: Sequence[Classification],
    records: Sequence[LabeledRecord],
    replicates: int = DEFAULT_REPLICATES,
    seed: int = DEFAULT_SEED,
    maybe_positive: bool = True,
) -> MetricsReport:
    counts = confusion(records, maybe_positive)
    points = point_metrics(counts)
    cis = bootstrap_all(records, replicates, seed, maybe_positive)

    metrics_payload = {}
    for name in METRIC_NAMES:
        ci = cis[name]
        metrics_payload[name] = {
            "point": points[name],
            "ci_lo": ci.lo,
            "ci_hi": ci.hi,
            "undefined_replicates": ci.undefined_replicates,
            "display": _display(points[name], ci),
        }

    per_tier = tier_counts(records)
    tier_payload = {}
    omitted = []
    for tier in TIERS_DESCENDING:
        yes, total = per_tier[tier]
        if not total:
            omitted.append(tier.value)
            continue
        ci = cis[f"tier_ppv:{tier.value}"]
        point = yes / total
        tier_payload[tier.value] = {
            "point": point,
            "n": total,
            "ci_lo": ci.lo,
            "ci_hi": ci.hi,
            "display": _display(point, ci),
        }

    agreement_payload = {}
    for tier, row in agreement_table(all_predictions, records, maybe_positive).items():
        agreement_payload[tier.value] = {
            "total": row.total,
            "with_feedback": row.with_feedback,
            "feedback_rate": row.feedback_rate,
            "agreements": row.agreements,
            "agreement_fraction": row.agreement_fraction,
        }

    return MetricsReport(
        n_triaged=len(all_predictions),
        n_labeled=len(records),
        confusion=counts,
        metrics=metrics_payload,
        tier_ppv=tier_payload,
        omitted_tiers=tuple(omitted),
        agreement=agreement_payload,
        replicates=replicates,
        seed=seed,
        maybe_positive=maybe_positive,
    )
