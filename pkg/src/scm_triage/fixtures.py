"""Reference fixtures.

Two things live here: the fixed evaluation dataset used by the regression
tests (a deployment-shaped population with known per-tier feedback and
agreement counts), and a demo seeder that fills a store with that population
plus a reviewable next-day worklist.
"""
from __future__ import annotations

import random
from dataclasses import replace
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path

from scm_triage.backends import StubLlmBackend
from scm_triage.feedback import ClinicianFeedback, FeedbackDecision
from scm_triage.generator import generate_cases
from scm_triage.metrics import LabeledRecord
from scm_triage.pipeline import PromptLibrary, triage_case
from scm_triage.rubric import Classification
from scm_triage.store import TriageStore

# Per-tier population shape: total triaged, cases with feedback, and how many
# of those adjudications were Yes. Everything the evaluation regression needs
# derives from these nine numbers.
REFERENCE_SHAPE = {
    Classification.AFFIRMATIVE: {"total": 1429, "feedback": 435, "yes": 272},
    Classification.MAYBE: {"total": 153, "feedback": 52, "yes": 12},
    Classification.NEGATIVE: {"total": 4611, "feedback": 590, "yes": 19},
}

# How the No-decisions on positive tiers break down: coded reason themes,
# plus reasons that code to Other, plus entries submitted without a comment.
REFERENCE_NO_REASONS = (
    ("Patient is healthy and not complex enough to need co-management.", 76),
    ("Planned ICU admission postoperatively; level of care is not compatible.", 30),
    ("Should be followed by the medicine primary service instead.", 22),
    ("Case changed to outpatient on the day of surgery.", 10),
    ("Patient is covered by an outside provider group.", 11),
    ("Family requested no additional consult teams.", 20),
    (None, 34),
)

REVIEWERS = ("dr-alvarez", "dr-chen", "dr-osei", "dr-patel")

DEMO_WINDOW_START = date(2025, 3, 1)
DEMO_WINDOW_END = date(2025, 6, 30)
DEMO_WORKLIST_DATE = date(2025, 7, 1)

# Per-archetype quota for the demo worklist date, so the next-day view shows
# every row variety (including external-provider exclusions) regardless of
# how the shuffle falls.
DEMO_WORKLIST_QUOTA = {
    "affirmative": 14,
    "maybe": 6,
    "negative": 14,
    "no_documentation": 2,
    "excluded_outpatient": 4,
    "excluded_offsite": 2,
    "excluded_external": 3,
}


def reference_labeled_records() -> list[LabeledRecord]:
    """The adjudicated subset: 1,077 labeled records with fixed per-tier
    Yes/No splits."""
    records = []
    for tier in (Classification.AFFIRMATIVE, Classification.MAYBE, Classification.NEGATIVE):
        shape = REFERENCE_SHAPE[tier]
        prefix = tier.value[:3].upper()
        for i in range(shape["feedback"]):
            records.append(
                LabeledRecord(
                    case_id=f"{prefix}-{i + 1:04d}",
                    predicted=tier,
                    reference=FeedbackDecision.YES if i < shape["yes"] else FeedbackDecision.NO,
                )
            )
    return records


def reference_predictions() -> list[Classification]:
    """Predicted tier for the whole population, labeled or not."""
    out: list[Classification] = []
    for tier, shape in REFERENCE_SHAPE.items():
        out.extend([tier] * shape["total"])
    return out


# ---------------------------------------------------------------------------
# Demo store seeding
# ---------------------------------------------------------------------------

# Archetype blocks realizing the per-tier totals. The three Negative-tier
# sources (benign documentation, absent documentation, structural exclusions)
# are split so worklists show all of them, including external-provider rows.
_DEMO_BLOCKS = (
    ("affirmative", 1429),
    ("maybe", 153),
    ("negative", 3800),
    ("no_documentation", 300),
    ("excluded_outpatient", 311),
    ("excluded_offsite", 100),
    ("excluded_external", 100),
)


def _demo_population(seed: int):
    cases = []
    for block_index, (archetype, count) in enumerate(_DEMO_BLOCKS):
        cases.extend(
            generate_cases(count, seed=seed * 31 + block_index, mix={archetype: 1.0})
        )
    return cases


def seed_demo(log_dir: str | Path, seed: int = 11) -> TriageStore:
    """Populate a store with the reference-shaped population.

    Past dates carry the full adjudicated history; the final date is an
    unreviewed next-day worklist. Deterministic under seed.
    """
    rng = random.Random(seed)
    prompts = PromptLibrary.load()
    backend = StubLlmBackend(prompts=prompts)
    generated = _demo_population(seed)
    rng.shuffle(generated)

    # Re-id sequentially and spread surgery dates over the window. The demo
    # worklist date takes the first few of each archetype off the shuffled
    # list so the next-day view always carries every row variety.
    window_days = (DEMO_WINDOW_END - DEMO_WINDOW_START).days
    remaining = dict(DEMO_WORKLIST_QUOTA)
    assigned = []
    for index, item in enumerate(generated):
        if remaining.get(item.archetype, 0) > 0:
            remaining[item.archetype] -= 1
            day = DEMO_WORKLIST_DATE
        else:
            day = DEMO_WINDOW_START + timedelta(days=rng.randint(0, window_days))
        case = replace(item.case, case_id=f"DC-{index + 1:05d}", surgery_date=day)
        assigned.append((case, item.bundle))

    store = TriageStore(log_dir)
    by_day: dict[date, list] = {}
    for case, bundle in assigned:
        by_day.setdefault(case.surgery_date, []).append((case, bundle))

    tier_members: dict[Classification, list[str]] = {tier: [] for tier in REFERENCE_SHAPE}
    for day in sorted(by_day):
        rows = []
        for case, bundle in sorted(by_day[day], key=lambda pair: pair[0].case_id):
            result = triage_case(case, bundle, backend, prompts)
            rows.append((case, bundle, result))
            if day != DEMO_WORKLIST_DATE:
                tier_members[result.classification].append(case.case_id)
        triaged_at = datetime.combine(day - timedelta(days=1), time(18, 0), tzinfo=timezone.utc)
        store.append_triage_batch(rows, batch_date=day, triaged_at=triaged_at)

    _seed_feedback(store, rng, tier_members)
    return store


def _seed_feedback(store: TriageStore, rng: random.Random, tier_members) -> None:
    no_reason_pool: list = []
    for reason, count in REFERENCE_NO_REASONS:
        no_reason_pool.extend([reason] * count)
    rng.shuffle(no_reason_pool)

    for tier, shape in REFERENCE_SHAPE.items():
        members = tier_members[tier]
        if len(members) < shape["feedback"]:
            raise RuntimeError(
                f"demo population too small for {tier.value}: "
                f"{len(members)} past cases, need {shape['feedback']} with feedback"
            )
        chosen = rng.sample(sorted(members), k=shape["feedback"])
        for i, case_id in enumerate(chosen):
            yes = i < shape["yes"]
            reason = None
            if not yes and tier != Classification.NEGATIVE:
                reason = no_reason_pool.pop()
            record, _ = store.case_detail(case_id)
            recorded_at = datetime.combine(
                record.case.surgery_date + timedelta(days=1),
                time(16, rng.randint(0, 59)),
                tzinfo=timezone.utc,
            )
            store.record_feedback(
                ClinicianFeedback(
                    case_id=case_id,
                    decision=FeedbackDecision.YES if yes else FeedbackDecision.NO,
                    reviewer_id=rng.choice(REVIEWERS),
                    recorded_at=recorded_at,
                    reason=reason,
                )
            )
    if no_reason_pool:
        raise RuntimeError(f"{len(no_reason_pool)} demo No-reasons left unassigned")
