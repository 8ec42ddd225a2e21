"""Adjudication records: reason coding and the latest-wins selection rule."""
import random
import string
from datetime import datetime, timezone

import pytest

from scm_triage.feedback import (
    ClinicianFeedback,
    FeedbackCategory,
    FeedbackDecision,
    code_reason,
    effective_decision,
    load_keyword_map,
    with_coded_category,
)


def _fb(reviewer="dr-a", at="2025-07-02T16:00:00+00:00", decision=FeedbackDecision.NO,
        reason=None, category=None, case_id="SC-1"):
    return ClinicianFeedback(
        case_id=case_id,
        decision=decision,
        reviewer_id=reviewer,
        recorded_at=datetime.fromisoformat(at),
        reason=reason,
        category=category,
    )


# ---------------------------------------------------------------------------
# Reason coding
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "reason,expected",
    [
        ("Planned ICU admission postoperatively.", FeedbackCategory.INCOMPATIBLE_LEVEL_OF_CARE),
        ("went home the same day", FeedbackCategory.OUTPATIENT_DAY_OF_SURGERY_CHANGE),
        ("Covered by PAMF, outside group handles these.", FeedbackCategory.UNDOCUMENTED_OUTSIDE_PROVIDER),
        ("Patient is healthy, not complex enough.", FeedbackCategory.INSUFFICIENT_COMPLEXITY),
        ("Belongs on the medicine primary service.", FeedbackCategory.WRONG_PRIMARY_SERVICE),
        ("Family requested no additional consult teams.", FeedbackCategory.OTHER),
    ],
)
def test_reason_keywords_map_to_categories(reason, expected):
    assert code_reason(reason) == expected


def test_coding_is_case_insensitive():
    assert code_reason("PLANNED icu STAY") == FeedbackCategory.INCOMPATIBLE_LEVEL_OF_CARE


def test_first_matching_category_wins_in_map_order():
    """A reason hitting two categories codes to whichever is earlier in the map."""
    keyword_map = load_keyword_map()
    text = "ICU level of care, and anyway the patient went home the same day"
    matched = [
        category
        for category, keywords in keyword_map
        if any(k in text.lower() for k in keywords)
    ]
    assert len(matched) >= 2
    assert code_reason(text) == matched[0]


def test_empty_reason_is_rejected():
    with pytest.raises(ValueError):
        code_reason("")
    with pytest.raises(ValueError):
        code_reason("   ")


def test_coding_is_total_over_arbitrary_text():
    rng = random.Random(99)
    alphabet = string.printable
    for _ in range(500):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 80)))
        if not text.strip():
            continue
        assert isinstance(code_reason(text), FeedbackCategory)


# ---------------------------------------------------------------------------
# Auto-coding on submission
# ---------------------------------------------------------------------------

def test_no_decisions_with_reasons_are_coded():
    coded = with_coded_category(_fb(reason="patient went home the same day"))
    assert coded.category == FeedbackCategory.OUTPATIENT_DAY_OF_SURGERY_CHANGE
    assert coded.reason == "patient went home the same day"


def test_yes_decisions_and_bare_no_decisions_stay_uncoded():
    yes = with_coded_category(_fb(decision=FeedbackDecision.YES, reason="good catch"))
    assert yes.category is None
    bare_no = with_coded_category(_fb(reason=None))
    assert bare_no.category is None
    blank_no = with_coded_category(_fb(reason="   "))
    assert blank_no.category is None


def test_human_set_category_is_preserved():
    fb = _fb(reason="planned icu admission", category=FeedbackCategory.OTHER)
    assert with_coded_category(fb).category == FeedbackCategory.OTHER


def test_feedback_dict_round_trip():
    fb = _fb(reason="icu", category=FeedbackCategory.INCOMPATIBLE_LEVEL_OF_CARE)
    assert ClinicianFeedback.from_dict(fb.to_dict()) == fb
    assert ClinicianFeedback.from_dict(_fb().to_dict()) == _fb()


# ---------------------------------------------------------------------------
# Effective decision
# ---------------------------------------------------------------------------

def test_no_feedback_means_no_effective_decision():
    assert effective_decision([]) is None


def test_single_entry_is_effective():
    fb = _fb()
    assert effective_decision([fb]) is fb


def test_reviewer_resubmission_supersedes_by_timestamp():
    early = _fb(at="2025-07-02T10:00:00+00:00", decision=FeedbackDecision.NO)
    late = _fb(at="2025-07-02T17:00:00+00:00", decision=FeedbackDecision.YES)
    assert effective_decision([early, late]).decision == FeedbackDecision.YES
    assert effective_decision([late, early]).decision == FeedbackDecision.YES


def test_same_reviewer_same_timestamp_later_log_entry_wins():
    first = _fb(decision=FeedbackDecision.NO)
    second = _fb(decision=FeedbackDecision.YES)
    assert effective_decision([first, second]) is second
    assert effective_decision([second, first]) is first


def test_latest_reviewer_wins_across_reviewers():
    older = _fb(reviewer="dr-z", at="2025-07-02T09:00:00+00:00", decision=FeedbackDecision.YES)
    newer = _fb(reviewer="dr-a", at="2025-07-03T09:00:00+00:00", decision=FeedbackDecision.NO)
    assert effective_decision([older, newer]).decision == FeedbackDecision.NO


def test_cross_reviewer_timestamp_ties_break_on_reviewer_id():
    """Equal timestamps resolve by reviewer id, not log arrival order."""
    a = _fb(reviewer="dr-alvarez", decision=FeedbackDecision.YES)
    z = _fb(reviewer="dr-zhou", decision=FeedbackDecision.NO)
    assert effective_decision([a, z]).reviewer_id == "dr-zhou"
    assert effective_decision([z, a]).reviewer_id == "dr-zhou"


def test_effective_decision_uses_each_reviewers_latest_only():
    """A reviewer's stale retraction cannot outrank their own newer entry."""
    entries = [
        _fb(reviewer="dr-b", at="2025-07-02T08:00:00+00:00", decision=FeedbackDecision.YES),
        _fb(reviewer="dr-a", at="2025-07-02T12:00:00+00:00", decision=FeedbackDecision.NO),
        _fb(reviewer="dr-b", at="2025-07-02T18:00:00+00:00", decision=FeedbackDecision.NO),
    ]
    winner = effective_decision(entries)
    assert winner.reviewer_id == "dr-b"
    assert winner.decision == FeedbackDecision.NO


def test_selection_is_deterministic_under_shuffling_reviewers():
    """Seeded property: permuting entries of distinct reviewers never changes
    the winner (position only matters within one reviewer at one timestamp)."""
    rng = random.Random(7)
    reviewers = [f"dr-{c}" for c in "abcdef"]
    for _ in range(100):
        entries = [
            _fb(
                reviewer=rng.choice(reviewers),
                at=f"2025-07-0{rng.randint(1, 9)}T1{rng.randint(0, 9)}:00:00+00:00",
                decision=rng.choice(list(FeedbackDecision)),
            )
            for _ in range(rng.randint(1, 8))
        ]
        # Keep one entry per (reviewer, timestamp) so order carries no meaning.
        unique = {(fb.reviewer_id, fb.recorded_at): fb for fb in entries}
        entries = list(unique.values())
        baseline = effective_decision(entries)
        shuffled = entries[:]
        rng.shuffle(shuffled)
        assert effective_decision(shuffled) is baseline
