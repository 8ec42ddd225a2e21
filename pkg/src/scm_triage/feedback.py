"""Clinician adjudications: the Yes/No decision record, reason coding into
discordance categories, and the deterministic latest-wins selection rule."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence


class FeedbackDecision(str, Enum):
    YES = "Yes"
    NO = "No"


class FeedbackCategory(str, Enum):
    INSUFFICIENT_COMPLEXITY = "InsufficientComplexity"
    INCOMPATIBLE_LEVEL_OF_CARE = "IncompatibleLevelOfCare"
    WRONG_PRIMARY_SERVICE = "WrongPrimaryService"
    OUTPATIENT_DAY_OF_SURGERY_CHANGE = "OutpatientDayOfSurgeryChange"
    UNDOCUMENTED_OUTSIDE_PROVIDER = "UndocumentedOutsideProvider"
    OTHER = "Other"


@dataclass(frozen=True)
class ClinicianFeedback:
    """One adjudication. Resubmission never mutates an old record; the
    selection rule below decides which record counts."""

    case_id: str
    decision: FeedbackDecision
    reviewer_id: str
    recorded_at: datetime
    reason: Optional[str] = None
    category: Optional[FeedbackCategory] = None

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "decision": self.decision.value,
            "reviewer_id": self.reviewer_id,
            "recorded_at": self.recorded_at.isoformat(),
            "reason": self.reason,
            "category": self.category.value if self.category else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClinicianFeedback":
        return cls(
            case_id=data["case_id"],
            decision=FeedbackDecision(data["decision"]),
            reviewer_id=data["reviewer_id"],
            recorded_at=datetime.fromisoformat(data["recorded_at"]),
            reason=data.get("reason"),
            category=FeedbackCategory(data["category"]) if data.get("category") else None,
        )


KeywordMap = tuple[tuple[FeedbackCategory, tuple[str, ...]], ...]


def _load_keyword_file(path: Path) -> KeywordMap:
    raw = json.loads(path.read_text(encoding="utf-8"))
    return tuple(
        (FeedbackCategory(entry["category"]), tuple(k.lower() for k in entry["keywords"]))
        for entry in raw["categories"]
    )


@lru_cache(maxsize=1)
def _default_keyword_map() -> KeywordMap:
    with resources.as_file(
        resources.files("scm_triage").joinpath("data/feedback_keywords.json")
    ) as path:
        return _load_keyword_file(path)


def load_keyword_map(path: Optional[str | Path] = None) -> KeywordMap:
    if path is None:
        return _default_keyword_map()
    return _load_keyword_file(Path(path))


def code_reason(reason: str, keyword_map: Optional[KeywordMap] = None) -> FeedbackCategory:
    """Classify a free-text reason; first matching category in map order wins,
    anything unmatched is Other. Total over non-empty strings."""
    if not reason or not reason.strip():
        raise ValueError("reason must be non-empty")
    lowered = reason.lower()
    for category, keywords in keyword_map or load_keyword_map():
        if any(keyword in lowered for keyword in keywords):
            return category
    return FeedbackCategory.OTHER


def with_coded_category(fb: ClinicianFeedback, keyword_map: Optional[KeywordMap] = None) -> ClinicianFeedback:
    """Fill in the category for No-decisions with a reason, unless a human
    already set one (the override escape hatch)."""
    if fb.category is not None:
        return fb
    if fb.decision == FeedbackDecision.NO and fb.reason and fb.reason.strip():
        return replace(fb, category=code_reason(fb.reason, keyword_map))
    return fb


def effective_decision(entries_in_log_order: Sequence[ClinicianFeedback]) -> Optional[ClinicianFeedback]:
    """The single decision a metrics snapshot uses for one case.

    Per reviewer, the latest submission wins (recorded_at, then log position).
    Across reviewers, the latest of those wins; timestamp ties go to the
    lexicographically greatest reviewer_id so the outcome never depends on
    arrival order.
    """
    latest: dict[str, tuple[datetime, int, ClinicianFeedback]] = {}
    for position, fb in enumerate(entries_in_log_order):
        current = latest.get(fb.reviewer_id)
        if current is None or (fb.recorded_at, position) >= (current[0], current[1]):
            latest[fb.reviewer_id] = (fb.recorded_at, position, fb)
    if not latest:
        return None
    _, winner = max(
        (( entry[0], reviewer), entry[2]) for reviewer, entry in latest.items()
    )
    return winner
