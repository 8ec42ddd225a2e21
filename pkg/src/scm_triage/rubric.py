"""Deterministic screening rubric.

Three pieces live here: the three-tier classification with its total order,
the controlled criterion vocabulary (shipped as a data file so the case
generator, the extractor, and the offline stub backend share one source of
truth), and the tier logic itself in two forms:

* ``rubric_oracle`` — profile-level ground truth for synthetic cases.
* ``rubric_extract`` — phrase matching over documentation text. This is not a
  clinical NLP engine; it recognizes exactly the vocabulary phrases, which is
  what makes offline verification deterministic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from scm_triage.cases import ComorbidityProfile, DocumentationBundle


class Classification(str, Enum):
    """Triage tier. Total order: Negative < Maybe < Affirmative."""

    NEGATIVE = "Negative"
    MAYBE = "Maybe"
    AFFIRMATIVE = "Affirmative"

    @property
    def rank(self) -> int:
        return _TIER_RANK[self]

    # str provides lexicographic comparisons, which would order the tiers
    # incorrectly; override all four with rank order.
    def __lt__(self, other: object) -> bool:
        if isinstance(other, Classification):
            return self.rank < other.rank
        return NotImplemented

    def __le__(self, other: object) -> bool:
        if isinstance(other, Classification):
            return self.rank <= other.rank
        return NotImplemented

    def __gt__(self, other: object) -> bool:
        if isinstance(other, Classification):
            return self.rank > other.rank
        return NotImplemented

    def __ge__(self, other: object) -> bool:
        if isinstance(other, Classification):
            return self.rank >= other.rank
        return NotImplemented


_TIER_RANK = {
    Classification.NEGATIVE: 0,
    Classification.MAYBE: 1,
    Classification.AFFIRMATIVE: 2,
}

TIERS_DESCENDING = (
    Classification.AFFIRMATIVE,
    Classification.MAYBE,
    Classification.NEGATIVE,
)


@dataclass(frozen=True)
class Criterion:
    criterion_id: int
    kind: str  # "affirmative" or "maybe"
    label: str
    note_phrases: tuple[str, ...] = ()
    med_phrases: tuple[str, ...] = ()
    # Multi-condition criterion (criterion 13): component tag -> phrases.
    # The criterion fires only when at least min_components distinct
    # components are present.
    components: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    min_components: int = 0

    @property
    def is_affirmative(self) -> bool:
        return self.kind == "affirmative"

    def all_phrases(self) -> tuple[str, ...]:
        phrases = list(self.note_phrases) + list(self.med_phrases)
        for component_phrases in self.components.values():
            phrases.extend(component_phrases)
        return tuple(phrases)


@dataclass(frozen=True)
class CriterionVocabulary:
    criteria: tuple[Criterion, ...]
    distractor_note_phrases: tuple[str, ...]
    distractor_med_phrases: tuple[str, ...]

    def criterion(self, criterion_id: int) -> Criterion:
        for crit in self.criteria:
            if crit.criterion_id == criterion_id:
                return crit
        raise KeyError(f"no criterion {criterion_id}")

    @property
    def affirmative_ids(self) -> tuple[int, ...]:
        return tuple(c.criterion_id for c in self.criteria if c.is_affirmative)

    @property
    def maybe_ids(self) -> tuple[int, ...]:
        return tuple(c.criterion_id for c in self.criteria if not c.is_affirmative)

    def phrases_by_criterion(self) -> dict[int, tuple[str, ...]]:
        return {c.criterion_id: c.all_phrases() for c in self.criteria}


def _load_vocabulary_file(path: Path) -> CriterionVocabulary:
    raw = json.loads(path.read_text(encoding="utf-8"))
    criteria = []
    for entry in raw["criteria"]:
        components = {
            tag: tuple(phrases)
            for tag, phrases in entry.get("components", {}).items()
        }
        criteria.append(
            Criterion(
                criterion_id=int(entry["id"]),
                kind=entry["kind"],
                label=entry["label"],
                note_phrases=tuple(entry.get("note_phrases", ())),
                med_phrases=tuple(entry.get("med_phrases", ())),
                components=components,
                min_components=int(entry.get("min_components", 0)),
            )
        )
    distractors = raw.get("distractors", {})
    return CriterionVocabulary(
        criteria=tuple(criteria),
        distractor_note_phrases=tuple(distractors.get("note_phrases", ())),
        distractor_med_phrases=tuple(distractors.get("med_phrases", ())),
    )


@lru_cache(maxsize=1)
def _default_vocabulary() -> CriterionVocabulary:
    with resources.as_file(resources.files("scm_triage").joinpath("data/criteria.json")) as path:
        return _load_vocabulary_file(path)


def load_vocabulary(path: Optional[str | Path] = None) -> CriterionVocabulary:
    """Load the criterion vocabulary, from the packaged data file by default."""
    if path is None:
        return _default_vocabulary()
    return _load_vocabulary_file(Path(path))


def rubric_oracle(profile: ComorbidityProfile) -> Classification:
    """Tier implied by a synthetic profile: any affirmative criterion wins,
    otherwise any borderline criterion yields Maybe, otherwise Negative."""
    if profile.affirmative_criteria:
        return Classification.AFFIRMATIVE
    if profile.maybe_criteria:
        return Classification.MAYBE
    return Classification.NEGATIVE


@dataclass(frozen=True)
class CriterionHit:
    criterion_id: int
    evidence_span: str


@dataclass(frozen=True)
class ExtractionResult:
    tier: Classification
    hits: tuple[CriterionHit, ...]
    insufficient_documentation: bool

    @property
    def criterion_ids(self) -> tuple[int, ...]:
        return tuple(sorted({hit.criterion_id for hit in self.hits}))


def _phrase_present(phrase: str, bundle: DocumentationBundle) -> bool:
    if phrase in bundle.note_text:
        return True
    return any(phrase in med for med in bundle.medication_list)


def rubric_extract(
    bundle: DocumentationBundle,
    vocabulary: Optional[CriterionVocabulary] = None,
) -> ExtractionResult:
    """Match vocabulary phrases against a documentation bundle and classify.

    Every evidence span is a verbatim substring of the bundle. An empty bundle
    classifies Negative with the insufficiency flag set so callers can surface
    the missing-documentation condition.
    """
    vocab = vocabulary or load_vocabulary()
    hits: list[CriterionHit] = []
    affirmative_hit = False
    maybe_hit = False

    for crit in vocab.criteria:
        crit_hits: list[CriterionHit] = []
        if crit.components:
            matched_components = []
            for tag, phrases in crit.components.items():
                for phrase in phrases:
                    if _phrase_present(phrase, bundle):
                        matched_components.append((tag, phrase))
                        break
            if len(matched_components) >= crit.min_components:
                crit_hits = [
                    CriterionHit(crit.criterion_id, phrase)
                    for _, phrase in matched_components
                ]
        else:
            for phrase in crit.note_phrases + crit.med_phrases:
                if _phrase_present(phrase, bundle):
                    crit_hits.append(CriterionHit(crit.criterion_id, phrase))
        if not crit_hits:
            continue
        hits.extend(crit_hits)
        if crit.is_affirmative:
            affirmative_hit = True
        else:
            maybe_hit = True

    if affirmative_hit:
        tier = Classification.AFFIRMATIVE
    elif maybe_hit:
        tier = Classification.MAYBE
    else:
        tier = Classification.NEGATIVE
    return ExtractionResult(
        tier=tier,
        hits=tuple(hits),
        insufficient_documentation=bundle.is_empty,
    )
