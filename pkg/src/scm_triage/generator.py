"""Synthetic surgical-case generator.

Produces labeled populations for offline verification: every generated bundle
realizes exactly its profile's criteria through the shared vocabulary phrases,
so the phrase extractor (and therefore the stub backend) recovers the intended
tier. Output is deterministic under (n, seed, mix).

Archetype names accepted in a mix:

    affirmative          documentation meets at least one strong criterion
    maybe                borderline criteria only
    negative             distractor conditions only
    no_documentation     no note, no medication list
    excluded_outpatient  outpatient procedure class, benign documentation
    excluded_offsite     off-site location, benign documentation
    excluded_external    external provider group, benign documentation

Excluded archetypes carry benign documentation on purpose: their profile tier
is Negative, matching what the structural rules will assign, so generated
populations stay oracle-consistent end to end.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import date
from typing import Optional

from scm_triage.cases import (
    ComorbidityProfile,
    DocumentationBundle,
    PatientClass,
    Site,
    Specialty,
    SurgicalCase,
)
from scm_triage.rubric import CriterionVocabulary, load_vocabulary

ARCHETYPES = (
    "affirmative",
    "maybe",
    "negative",
    "no_documentation",
    "excluded_outpatient",
    "excluded_offsite",
    "excluded_external",
)

DEFAULT_MIX = {
    "affirmative": 0.30,
    "maybe": 0.18,
    "negative": 0.22,
    "no_documentation": 0.05,
    "excluded_outpatient": 0.12,
    "excluded_offsite": 0.05,
    "excluded_external": 0.08,
}

DEFAULT_SURGERY_DATE = date(2025, 7, 1)

PROCEDURES = {
    Specialty.NEUROSURGERY: (
        "lumbar laminectomy",
        "anterior cervical discectomy and fusion",
        "craniotomy for tumor resection",
        "transsphenoidal pituitary resection",
    ),
    Specialty.ORTHOPEDICS: (
        "total knee arthroplasty",
        "total hip arthroplasty",
        "rotator cuff repair",
        "ankle fracture open reduction and internal fixation",
    ),
    Specialty.OTOLARYNGOLOGY: (
        "total thyroidectomy",
        "endoscopic sinus surgery",
        "selective neck dissection",
        "tonsillectomy",
    ),
    Specialty.OTHER: (
        "laparoscopic cholecystectomy",
        "inguinal hernia repair",
        "implanted port placement",
    ),
}

SPECIALTY_WEIGHTS = (
    (Specialty.ORTHOPEDICS, 0.38),
    (Specialty.NEUROSURGERY, 0.32),
    (Specialty.OTOLARYNGOLOGY, 0.18),
    (Specialty.OTHER, 0.12),
)

# Patient classes a non-excluded (or off-site/external) case may carry.
ADMITTING_CLASSES = (
    (PatientClass.TO_BE_ADMITTED, 0.55),
    (PatientClass.INPATIENT, 0.30),
    (PatientClass.OVERNIGHT_RECOVERY_OUTPATIENT, 0.15),
)

ASSESSMENT_LINES = (
    "Patient reviewed and cleared to proceed pending day-of-surgery vitals.",
    "Plan discussed with the patient; anesthesia concerns addressed.",
    "Proceed with surgery as scheduled with standard perioperative monitoring.",
    "Cleared from the anesthesia standpoint.",
)

SCM_TEAMS = ("SCM-A", "SCM-B")

NO_HISTORY_LINE = "no significant past medical history documented"


@dataclass(frozen=True)
class GeneratedCase:
    case: SurgicalCase
    bundle: DocumentationBundle
    profile: ComorbidityProfile
    archetype: str


def _weighted_choice(rng: random.Random, pairs) -> object:
    values = [v for v, _ in pairs]
    weights = [w for _, w in pairs]
    return rng.choices(values, weights=weights, k=1)[0]


# ---------------------------------------------------------------------------
# Profile sampling
# ---------------------------------------------------------------------------

def _sample_profile(rng: random.Random, archetype: str, vocab: CriterionVocabulary) -> ComorbidityProfile:
    affirmative: set[int] = set()
    maybe: set[int] = set()
    if archetype == "affirmative":
        affirmative.update(rng.sample(sorted(vocab.affirmative_ids), k=rng.randint(1, 3)))
        if rng.random() < 0.30:
            maybe.add(rng.choice(sorted(vocab.maybe_ids)))
    elif archetype == "maybe":
        maybe.update(rng.sample(sorted(vocab.maybe_ids), k=rng.randint(1, 2)))
    # A note should not describe hypertension as both uncontrolled (criterion 5)
    # and well-controlled (criterion 12); drop the weaker mention.
    if 5 in affirmative:
        maybe.discard(12)
    return ComorbidityProfile(
        affirmative_criteria=frozenset(affirmative),
        maybe_criteria=frozenset(maybe),
    )


def _sample_distractors(rng: random.Random, vocab: CriterionVocabulary, low: int, high: int) -> list[str]:
    count = rng.randint(low, high)
    if count == 0:
        return []
    return rng.sample(list(vocab.distractor_note_phrases), k=min(count, len(vocab.distractor_note_phrases)))


# ---------------------------------------------------------------------------
# Text realization
# ---------------------------------------------------------------------------

def _history_phrases_for_profile(
    rng: random.Random, profile: ComorbidityProfile, vocab: CriterionVocabulary
) -> tuple[list[str], list[str]]:
    """Pick the note phrases and medication entries realizing the profile."""
    note_phrases: list[str] = []
    med_phrases: list[str] = []
    for cid in sorted(profile.affirmative_criteria | profile.maybe_criteria):
        crit = vocab.criterion(cid)
        if crit.components:
            tags = rng.sample(sorted(crit.components), k=rng.randint(crit.min_components, len(crit.components)))
            for tag in sorted(tags):
                note_phrases.append(rng.choice(list(crit.components[tag])))
        elif crit.note_phrases:
            note_phrases.append(rng.choice(list(crit.note_phrases)))
        else:
            med_phrases.append(rng.choice(list(crit.med_phrases)))
    return note_phrases, med_phrases


def _render_note(rng: random.Random, procedure: str, history_items: list[str]) -> str:
    items = list(history_items)
    rng.shuffle(items)
    if not items:
        items = [NO_HISTORY_LINE]
    lines = [
        "ANESTHESIA PRE-OPERATIVE EVALUATION",
        "",
        f"Planned procedure: {procedure}.",
        "",
        "PAST MEDICAL HISTORY:",
    ]
    lines.extend(f"- {item}" for item in items)
    lines.extend(["", "ASSESSMENT:", rng.choice(ASSESSMENT_LINES)])
    return "\n".join(lines)


def _build_bundle(
    rng: random.Random,
    archetype: str,
    profile: ComorbidityProfile,
    distractors: list[str],
    procedure: str,
    vocab: CriterionVocabulary,
) -> DocumentationBundle:
    if archetype == "no_documentation":
        return DocumentationBundle(preop_note=None, medication_list=())
    note_phrases, med_phrases = _history_phrases_for_profile(rng, profile, vocab)
    history = note_phrases + list(distractors)
    meds = list(med_phrases)
    extra_meds = rng.randint(0, 3)
    if extra_meds:
        meds.extend(rng.sample(list(vocab.distractor_med_phrases), k=extra_meds))
    rng.shuffle(meds)
    note = _render_note(rng, procedure, history)
    return DocumentationBundle(preop_note=note, medication_list=tuple(meds))


# ---------------------------------------------------------------------------
# Case assembly
# ---------------------------------------------------------------------------

def _build_case(
    rng: random.Random,
    index: int,
    archetype: str,
    surgery_date: date,
) -> SurgicalCase:
    specialty = _weighted_choice(rng, SPECIALTY_WEIGHTS)
    if archetype == "excluded_outpatient":
        patient_class = PatientClass.OUTPATIENT_PROCEDURE
    else:
        patient_class = _weighted_choice(rng, ADMITTING_CLASSES)
    site = Site.OTHER_SITE if archetype == "excluded_offsite" else Site.MAIN_HOSPITAL
    external = archetype == "excluded_external"
    team = rng.choice(SCM_TEAMS) if rng.random() < 0.15 else None
    return SurgicalCase(
        case_id=f"SC-{index + 1:05d}",
        patient_ref=f"P{rng.randrange(1_000_000):06d}",
        surgery_date=surgery_date,
        specialty=specialty,
        patient_class=patient_class,
        site=site,
        external_provider_group=external,
        scm_team_assigned=team,
    )


def normalize_mix(mix: Optional[dict[str, float]]) -> dict[str, float]:
    if mix is None:
        mix = DEFAULT_MIX
    unknown = set(mix) - set(ARCHETYPES)
    if unknown:
        raise ValueError(f"unknown archetypes in mix: {sorted(unknown)}")
    total = sum(mix.values())
    if total <= 0:
        raise ValueError("mix weights must sum to a positive value")
    return {k: v / total for k, v in mix.items() if v > 0}


def generate_cases(
    n: int,
    seed: int,
    mix: Optional[dict[str, float]] = None,
    surgery_date: date = DEFAULT_SURGERY_DATE,
    vocabulary: Optional[CriterionVocabulary] = None,
) -> list[GeneratedCase]:
    if n < 1:
        raise ValueError("n must be at least 1")
    vocab = vocabulary or load_vocabulary()
    weights = normalize_mix(mix)
    rng = random.Random(seed)
    archetype_names = sorted(weights)
    archetype_weights = [weights[name] for name in archetype_names]

    out: list[GeneratedCase] = []
    for index in range(n):
        archetype = rng.choices(archetype_names, weights=archetype_weights, k=1)[0]
        case = _build_case(rng, index, archetype, surgery_date)
        if archetype in ("affirmative", "maybe"):
            profile_base = _sample_profile(rng, archetype, vocab)
            distractors = _sample_distractors(rng, vocab, 0, 2)
        elif archetype == "negative":
            profile_base = ComorbidityProfile()
            distractors = _sample_distractors(rng, vocab, 1, 3)
        elif archetype == "no_documentation":
            profile_base = ComorbidityProfile()
            distractors = []
        else:  # structurally excluded: benign content only
            profile_base = ComorbidityProfile()
            distractors = _sample_distractors(rng, vocab, 0, 2)
        profile = ComorbidityProfile(
            affirmative_criteria=profile_base.affirmative_criteria,
            maybe_criteria=profile_base.maybe_criteria,
            distractors=tuple(distractors),
        )
        procedure = rng.choice(PROCEDURES[case.specialty])
        bundle = _build_bundle(rng, archetype, profile, distractors, procedure, vocab)
        out.append(GeneratedCase(case=case, bundle=bundle, profile=profile, archetype=archetype))
    return out
