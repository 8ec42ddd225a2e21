"""Domain types for scheduled surgical cases and their documentation, plus
ingestion of case records from JSON / JSONL sources.

A case record is one JSON object (see ``CASE_SCHEMA_FIELDS``); a source is a
single ``.json`` file, a ``.jsonl`` file with one record per line, or a
directory containing any mix of the two. Malformed records are reported, never
silently dropped.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional


class Specialty(str, Enum):
    NEUROSURGERY = "Neurosurgery"
    ORTHOPEDICS = "Orthopedics"
    OTOLARYNGOLOGY = "Otolaryngology"
    OTHER = "Other"


class PatientClass(str, Enum):
    INPATIENT = "Inpatient"
    TO_BE_ADMITTED = "ToBeAdmitted"
    OUTPATIENT_PROCEDURE = "OutpatientProcedure"
    OVERNIGHT_RECOVERY_OUTPATIENT = "OvernightRecoveryOutpatient"


class Site(str, Enum):
    MAIN_HOSPITAL = "MainHospital"
    OTHER_SITE = "OtherSite"


# Scheduling-system display strings normalized at ingestion. Unknown strings
# are record-level errors: the structural exclusion rules hinge on this field,
# so silent coercion is not acceptable.
PATIENT_CLASS_ALIASES = {
    "inpatient": PatientClass.INPATIENT,
    "to be admitted": PatientClass.TO_BE_ADMITTED,
    "tobeadmitted": PatientClass.TO_BE_ADMITTED,
    "op surgery/procedure": PatientClass.OUTPATIENT_PROCEDURE,
    "outpatientprocedure": PatientClass.OUTPATIENT_PROCEDURE,
    "overnight recovery op surgery": PatientClass.OVERNIGHT_RECOVERY_OUTPATIENT,
    "overnightrecoveryoutpatient": PatientClass.OVERNIGHT_RECOVERY_OUTPATIENT,
}

SPECIALTY_ALIASES = {
    "neurosurgery": Specialty.NEUROSURGERY,
    "nsgy": Specialty.NEUROSURGERY,
    "orthopedics": Specialty.ORTHOPEDICS,
    "ortho": Specialty.ORTHOPEDICS,
    "otolaryngology": Specialty.OTOLARYNGOLOGY,
    "ent": Specialty.OTOLARYNGOLOGY,
    "other": Specialty.OTHER,
}

SITE_ALIASES = {
    "mainhospital": Site.MAIN_HOSPITAL,
    "main hospital": Site.MAIN_HOSPITAL,
    "othersite": Site.OTHER_SITE,
    "other site": Site.OTHER_SITE,
}

CASE_SCHEMA_FIELDS = (
    "case_id",
    "patient_ref",
    "surgery_date",
    "specialty",
    "patient_class",
    "site",
    "external_provider_group",
    "scm_team_assigned",
    "preop_note",
    "medications",
)


@dataclass(frozen=True)
class SurgicalCase:
    """Schedule metadata and structured flags for one scheduled case."""

    case_id: str
    patient_ref: str
    surgery_date: date
    specialty: Specialty
    patient_class: PatientClass
    site: Site
    external_provider_group: bool
    scm_team_assigned: Optional[str] = None


@dataclass(frozen=True)
class DocumentationBundle:
    """Unstructured inputs to screening.

    ``preop_note`` is ``None`` when no note exists yet, which is distinct from
    an empty string (a note that exists but has no content).
    """

    preop_note: Optional[str]
    medication_list: tuple[str, ...] = ()

    @property
    def note_text(self) -> str:
        return self.preop_note or ""

    @property
    def is_empty(self) -> bool:
        return not self.note_text.strip() and not self.medication_list


AFFIRMATIVE_CRITERION_IDS = frozenset(range(1, 11))
MAYBE_CRITERION_IDS = frozenset(range(11, 15))


@dataclass(frozen=True)
class ComorbidityProfile:
    """Synthetic ground truth: which rubric criteria a generated case realizes.

    Criterion indices follow the screening rubric's numbering (1..10 strong,
    11..14 borderline).
    """

    affirmative_criteria: frozenset[int] = frozenset()
    maybe_criteria: frozenset[int] = frozenset()
    distractors: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        bad_aff = set(self.affirmative_criteria) - AFFIRMATIVE_CRITERION_IDS
        if bad_aff:
            raise ValueError(f"affirmative criteria out of range 1..10: {sorted(bad_aff)}")
        bad_maybe = set(self.maybe_criteria) - MAYBE_CRITERION_IDS
        if bad_maybe:
            raise ValueError(f"maybe criteria out of range 11..14: {sorted(bad_maybe)}")


class IngestFatalError(RuntimeError):
    """Source missing or unreadable; nothing can be ingested."""


@dataclass(frozen=True)
class RecordError:
    """One malformed record, identified as precisely as the record allows."""

    case_id: Optional[str]
    field: Optional[str]
    message: str
    origin: str = ""

    def __str__(self) -> str:
        who = self.case_id or "<unknown case>"
        where = f" [{self.origin}]" if self.origin else ""
        what = f" field '{self.field}':" if self.field else ""
        return f"{who}{where}{what} {self.message}"


@dataclass
class IngestResult:
    cases: list[tuple[SurgicalCase, DocumentationBundle]] = field(default_factory=list)
    errors: list[RecordError] = field(default_factory=list)


def _parse_enum(raw: object, aliases: dict, field_name: str) -> object:
    if not isinstance(raw, str):
        raise ValueError(f"expected string for {field_name}, got {type(raw).__name__}")
    key = raw.strip().lower()
    if key not in aliases:
        raise ValueError(f"unknown {field_name} value {raw!r}")
    return aliases[key]


def parse_case_record(record: dict, reference_date: Optional[date] = None) -> tuple[SurgicalCase, DocumentationBundle]:
    """Validate one raw JSON record and build the typed case.

    Raises ValueError with a ``field=`` prefix naming the offending field so
    callers can turn it into a RecordError.
    """
    if not isinstance(record, dict):
        raise ValueError("field=<record> record is not a JSON object")

    def fail(field_name: str, message: str) -> ValueError:
        return ValueError(f"field={field_name} {message}")

    case_id = record.get("case_id")
    if not isinstance(case_id, str) or not case_id.strip():
        raise fail("case_id", "missing or empty")

    patient_ref = record.get("patient_ref")
    if not isinstance(patient_ref, str) or not patient_ref.strip():
        raise fail("patient_ref", "missing or empty")

    raw_date = record.get("surgery_date")
    if raw_date is None:
        raise fail("surgery_date", "missing")
    try:
        surgery_date = date.fromisoformat(str(raw_date))
    except ValueError:
        raise fail("surgery_date", f"not a YYYY-MM-DD date: {raw_date!r}") from None
    if reference_date is not None and surgery_date < reference_date:
        raise fail(
            "surgery_date",
            f"{surgery_date.isoformat()} is before the batch reference date {reference_date.isoformat()}",
        )

    try:
        specialty = _parse_enum(record.get("specialty"), SPECIALTY_ALIASES, "specialty")
    except ValueError as exc:
        raise fail("specialty", str(exc)) from None
    try:
        patient_class = _parse_enum(record.get("patient_class"), PATIENT_CLASS_ALIASES, "patient_class")
    except ValueError as exc:
        raise fail("patient_class", str(exc)) from None
    try:
        site = _parse_enum(record.get("site"), SITE_ALIASES, "site")
    except ValueError as exc:
        raise fail("site", str(exc)) from None

    external = record.get("external_provider_group")
    if not isinstance(external, bool):
        raise fail("external_provider_group", "missing or not a boolean")

    team = record.get("scm_team_assigned")
    if team is not None and not isinstance(team, str):
        raise fail("scm_team_assigned", "must be a string or null")

    note = record.get("preop_note")
    if note is not None and not isinstance(note, str):
        raise fail("preop_note", "must be a string or null")

    meds = record.get("medications", [])
    if meds is None:
        meds = []
    if not isinstance(meds, list) or not all(isinstance(m, str) for m in meds):
        raise fail("medications", "must be a list of strings")

    case = SurgicalCase(
        case_id=case_id,
        patient_ref=patient_ref,
        surgery_date=surgery_date,
        specialty=specialty,
        patient_class=patient_class,
        site=site,
        external_provider_group=external,
        scm_team_assigned=team,
    )
    bundle = DocumentationBundle(preop_note=note, medication_list=tuple(meds))
    return case, bundle


def case_to_record(case: SurgicalCase, bundle: DocumentationBundle) -> dict:
    """Serialize back to the documented JSON case schema (round-trip safe)."""
    return {
        "case_id": case.case_id,
        "patient_ref": case.patient_ref,
        "surgery_date": case.surgery_date.isoformat(),
        "specialty": case.specialty.value,
        "patient_class": case.patient_class.value,
        "site": case.site.value,
        "external_provider_group": case.external_provider_group,
        "scm_team_assigned": case.scm_team_assigned,
        "preop_note": bundle.preop_note,
        "medications": list(bundle.medication_list),
    }


def _iter_raw_records(source: Path) -> Iterator[tuple[str, object]]:
    """Yield (origin, parsed JSON value) pairs; origin pinpoints file + line."""
    if source.is_dir():
        paths = sorted(p for p in source.iterdir() if p.suffix in (".json", ".jsonl"))
        for path in paths:
            yield from _iter_raw_records(path)
        return
    text = source.read_text(encoding="utf-8")
    if source.suffix == ".jsonl":
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            origin = f"{source.name}:{lineno}"
            try:
                yield origin, json.loads(line)
            except json.JSONDecodeError as exc:
                yield origin, exc
    else:
        try:
            parsed = json.loads(text)
        except json.JSONDecodeError as exc:
            yield source.name, exc
            return
        if isinstance(parsed, list):
            for i, item in enumerate(parsed):
                yield f"{source.name}[{i}]", item
        else:
            yield source.name, parsed


def ingest_cases(source: str | Path, reference_date: Optional[date] = None) -> IngestResult:
    """Read every case record under ``source``.

    Well-formed records land in ``result.cases``; anything malformed lands in
    ``result.errors`` with case id and field where recoverable. Duplicate
    case_ids within the batch are errors (first occurrence wins).
    """
    path = Path(source)
    if not path.exists():
        raise IngestFatalError(f"case source does not exist: {path}")
    if path.is_file() and path.suffix not in (".json", ".jsonl"):
        raise IngestFatalError(f"unsupported case source (expect .json/.jsonl or directory): {path}")

    result = IngestResult()
    seen: set[str] = set()
    for origin, raw in _iter_raw_records(path):
        if isinstance(raw, json.JSONDecodeError):
            result.errors.append(RecordError(None, None, f"invalid JSON: {raw.msg}", origin))
            continue
        try:
            case, bundle = parse_case_record(raw, reference_date=reference_date)
        except ValueError as exc:
            message = str(exc)
            field_name = None
            if message.startswith("field="):
                field_name, _, message = message.partition(" ")
                field_name = field_name[len("field="):]
            case_id = raw.get("case_id") if isinstance(raw, dict) else None
            if not isinstance(case_id, str):
                case_id = None
            result.errors.append(RecordError(case_id, field_name, message, origin))
            continue
        if case.case_id in seen:
            result.errors.append(
                RecordError(case.case_id, "case_id", "duplicate case_id within batch", origin)
            )
            continue
        seen.add(case.case_id)
        result.cases.append((case, bundle))
    return result


def write_cases_jsonl(path: str | Path, cases: list[tuple[SurgicalCase, DocumentationBundle]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for case, bundle in cases:
            fh.write(json.dumps(case_to_record(case, bundle)) + "\n")
