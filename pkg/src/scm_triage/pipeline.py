"""Two-stage screening workflow.

Stage one sends the documentation to the model under the classification
template and keeps the reply as free text. Stage two sends that text through
the parsing template and validates the structured reply. Any failure to obtain
or validate a structured reply degrades to a Maybe classification that urges
manual review; the raw text is always retained for audit.

Template substitution uses ``str.replace`` on purpose: clinical text can
contain braces, which would break ``str.format``.
"""
from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Protocol

from scm_triage.cases import DocumentationBundle, SurgicalCase
from scm_triage.rubric import Classification
from scm_triage.rules import EXCLUSION_DESCRIPTIONS, ExclusionReason, apply_structural_rules

logger = logging.getLogger(__name__)

NOTE_HEADING = "PRE-OPERATIVE EVALUATION NOTE:"
MEDS_HEADING = "ACTIVE MEDICATION LIST:"
NOT_AVAILABLE = "NOT AVAILABLE"

DOCUMENTATION_PLACEHOLDER = "{documentation}"
RAW_RESPONSE_PLACEHOLDER = "{raw_response}"

CRITERION_HEADINGS = tuple(f"- {i})" for i in range(1, 15))

PARSE_FALLBACK_EXPLANATION = (
    "Please review this patient manually: the screening response could not be "
    "parsed into a structured result. The unparsed response is retained for audit."
)


class LlmBackend(Protocol):
    """Capability contract for completion providers."""

    backend_id: str

    def complete(self, system: str, user: str) -> str: ...


class BackendTransportError(RuntimeError):
    """A completion call failed for transport-level reasons; retriable."""

    def __init__(self, message: str, backend_id: str):
        super().__init__(message)
        self.backend_id = backend_id


class ScreeningUnavailable(RuntimeError):
    """No classification text could be obtained after retries.

    No tier is fabricated in this situation; the case surfaces as a batch
    error instead.
    """

    def __init__(self, message: str, backend_id: str, case_id: Optional[str] = None):
        super().__init__(message)
        self.backend_id = backend_id
        self.case_id = case_id


# ---------------------------------------------------------------------------
# Prompt templates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PromptLibrary:
    system_prompt: str
    classification_template: str
    parsing_template: str

    @classmethod
    def load(cls, prompt_dir: Optional[str | Path] = None) -> "PromptLibrary":
        if prompt_dir is None:
            root = resources.files("scm_triage").joinpath("prompts")
            lib = cls(
                system_prompt=root.joinpath("system.txt").read_text(encoding="utf-8"),
                classification_template=root.joinpath("classification.txt").read_text(encoding="utf-8"),
                parsing_template=root.joinpath("parsing.txt").read_text(encoding="utf-8"),
            )
        else:
            base = Path(prompt_dir)
            lib = cls(
                system_prompt=(base / "system.txt").read_text(encoding="utf-8"),
                classification_template=(base / "classification.txt").read_text(encoding="utf-8"),
                parsing_template=(base / "parsing.txt").read_text(encoding="utf-8"),
            )
        lib.validate()
        return lib

    def validate(self) -> None:
        """Guard against template drift before anything is dispatched."""
        if self.classification_template.count(DOCUMENTATION_PLACEHOLDER) != 1:
            raise ValueError("classification template must contain {documentation} exactly once")
        if self.parsing_template.count(RAW_RESPONSE_PLACEHOLDER) != 1:
            raise ValueError("parsing template must contain {raw_response} exactly once")
        missing = [h for h in CRITERION_HEADINGS if h not in self.classification_template]
        if missing:
            raise ValueError(f"classification template lost criterion headings: {missing}")
        if not self.system_prompt.strip():
            raise ValueError("system prompt is empty")

    def build_classification_prompt(self, documentation: str) -> str:
        return self.classification_template.replace(DOCUMENTATION_PLACEHOLDER, documentation)

    def build_parsing_prompt(self, raw_response: str) -> str:
        return self.parsing_template.replace(RAW_RESPONSE_PLACEHOLDER, raw_response)


# ---------------------------------------------------------------------------
# Documentation assembly
# ---------------------------------------------------------------------------

def build_documentation(bundle: DocumentationBundle) -> str:
    """Render the note and medication list under labeled headings.

    Missing sections are rendered as explicit NOT AVAILABLE markers so the
    model is told, rather than left to infer, that documentation is absent.
    """
    note_text = bundle.note_text.strip() and bundle.note_text or NOT_AVAILABLE
    if bundle.medication_list:
        meds_text = "\n".join(f"- {med}" for med in bundle.medication_list)
    else:
        meds_text = NOT_AVAILABLE
    return f"{NOTE_HEADING}\n{note_text}\n\n{MEDS_HEADING}\n{meds_text}"


def split_documentation(documentation: str) -> DocumentationBundle:
    """Inverse of build_documentation, for consumers that receive the rendered
    text (the offline stub). Arbitrary text that was not produced by
    build_documentation is treated as a bare note."""
    marker = f"\n\n{MEDS_HEADING}\n"
    if not documentation.startswith(NOTE_HEADING) or marker not in documentation:
        return DocumentationBundle(preop_note=documentation)
    note_part, meds_part = documentation[len(NOTE_HEADING) + 1:].split(marker, 1)
    note = None if note_part == NOT_AVAILABLE else note_part
    if meds_part == NOT_AVAILABLE:
        meds: tuple[str, ...] = ()
    else:
        meds = tuple(
            line[2:] for line in meds_part.splitlines() if line.startswith("- ")
        )
    return DocumentationBundle(preop_note=note, medication_list=meds)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

class ResultSource(str, Enum):
    STRUCTURAL_RULE = "StructuralRule"
    LLM_PIPELINE = "LlmPipeline"
    PARSE_FALLBACK = "ParseFallback"


@dataclass(frozen=True)
class ScreeningResult:
    classification: Classification
    explanation: str
    criteria_cited: tuple[int, ...]
    source: ResultSource
    raw_response: str
    rule_reason: Optional[ExclusionReason] = None

    def __post_init__(self) -> None:
        if not self.explanation.strip():
            raise ValueError("explanation must be non-empty")
        if self.source == ResultSource.PARSE_FALLBACK and self.classification != Classification.MAYBE:
            raise ValueError("parse fallback must classify Maybe")

    def to_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "explanation": self.explanation,
            "criteria_cited": list(self.criteria_cited),
            "source": self.source.value,
            "raw_response": self.raw_response,
            "rule_reason": self.rule_reason.value if self.rule_reason else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScreeningResult":
        return cls(
            classification=Classification(data["classification"]),
            explanation=data["explanation"],
            criteria_cited=tuple(int(c) for c in data.get("criteria_cited", ())),
            source=ResultSource(data["source"]),
            raw_response=data.get("raw_response", ""),
            rule_reason=ExclusionReason(data["rule_reason"]) if data.get("rule_reason") else None,
        )


# ---------------------------------------------------------------------------
# Retry handling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RetryPolicy:
    """Up to ``attempts`` tries per call with exponential backoff."""

    attempts: int = 3
    base_delay: float = 0.25
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)


DEFAULT_RETRY = RetryPolicy()


def _call_with_retries(
    backend: LlmBackend, system: str, user: str, policy: RetryPolicy, stage: str
) -> str:
    last_error: Optional[BackendTransportError] = None
    for attempt in range(policy.attempts):
        try:
            return backend.complete(system, user)
        except BackendTransportError as exc:
            last_error = exc
            if attempt + 1 < policy.attempts:
                delay = policy.base_delay * (2 ** attempt)
                logger.warning(
                    "%s call to %s failed (attempt %d/%d), retrying in %.2fs: %s",
                    stage, exc.backend_id, attempt + 1, policy.attempts, delay, exc,
                )
                policy.sleep(delay)
    assert last_error is not None
    raise last_error


# ---------------------------------------------------------------------------
# The two stages
# ---------------------------------------------------------------------------

def classify(
    bundle: DocumentationBundle,
    backend: LlmBackend,
    prompts: Optional[PromptLibrary] = None,
    retry: RetryPolicy = DEFAULT_RETRY,
) -> str:
    """Run the classification stage and return the model's free-text reply.

    The reply is never interpreted here. Transport exhaustion raises
    ScreeningUnavailable; no tier is invented without model output.
    """
    prompts = prompts or PromptLibrary.load()
    user = prompts.build_classification_prompt(build_documentation(bundle))
    try:
        return _call_with_retries(backend, prompts.system_prompt, user, retry, "classification")
    except BackendTransportError as exc:
        raise ScreeningUnavailable(
            f"classification unavailable after {retry.attempts} attempts: {exc}",
            backend_id=exc.backend_id,
        ) from exc


def _coerce_json_object(reply: str) -> Optional[dict]:
    try:
        parsed = json.loads(reply)
    except (json.JSONDecodeError, ValueError):
        match = re.search(r"\{.*\}", reply, re.DOTALL)
        if not match:
            return None
        try:
            parsed = json.loads(match.group(0))
        except (json.JSONDecodeError, ValueError):
            return None
    return parsed if isinstance(parsed, dict) else None


def _validate_structured_reply(reply: str) -> Optional[tuple[Classification, str]]:
    """Schema check for the parsing stage's reply; None on any violation."""
    data = _coerce_json_object(reply)
    if data is None:
        return None
    fields = {str(k).lower(): v for k, v in data.items()}
    raw_tier = fields.get("classification")
    explanation = fields.get("explanation")
    if not isinstance(raw_tier, str) or not isinstance(explanation, str):
        return None
    if not explanation.strip():
        return None
    for tier in Classification:
        if raw_tier.strip().lower() == tier.value.lower():
            return tier, explanation
    return None


def extract_criteria_numbers(text: str) -> tuple[int, ...]:
    """Best-effort harvest of criterion numbers mentioned in an explanation."""
    found: set[int] = set()
    for match in re.finditer(r"criteri(?:on|a)", text, re.IGNORECASE):
        window = text[match.end(): match.end() + 60]
        window = re.split(r"[.;\n]", window, maxsplit=1)[0]
        for token in re.findall(r"\d{1,2}", window):
            value = int(token)
            if 1 <= value <= 14:
                found.add(value)
    return tuple(sorted(found))


def _fallback_result(raw: str) -> ScreeningResult:
    return ScreeningResult(
        classification=Classification.MAYBE,
        explanation=PARSE_FALLBACK_EXPLANATION,
        criteria_cited=(),
        source=ResultSource.PARSE_FALLBACK,
        raw_response=raw,
    )


def parse_result(
    raw: str,
    backend: LlmBackend,
    prompts: Optional[PromptLibrary] = None,
    retry: RetryPolicy = DEFAULT_RETRY,
) -> ScreeningResult:
    """Run the parsing stage over a raw classification reply.

    Total over arbitrary input: any transport or validation failure yields the
    Maybe fallback rather than an exception.
    """
    prompts = prompts or PromptLibrary.load()
    user = prompts.build_parsing_prompt(raw)
    try:
        reply = _call_with_retries(backend, prompts.system_prompt, user, retry, "parsing")
    except BackendTransportError:
        logger.warning("parsing stage unavailable; falling back to manual-review Maybe")
        return _fallback_result(raw)
    validated = _validate_structured_reply(reply)
    if validated is None:
        logger.warning("parsing stage returned an invalid structure; falling back")
        return _fallback_result(raw)
    tier, explanation = validated
    return ScreeningResult(
        classification=tier,
        explanation=explanation,
        criteria_cited=extract_criteria_numbers(explanation),
        source=ResultSource.LLM_PIPELINE,
        raw_response=raw,
    )


def triage_case(
    case: SurgicalCase,
    bundle: DocumentationBundle,
    backend: LlmBackend,
    prompts: Optional[PromptLibrary] = None,
    retry: RetryPolicy = DEFAULT_RETRY,
) -> ScreeningResult:
    """Screen one case: structural exclusions first, then the two LLM stages.

    Excluded cases never touch the backend.
    """
    outcome = apply_structural_rules(case)
    if outcome.excluded:
        assert outcome.reason is not None
        return ScreeningResult(
            classification=Classification.NEGATIVE,
            explanation=f"Excluded by scheduling rules: {EXCLUSION_DESCRIPTIONS[outcome.reason]}.",
            criteria_cited=(),
            source=ResultSource.STRUCTURAL_RULE,
            raw_response="",
            rule_reason=outcome.reason,
        )
    prompts = prompts or PromptLibrary.load()
    try:
        raw = classify(bundle, backend, prompts, retry)
    except ScreeningUnavailable as exc:
        raise ScreeningUnavailable(str(exc), backend_id=exc.backend_id, case_id=case.case_id) from exc
    return parse_result(raw, backend, prompts, retry)
