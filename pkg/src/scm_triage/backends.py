"""Completion backends: a deterministic offline stub and an HTTP chat client.

The stub is the testing surrogate for the whole two-stage workflow. It renders
the phrase extractor's findings as prose shaped like the classification
template's final request (tier, summary, direct quotes, criterion numbers) and
implements the parsing stage as a deterministic extraction of that shape. Its
failure injections (transport errors, garbled parse output, a forced tier)
exist so the pipeline's degradation paths can be exercised on demand.
"""
from __future__ import annotations

import json
import logging
import os
import threading
from typing import Optional

import requests

from scm_triage.pipeline import (
    BackendTransportError,
    PromptLibrary,
    DOCUMENTATION_PLACEHOLDER,
    RAW_RESPONSE_PLACEHOLDER,
    split_documentation,
)
from scm_triage.rubric import (
    Classification,
    CriterionVocabulary,
    ExtractionResult,
    load_vocabulary,
    rubric_extract,
)

logger = logging.getLogger(__name__)

INSUFFICIENCY_MARKERS = ("insufficient", "missing", "ambiguous")

PARSE_ERROR_REPLY = "PARSE-ERROR: no classification token found in passage"


def _template_affixes(template: str, placeholder: str) -> tuple[str, str]:
    prefix, _, suffix = template.partition(placeholder)
    return prefix, suffix


def _strip_affixes(text: str, prefix: str, suffix: str) -> str:
    if text.startswith(prefix) and text.endswith(suffix) and len(text) >= len(prefix) + len(suffix):
        return text[len(prefix): len(text) - len(suffix)]
    return text


class StubLlmBackend:
    """Rubric-driven stand-in for a hosted model. Pure given its inputs."""

    def __init__(
        self,
        prompts: Optional[PromptLibrary] = None,
        vocabulary: Optional[CriterionVocabulary] = None,
        garble_parse: bool = False,
        force_tier: Optional[Classification] = None,
        fail_first_calls: int = 0,
        fail_stage: str = "any",
    ):
        self.backend_id = "stub-rubric"
        self._prompts = prompts or PromptLibrary.load()
        self._vocab = vocabulary or load_vocabulary()
        self._garble_parse = garble_parse
        self._force_tier = force_tier
        self._fail_first_calls = fail_first_calls
        self._fail_stage = fail_stage
        self._failures_injected = 0
        self._lock = threading.Lock()
        self.classification_calls = 0
        self.parse_calls = 0
        self._classification_affixes = _template_affixes(
            self._prompts.classification_template, DOCUMENTATION_PLACEHOLDER
        )
        self._parse_affixes = _template_affixes(
            self._prompts.parsing_template, RAW_RESPONSE_PLACEHOLDER
        )

    @property
    def total_calls(self) -> int:
        return self.classification_calls + self.parse_calls

    def complete(self, system: str, user: str) -> str:
        is_parse = user.startswith(self._parse_affixes[0])
        with self._lock:
            if is_parse:
                self.parse_calls += 1
            else:
                self.classification_calls += 1
            stage = "parsing" if is_parse else "classification"
            if self._failures_injected < self._fail_first_calls and self._fail_stage in ("any", stage):
                self._failures_injected += 1
                raise BackendTransportError("injected transport failure", self.backend_id)
        if is_parse:
            raw = _strip_affixes(user, *self._parse_affixes)
            return self._parse_reply(raw)
        documentation = _strip_affixes(user, *self._classification_affixes)
        return self._classification_reply(documentation)

    # -- classification stage ------------------------------------------------

    def _classification_reply(self, documentation: str) -> str:
        bundle = split_documentation(documentation)
        extraction = rubric_extract(bundle, self._vocab)
        if self._force_tier is not None:
            return (
                f"{self._force_tier.value}\n\n"
                f"The patient was assessed as {self._force_tier.value} on overall review "
                "of the documentation provided."
            )
        return self._render_prose(extraction)

    def _render_prose(self, extraction: ExtractionResult) -> str:
        tier = extraction.tier
        lines = [tier.value, ""]
        if extraction.hits:
            labels = []
            for cid in extraction.criterion_ids:
                label = self._vocab.criterion(cid).label
                if label not in labels:
                    labels.append(label)
            lines.append("Summary of problems: " + "; ".join(labels) + ".")
            for hit in extraction.hits:
                lines.append(f'Direct quote: "{hit.evidence_span}".')
            ids = ", ".join(str(c) for c in extraction.criterion_ids)
            word = "Criteria" if len(extraction.criterion_ids) > 1 else "Criterion"
            lines.append(f"{word} met: {ids}.")
        else:
            lines.append(
                "No qualifying conditions were documented, so no criteria are met."
            )
        if extraction.insufficient_documentation:
            lines.append(
                "No clinical documentation was available for this patient; there may "
                "have been insufficient information for this determination."
            )
        return "\n".join(lines)

    # -- parsing stage -------------------------------------------------------

    def _parse_reply(self, passage: str) -> str:
        if self._garble_parse:
            return "<<<garbled parse output>>>"
        tier = self._find_tier_token(passage)
        if tier is None:
            return PARSE_ERROR_REPLY
        body = " ".join(passage.split())
        if len(body) > 600:
            body = body[:600]
        lowered = passage.lower()
        if any(marker in lowered for marker in INSUFFICIENCY_MARKERS):
            explanation = (
                "Please review this patient manually: the passage notes that the "
                "documentation may be insufficient or ambiguous. " + body
            )
        else:
            explanation = body or f"The screening response indicated {tier.value}."
        return json.dumps({"classification": tier.value, "explanation": explanation})

    @staticmethod
    def _find_tier_token(passage: str) -> Optional[Classification]:
        best: Optional[Classification] = None
        best_pos = len(passage) + 1
        for tier in Classification:
            pos = passage.find(tier.value)
            if pos != -1 and pos < best_pos:
                best, best_pos = tier, pos
        return best


class HttpChatBackend:
    """Minimal chat-completion client: system + user message in, text out.

    Temperature defaults to 0 so repeated runs lean deterministic where the
    provider supports it.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: Optional[str] = None,
        timeout: float = 30.0,
        temperature: float = 0.0,
        session: Optional[requests.Session] = None,
    ):
        self.backend_id = f"http:{model}"
        self._endpoint = endpoint
        self._model = model
        self._api_key = api_key
        self._timeout = timeout
        self._temperature = temperature
        self._session = session or requests.Session()

    def complete(self, system: str, user: str) -> str:
        payload = {
            "model": self._model,
            "temperature": self._temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            response = self._session.post(
                self._endpoint, json=payload, headers=headers, timeout=self._timeout
            )
        except requests.RequestException as exc:
            raise BackendTransportError(str(exc), self.backend_id) from exc
        if response.status_code != 200:
            raise BackendTransportError(
                f"HTTP {response.status_code} from completion endpoint", self.backend_id
            )
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendTransportError(
                f"malformed completion payload: {exc}", self.backend_id
            ) from exc
        if not isinstance(content, str):
            raise BackendTransportError("completion content is not text", self.backend_id)
        return content


def make_backend(kind: str, settings, prompts: Optional[PromptLibrary] = None):
    """Build a backend from config: kind is 'stub' or 'http'."""
    if kind == "stub":
        return StubLlmBackend(prompts=prompts)
    if kind == "http":
        if not settings.endpoint or not settings.model:
            raise ValueError("http backend requires endpoint and model settings")
        api_key = os.environ.get(settings.api_key_env) if settings.api_key_env else None
        return HttpChatBackend(
            endpoint=settings.endpoint,
            model=settings.model,
            api_key=api_key,
            timeout=settings.timeout_s,
            temperature=settings.temperature,
        )
    raise ValueError(f"unknown backend kind: {kind!r}")
