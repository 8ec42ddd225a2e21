"""Durable triage and feedback logs plus batch orchestration.

Both logs are append-only JSONL: supersession is a newer line, never an edit,
so the files double as audit trails. All indexes are in memory and rebuilt
from the logs on startup; readers get consistent snapshots (a batch becomes
visible only once fully appended).
"""
from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from scm_triage.cases import (
    DocumentationBundle,
    SurgicalCase,
    case_to_record,
    ingest_cases,
    parse_case_record,
)
from scm_triage.feedback import (
    ClinicianFeedback,
    FeedbackDecision,
    effective_decision,
    with_coded_category,
)
from scm_triage.metrics import LabeledRecord
from scm_triage.pipeline import (
    LlmBackend,
    PromptLibrary,
    RetryPolicy,
    DEFAULT_RETRY,
    ScreeningResult,
    ScreeningUnavailable,
    triage_case,
)
from scm_triage.rubric import Classification

logger = logging.getLogger(__name__)

TRIAGE_LOG_NAME = "triage_log.jsonl"
FEEDBACK_LOG_NAME = "feedback_log.jsonl"


class UnknownCaseError(RuntimeError):
    def __init__(self, case_id: str):
        super().__init__(f"unknown case_id: {case_id}")
        self.case_id = case_id


@dataclass(frozen=True)
class StoredTriage:
    case: SurgicalCase
    bundle: DocumentationBundle
    result: ScreeningResult
    triaged_at: datetime
    batch_date: date
    position: int


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


def parse_window(window: Optional[str]) -> tuple[Optional[date], Optional[date]]:
    """Parse a surgery-date window: 'all', 'START:END', 'START:' or ':END'."""
    if window is None or window == "" or window == "all":
        return None, None
    if ":" not in window:
        raise ValueError("window must be 'all' or 'START:END' with YYYY-MM-DD bounds")
    start_raw, end_raw = window.split(":", 1)
    try:
        start = date.fromisoformat(start_raw) if start_raw else None
        end = date.fromisoformat(end_raw) if end_raw else None
    except ValueError:
        raise ValueError(f"window bounds must be YYYY-MM-DD dates: {window!r}") from None
    if start and end and end < start:
        raise ValueError(f"window end precedes start: {window!r}")
    return start, end


def _in_window(day: date, bounds: tuple[Optional[date], Optional[date]]) -> bool:
    start, end = bounds
    if start and day < start:
        return False
    if end and day > end:
        return False
    return True


class TriageStore:
    """Single-writer store over the two JSONL logs."""

    def __init__(self, log_dir: str | Path):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.triage_path = self.log_dir / TRIAGE_LOG_NAME
        self.feedback_path = self.log_dir / FEEDBACK_LOG_NAME
        self._lock = threading.Lock()
        self._triage: list[StoredTriage] = []
        # (case_id, surgery_date iso) -> position of the superseding record
        self._latest_by_case_date: dict[tuple[str, str], int] = {}
        # case_id -> position of the newest record for that case
        self._latest_by_case: dict[str, int] = {}
        self._feedback: list[ClinicianFeedback] = []
        self._feedback_by_case: dict[str, list[int]] = {}
        self._load()

    # -- startup -------------------------------------------------------------

    def _load(self) -> None:
        if self.triage_path.exists():
            with self.triage_path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._index_triage(self._triage_from_line(json.loads(line)))
        if self.feedback_path.exists():
            with self.feedback_path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._index_feedback(ClinicianFeedback.from_dict(json.loads(line)))
        if self._triage or self._feedback:
            logger.info(
                "rebuilt store from %s: %d triage records, %d feedback records",
                self.log_dir, len(self._triage), len(self._feedback),
            )

    def _triage_from_line(self, data: dict) -> StoredTriage:
        case, bundle = parse_case_record(data["case"])
        return StoredTriage(
            case=case,
            bundle=bundle,
            result=ScreeningResult.from_dict(data["result"]),
            triaged_at=datetime.fromisoformat(data["triaged_at"]),
            batch_date=date.fromisoformat(data["batch_date"]),
            position=len(self._triage),
        )

    def _index_triage(self, record: StoredTriage) -> None:
        self._triage.append(record)
        key = (record.case.case_id, record.case.surgery_date.isoformat())
        self._latest_by_case_date[key] = record.position
        self._latest_by_case[record.case.case_id] = record.position

    def _index_feedback(self, fb: ClinicianFeedback) -> None:
        self._feedback.append(fb)
        self._feedback_by_case.setdefault(fb.case_id, []).append(len(self._feedback) - 1)

    # -- writes --------------------------------------------------------------

    def append_triage(
        self,
        case: SurgicalCase,
        bundle: DocumentationBundle,
        result: ScreeningResult,
        batch_date: date,
        triaged_at: Optional[datetime] = None,
    ) -> StoredTriage:
        return self.append_triage_batch([(case, bundle, result)], batch_date, triaged_at)[0]

    def append_triage_batch(
        self,
        rows: Sequence[tuple[SurgicalCase, DocumentationBundle, ScreeningResult]],
        batch_date: date,
        triaged_at: Optional[datetime] = None,
    ) -> list[StoredTriage]:
        """Append a completed batch under one lock so readers never observe a
        partially visible batch."""
        stamp = triaged_at or _utcnow()
        stored: list[StoredTriage] = []
        with self._lock:
            with self.triage_path.open("a", encoding="utf-8") as fh:
                for case, bundle, result in rows:
                    record = StoredTriage(
                        case=case,
                        bundle=bundle,
                        result=result,
                        triaged_at=stamp,
                        batch_date=batch_date,
                        position=len(self._triage),
                    )
                    fh.write(json.dumps({
                        "case": case_to_record(case, bundle),
                        "result": result.to_dict(),
                        "triaged_at": record.triaged_at.isoformat(),
                        "batch_date": batch_date.isoformat(),
                    }) + "\n")
                    self._index_triage(record)
                    stored.append(record)
        return stored

    def record_feedback(
        self, fb: ClinicianFeedback, recorded_at: Optional[datetime] = None
    ) -> ClinicianFeedback:
        """Validate, auto-code, and append one adjudication."""
        if recorded_at is not None:
            fb = ClinicianFeedback(
                case_id=fb.case_id,
                decision=fb.decision,
                reviewer_id=fb.reviewer_id,
                recorded_at=recorded_at,
                reason=fb.reason,
                category=fb.category,
            )
        fb = with_coded_category(fb)
        with self._lock:
            if fb.case_id not in self._latest_by_case:
                raise UnknownCaseError(fb.case_id)
            with self.feedback_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(fb.to_dict()) + "\n")
            self._index_feedback(fb)
        return fb

    # -- reads ---------------------------------------------------------------

    def _snapshot(self) -> tuple[list[StoredTriage], dict[tuple[str, str], int], list[ClinicianFeedback], dict[str, list[int]]]:
        with self._lock:
            return (
                list(self._triage),
                dict(self._latest_by_case_date),
                list(self._feedback),
                {k: list(v) for k, v in self._feedback_by_case.items()},
            )

    def known_case_ids(self) -> set[str]:
        with self._lock:
            return set(self._latest_by_case)

    def worklist(self, day: date) -> list[StoredTriage]:
        """Latest record per case scheduled for the given date, strongest tier
        first, stable by case_id within a tier."""
        triage, latest_by_case_date, _, _ = self._snapshot()
        day_iso = day.isoformat()
        rows = [
            triage[pos]
            for (case_id, record_day), pos in latest_by_case_date.items()
            if record_day == day_iso
        ]
        rows.sort(key=lambda r: (-r.result.classification.rank, r.case.case_id))
        return rows

    def case_detail(self, case_id: str) -> tuple[StoredTriage, list[ClinicianFeedback]]:
        with self._lock:
            pos = self._latest_by_case.get(case_id)
            if pos is None:
                raise UnknownCaseError(case_id)
            record = self._triage[pos]
            feedback = [self._feedback[i] for i in self._feedback_by_case.get(case_id, [])]
        return record, feedback

    def evaluation_snapshot(
        self, window: Optional[str] = None
    ) -> tuple[list[Classification], list[LabeledRecord], list[ClinicianFeedback]]:
        """Inputs for a metrics report over a surgery-date window.

        Returns (predicted tier for every in-window case, labeled records for
        the cases with an effective adjudication, those effective feedback
        entries). Cases without feedback appear only in the first list.
        """
        bounds = parse_window(window)
        triage, latest_by_case_date, feedback, feedback_by_case = self._snapshot()

        # Latest record per case among in-window dates.
        latest_in_window: dict[str, StoredTriage] = {}
        for (case_id, day_iso), pos in latest_by_case_date.items():
            if not _in_window(date.fromisoformat(day_iso), bounds):
                continue
            current = latest_in_window.get(case_id)
            if current is None or pos > current.position:
                latest_in_window[case_id] = triage[pos]

        predictions: list[Classification] = []
        labeled: list[LabeledRecord] = []
        effective: list[ClinicianFeedback] = []
        for case_id in sorted(latest_in_window):
            record = latest_in_window[case_id]
            predictions.append(record.result.classification)
            entries = [feedback[i] for i in feedback_by_case.get(case_id, [])]
            decision = effective_decision(entries)
            if decision is None:
                continue
            labeled.append(
                LabeledRecord(
                    case_id=case_id,
                    predicted=record.result.classification,
                    reference=decision.decision,
                )
            )
            effective.append(decision)
        return predictions, labeled, effective


def category_histogram(effective: Sequence[ClinicianFeedback]) -> dict[str, int]:
    """Coded discordance categories over effective No-decisions with reasons."""
    counts: dict[str, int] = {}
    for fb in effective:
        if fb.decision != FeedbackDecision.NO or fb.category is None:
            continue
        counts[fb.category.value] = counts.get(fb.category.value, 0) + 1
    return dict(sorted(counts.items()))


# ---------------------------------------------------------------------------
# Batch orchestration
# ---------------------------------------------------------------------------

@dataclass
class BatchSummary:
    batch_date: date
    triaged: int = 0
    skipped_other_dates: int = 0
    tier_counts: dict[str, int] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "batch_date": self.batch_date.isoformat(),
            "triaged": self.triaged,
            "skipped_other_dates": self.skipped_other_dates,
            "tier_counts": self.tier_counts,
            "errors": self.errors,
        }


def run_batch(
    store: TriageStore,
    batch_date: date,
    source: str | Path,
    backend: LlmBackend,
    prompts: Optional[PromptLibrary] = None,
    retry: RetryPolicy = DEFAULT_RETRY,
    workers: int = 1,
) -> BatchSummary:
    """Triage every well-formed case scheduled for batch_date.

    Per-case failures (malformed records, backend exhaustion) are recorded in
    the summary and do not stop the batch. Results persist in input order and
    become visible to readers only when the whole batch has been appended.
    """
    prompts = prompts or PromptLibrary.load()
    summary = BatchSummary(batch_date=batch_date)
    ingest = ingest_cases(source, reference_date=batch_date)
    summary.errors.extend(str(err) for err in ingest.errors)

    todays = []
    for case, bundle in ingest.cases:
        if case.surgery_date == batch_date:
            todays.append((case, bundle))
        else:
            summary.skipped_other_dates += 1

    def screen(pair: tuple[SurgicalCase, DocumentationBundle]):
        case, bundle = pair
        try:
            return triage_case(case, bundle, backend, prompts, retry)
        except ScreeningUnavailable as exc:
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(screen, todays))
    else:
        outcomes = [screen(pair) for pair in todays]

    rows = []
    for (case, bundle), outcome in zip(todays, outcomes):
        if isinstance(outcome, ScreeningUnavailable):
            summary.errors.append(f"{case.case_id}: screening unavailable ({outcome})")
            continue
        rows.append((case, bundle, outcome))

    for record in store.append_triage_batch(rows, batch_date):
        tier = record.result.classification.value
        summary.tier_counts[tier] = summary.tier_counts.get(tier, 0) + 1
    summary.triaged = len(rows)
    summary.tier_counts = dict(sorted(summary.tier_counts.items()))
    return summary
