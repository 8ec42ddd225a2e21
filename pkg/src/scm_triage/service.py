"""HTTP surface consumed by the review UI and the CLI.

All endpoints live under /v1. Responses carry no wall-clock fields outside the
case-detail view, so identical logs always produce identical bytes; that is
what makes restart behavior directly verifiable.

Feedback can never alter a stored screening result: the human decision is an
overlay, joined at read time.
"""
from __future__ import annotations

import logging
from datetime import date
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from scm_triage.config import ReportSettings
from scm_triage.feedback import (
    ClinicianFeedback,
    FeedbackCategory,
    FeedbackDecision,
    effective_decision,
)
from scm_triage.metrics import NoEvaluableCasesError, build_report
from scm_triage.store import TriageStore, UnknownCaseError, category_histogram

logger = logging.getLogger(__name__)

EXCERPT_LENGTH = 200


class FeedbackIn(BaseModel):
    case_id: str = Field(min_length=1)
    decision: FeedbackDecision
    reviewer_id: str = Field(min_length=1)
    reason: Optional[str] = None
    category: Optional[FeedbackCategory] = None


def _excerpt(text: str) -> str:
    flat = " ".join(text.split())
    if len(flat) <= EXCERPT_LENGTH:
        return flat
    return flat[: EXCERPT_LENGTH - 1].rstrip() + "…"


def create_app(
    store: TriageStore,
    report_defaults: Optional[ReportSettings] = None,
    static_dir: Optional[str] = None,
) -> FastAPI:
    defaults = report_defaults or ReportSettings()
    app = FastAPI(title="scm-triage", version="0.1.0", docs_url=None, redoc_url=None)

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/v1/worklist")
    def worklist(date_: date = Query(alias="date")) -> dict:
        rows = []
        for record in store.worklist(date_):
            _, feedback_entries = store.case_detail(record.case.case_id)
            effective = effective_decision(feedback_entries)
            rows.append({
                "case_id": record.case.case_id,
                "patient_ref": record.case.patient_ref,
                "surgery_date": record.case.surgery_date.isoformat(),
                "specialty": record.case.specialty.value,
                "patient_class": record.case.patient_class.value,
                "site": record.case.site.value,
                "external_provider_group": record.case.external_provider_group,
                "scm_team_assigned": record.case.scm_team_assigned,
                "tier": record.result.classification.value,
                "source": record.result.source.value,
                "explanation_excerpt": _excerpt(record.result.explanation),
                "feedback_status": "reviewed" if effective else "pending",
                "feedback_decision": effective.decision.value if effective else None,
            })
        return {
            "date": date_.isoformat(),
            "notice": None if rows else "no triage batch recorded for this date",
            "rows": rows,
        }

    @app.post("/v1/feedback")
    def submit_feedback(payload: FeedbackIn) -> dict:
        from scm_triage.store import _utcnow  # single timestamp source

        fb = ClinicianFeedback(
            case_id=payload.case_id,
            decision=payload.decision,
            reviewer_id=payload.reviewer_id,
            recorded_at=_utcnow(),
            reason=payload.reason,
            category=payload.category,
        )
        try:
            stored = store.record_feedback(fb)
        except UnknownCaseError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {
            "recorded": True,
            "case_id": stored.case_id,
            "decision": stored.decision.value,
            "category": stored.category.value if stored.category else None,
        }

    @app.get("/v1/metrics")
    def metrics(
        window: str = "all",
        replicates: int = Query(default=defaults.replicates, ge=1, le=200_000),
        seed: int = defaults.seed,
    ) -> dict:
        try:
            predictions, labeled, effective = store.evaluation_snapshot(window)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        base = {"window": window, "n_triaged": len(predictions)}
        try:
            report = build_report(predictions, labeled, replicates=replicates, seed=seed)
        except NoEvaluableCasesError:
            return {**base, "notice": "no evaluable cases", "n_labeled": 0}
        payload = report.to_json_dict()
        payload.update(base)
        payload["notice"] = None
        payload["category_histogram"] = category_histogram(effective)
        return payload

    @app.get("/v1/cases/{case_id}")
    def case_detail(case_id: str) -> dict:
        try:
            record, feedback_entries = store.case_detail(case_id)
        except UnknownCaseError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        effective = effective_decision(feedback_entries)
        return {
            "case_id": record.case.case_id,
            "patient_ref": record.case.patient_ref,
            "surgery_date": record.case.surgery_date.isoformat(),
            "specialty": record.case.specialty.value,
            "patient_class": record.case.patient_class.value,
            "site": record.case.site.value,
            "external_provider_group": record.case.external_provider_group,
            "scm_team_assigned": record.case.scm_team_assigned,
            "preop_note": record.bundle.preop_note,
            "medications": list(record.bundle.medication_list),
            "triaged_at": record.triaged_at.isoformat(),
            "batch_date": record.batch_date.isoformat(),
            "result": record.result.to_dict(),
            "feedback": [fb.to_dict() for fb in feedback_entries],
            "effective_decision": effective.decision.value if effective else None,
        }

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
