"""Surgical co-management triage: structural pre-filtering, two-stage LLM
screening with a deterministic offline stub, clinician feedback capture, and
prospective evaluation metrics."""

from scm_triage.rubric import Classification

__version__ = "0.1.0"

__all__ = ["Classification", "__version__"]
