"""Structured-field pre-filter: operational exclusions decided from schedule
metadata alone, before any documentation is read."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from scm_triage.cases import PatientClass, Site, SurgicalCase


class ExclusionReason(str, Enum):
    OUTPATIENT_NO_ADMISSION = "OutpatientNoAdmission"
    OFF_SITE_LOCATION = "OffSiteLocation"
    EXTERNAL_PROVIDER_GROUP = "ExternalProviderGroup"


EXCLUSION_DESCRIPTIONS = {
    ExclusionReason.OUTPATIENT_NO_ADMISSION: (
        "scheduled as an outpatient procedure without planned admission or overnight observation"
    ),
    ExclusionReason.OFF_SITE_LOCATION: (
        "scheduled at a location outside the main hospital"
    ),
    ExclusionReason.EXTERNAL_PROVIDER_GROUP: (
        "managed by an external provider group not covered by the co-management service"
    ),
}


@dataclass(frozen=True)
class RuleOutcome:
    excluded: bool
    reason: Optional[ExclusionReason] = None

    def __post_init__(self) -> None:
        if self.excluded != (self.reason is not None):
            raise ValueError("excluded is true exactly when a reason is set")


def apply_structural_rules(case: SurgicalCase) -> RuleOutcome:
    """Evaluate the three exclusions in fixed order; report the first match.

    Overnight-recovery outpatient cases carry planned overnight observation,
    so the outpatient rule deliberately does not fire for them.
    """
    if case.patient_class == PatientClass.OUTPATIENT_PROCEDURE:
        return RuleOutcome(True, ExclusionReason.OUTPATIENT_NO_ADMISSION)
    if case.site == Site.OTHER_SITE:
        return RuleOutcome(True, ExclusionReason.OFF_SITE_LOCATION)
    if case.external_provider_group:
        return RuleOutcome(True, ExclusionReason.EXTERNAL_PROVIDER_GROUP)
    return RuleOutcome(False, None)
