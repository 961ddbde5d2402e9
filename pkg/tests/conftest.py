from pathlib import Path

import pytest

from qcase.evidence import (
    CaseBundle,
    DetectionEvidence,
    DetectionKind,
    LabelQuality,
    Provenance,
    SafetyTarget,
    ScopeEvidence,
    TestEvidence,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
CASES_DIR = REPO_ROOT / "cases"
SCHEMAS_DIR = REPO_ROOT / "schemas"


@pytest.fixture(scope="session")
def stop_sign_path() -> Path:
    return CASES_DIR / "stop_sign.qcase"


@pytest.fixture()
def worked_bundle() -> CaseBundle:
    """The reference evidence set, detection efficacy as a campaign."""
    return CaseBundle(
        id="stop-sign",
        target=SafetyTarget(p_target=0.002, cl=0.9999),
        test=TestEvidence(samples=100000, failures=100),
        scope=ScopeEvidence(point=0.0005, provenance=Provenance.EXPERT, justification="fleet"),
        detect_srf=DetectionEvidence(
            kind=DetectionKind.SRF, campaign=(85, 200), provenance=Provenance.DATA
        ),
        detect_oos=DetectionEvidence(
            kind=DetectionKind.OOS, point=0.495, provenance=Provenance.EXPERT, justification="gps"
        ),
        labels=LabelQuality(rate=0.001),
        assumptions=("dataset-unseen", "dataset-representative"),
    )


@pytest.fixture()
def worked_point_bundle(worked_bundle) -> CaseBundle:
    """Same evidence with the detection efficacy declared as a 0.30 point.

    This is the variant whose derived thresholds reproduce the published
    six-value chain exactly (the campaign form gives 0.2986 rather than
    the rounded 0.30).
    """
    from dataclasses import replace

    return replace(
        worked_bundle,
        detect_srf=DetectionEvidence(
            kind=DetectionKind.SRF,
            point=0.30,
            provenance=Provenance.EXPERT,
            justification="rounded campaign outcome",
        ),
    )


@pytest.fixture()
def minimal_bundle() -> CaseBundle:
    return CaseBundle(
        id="minimal",
        target=SafetyTarget(p_target=0.01, cl=0.95),
        test=TestEvidence(samples=10, failures=0),
        assumptions=("no-out-of-scope-operation",),
    )
