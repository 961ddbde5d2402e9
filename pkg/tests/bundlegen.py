"""Random generation of valid bundles for round-trip and property tests."""

import random
import string

from qcase.evidence import (
    CLOSED_SCOPE_ASSUMPTION,
    CaseBundle,
    DetectionEvidence,
    DetectionKind,
    LabelQuality,
    Provenance,
    SafetyTarget,
    ScopeEvidence,
    TestEvidence,
)

_TEXT_ALPHABET = string.ascii_letters + string.digits + ' .,;:!?()[]/+-_<>"\\'


def random_text(rng: random.Random, max_len: int = 40) -> str:
    return "".join(rng.choice(_TEXT_ALPHABET) for _ in range(rng.randrange(max_len)))


def random_bundle(rng: random.Random) -> CaseBundle:
    """A structurally valid bundle (validate_bundle returns no errors)."""
    samples = rng.randrange(1, 10**6)
    failures = rng.randrange(0, min(samples, 2000) + 1)
    assumptions = []

    scope = None
    mission_time = None
    scope_form = rng.randrange(3)
    if scope_form == 1:
        scope = ScopeEvidence(
            point=round(rng.uniform(0.0, 0.9), 6),
            provenance=rng.choice(list(Provenance)),
            justification=random_text(rng),
        )
    elif scope_form == 2:
        count = rng.randrange(1, 5)
        times = sorted(rng.sample(range(0, 10**5), count))
        probs = sorted(round(rng.uniform(0.0, 0.9), 6) for _ in range(count))
        scope = ScopeEvidence(
            profile=tuple((float(t), p) for t, p in zip(times, probs)),
            provenance=rng.choice(list(Provenance)),
            justification=random_text(rng),
        )
        mission_time = float(times[0] + rng.randrange(0, 10**5))
    if scope is None:
        assumptions.append(CLOSED_SCOPE_ASSUMPTION)

    detect_srf = None
    form = rng.randrange(3)
    if form == 1:
        total = rng.randrange(1, 10**4)
        detect_srf = DetectionEvidence(
            kind=DetectionKind.SRF,
            campaign=(rng.randrange(0, total + 1), total),
            provenance=Provenance.DATA,
            justification=random_text(rng),
        )
    elif form == 2:
        detect_srf = DetectionEvidence(
            kind=DetectionKind.SRF,
            point=round(rng.uniform(0.0, 0.95), 6),
            provenance=Provenance.EXPERT,
            justification=random_text(rng),
        )

    detect_oos = None
    if scope is not None and rng.random() < 0.5:
        detect_oos = DetectionEvidence(
            kind=DetectionKind.OOS,
            point=round(rng.uniform(0.0, 0.99), 6),
            provenance=rng.choice(list(Provenance)),
            justification=random_text(rng),
        )

    labels = None
    form = rng.randrange(3)
    if form == 1:
        labels = LabelQuality(rate=round(rng.uniform(0.0, 0.5), 6))
    elif form == 2:
        audited = rng.randrange(1, 10**4)
        labels = LabelQuality(audit=(rng.randrange(0, audited + 1), audited))

    if rng.random() < 0.5:
        assumptions.append("dataset-unseen")
    if rng.random() < 0.5:
        assumptions.append("dataset-representative")
    if rng.random() < 0.3:
        assumptions.append(random_text(rng, 25))

    return CaseBundle(
        id=f"generated-{rng.randrange(10**6)}",
        target=SafetyTarget(
            p_target=round(rng.uniform(1e-6, 0.9), 9),
            cl=rng.choice([0.9, 0.95, 0.99, 0.9999, round(rng.uniform(0.5, 0.999), 6)]),
        ),
        test=TestEvidence(samples=samples, failures=failures),
        scope=scope,
        detect_srf=detect_srf,
        detect_oos=detect_oos,
        labels=labels,
        assumptions=tuple(assumptions),
        mission_time=mission_time,
    )
