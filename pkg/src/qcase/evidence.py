"""Typed evidence declarations and their resolution into numeric bounds.

A `CaseBundle` collects everything a case declares: the safety target,
the test campaign, scope-compliance and detection evidence, label
quality, and free-text assumptions. `validate_bundle` reports every
violated cross-field invariant with a stable code; `resolve_estimates`
turns a valid bundle into the confidence-bounded numbers consumed by the
bound calculus.

Single-field sanity (non-negative counts, probabilities in range,
exactly one declared form per evidence item) is enforced at construction
time with ValueError; everything that spans fields or blocks is a
reportable `SemanticError` so one validation pass can surface all
problems at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from . import binomial

__all__ = [
    "Provenance",
    "ConfidenceMode",
    "IntervalMethod",
    "SafetyTarget",
    "TestEvidence",
    "LabelQuality",
    "ScopeEvidence",
    "DetectionKind",
    "DetectionEvidence",
    "CaseBundle",
    "SemanticError",
    "BundleInvalidError",
    "ProfileTimeError",
    "EffectiveConfidence",
    "ResolvedEstimates",
    "validate_bundle",
    "resolve_estimates",
    "scope_at_time",
    "CLOSED_SCOPE_ASSUMPTION",
    "DATASET_UNSEEN_ASSUMPTION",
    "DATASET_REPRESENTATIVE_ASSUMPTION",
]

# Assumption tokens with semantics attached to them.
CLOSED_SCOPE_ASSUMPTION = "no-out-of-scope-operation"
DATASET_UNSEEN_ASSUMPTION = "dataset-unseen"
DATASET_REPRESENTATIVE_ASSUMPTION = "dataset-representative"

# validate_bundle error codes
E_COUNT_ORDER = "E_COUNT_ORDER"
E_SAMPLES_MIN = "E_SAMPLES_MIN"
E_SCOPE_REQUIRED = "E_SCOPE_REQUIRED"
E_ASSUMPTION_REQUIRED = "E_ASSUMPTION_REQUIRED"
E_MISSION_TIME_REQUIRED = "E_MISSION_TIME_REQUIRED"
E_PROFILE_EMPTY = "E_PROFILE_EMPTY"
E_PROFILE_ORDER = "E_PROFILE_ORDER"
E_PROB_RANGE = "E_PROB_RANGE"
E_TIME_BEFORE_PROFILE = "E_TIME_BEFORE_PROFILE"


class Provenance(Enum):
    EXPERT = "expert"
    DATA = "data"


class ConfidenceMode(Enum):
    """How confidence budget is spent across statistical quantities.

    SHARED computes every statistical bound at the declared level CL and
    asserts the composed inequality at that same level. BONFERRONI splits
    the error budget uniformly: with m campaign/audit quantities each
    bound is computed at 1 - (1 - CL)/m, so the composed statement holds
    jointly at CL by the union bound. Expert point estimates never
    consume confidence budget in either mode.
    """

    SHARED = "shared"
    BONFERRONI = "bonferroni"


class IntervalMethod(Enum):
    """Interval machinery for statistical bounds.

    CLOPPER_PEARSON is the default and the only conservative choice; the
    approximate methods are offered for comparison and are flagged in
    resolved estimates and downstream reports.
    """

    CLOPPER_PEARSON = "clopper-pearson"
    WILSON = "wilson"
    WALD = "wald"


class DetectionKind(Enum):
    SRF = "srf"
    OOS = "oos"


def _probability(value: float, name: str) -> float:
    value = float(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return value


def _count(value: int, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


@dataclass(frozen=True)
class SemanticError:
    """One violated bundle invariant."""

    code: str
    message: str
    where: str  # block path, e.g. "testing" or "scope.profile"

    def __str__(self) -> str:
        return f"{self.code} at {self.where}: {self.message}"


class BundleInvalidError(ValueError):
    """Raised when an operation requires a valid bundle but got errors."""

    def __init__(self, errors: list[SemanticError]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in errors))


class ProfileTimeError(ValueError):
    """Evaluation time lies before the first declared profile point."""

    code = E_TIME_BEFORE_PROFILE


@dataclass(frozen=True)
class SafetyTarget:
    """The pair a case must satisfy: a probability ceiling at a confidence level."""

    p_target: float
    cl: float

    def __post_init__(self):
        _probability(self.p_target, "p_target")
        cl = float(self.cl)
        if math.isnan(cl) or not 0.0 < cl < 1.0:
            raise ValueError(f"confidence level must be in (0, 1), got {cl!r}")


@dataclass(frozen=True)
class TestEvidence:
    """Statistical test campaign: observed safety-related failures on a dataset."""

    __test__ = False  # keep pytest from collecting the domain class

    samples: int
    failures: int

    def __post_init__(self):
        _count(self.samples, "samples")
        _count(self.failures, "failures")


@dataclass(frozen=True)
class LabelQuality:
    """Label-fault rate, either declared outright or bounded from an audit.

    Exactly one form must be given: `rate` (taken at face value and
    flagged as unverified) or `audit` as (disagreements, audited) from a
    relabelling sample, which is turned into a conservative upper bound.
    """

    rate: float | None = None
    audit: tuple[int, int] | None = None

    def __post_init__(self):
        if (self.rate is None) == (self.audit is None):
            raise ValueError("label quality needs exactly one of rate or audit")
        if self.rate is not None:
            _probability(self.rate, "rate")
        else:
            d, a = self.audit
            _count(d, "disagreements")
            _count(a, "audited")
            object.__setattr__(self, "audit", (d, a))


@dataclass(frozen=True)
class ScopeEvidence:
    """Estimate of the probability of operating outside the intended scope.

    Either a single point estimate or a monotone profile of (time-hours,
    probability) pairs evaluated as a step function. The provenance
    records whether the estimate came from expert judgement or data, with
    a free-text justification.
    """

    point: float | None = None
    profile: tuple[tuple[float, float], ...] | None = None
    provenance: Provenance = Provenance.EXPERT
    justification: str = ""

    def __post_init__(self):
        if (self.point is None) == (self.profile is None):
            raise ValueError("scope evidence needs exactly one of point or profile")
        if self.point is not None:
            _probability(self.point, "p_oos")
        else:
            prof = tuple((float(t), _probability(p, "profile p")) for t, p in self.profile)
            object.__setattr__(self, "profile", prof)


@dataclass(frozen=True)
class DetectionEvidence:
    """Efficacy evidence for a runtime detection mechanism.

    SRF detection admits a measured campaign (detected out of total) or
    an expert point estimate. Out-of-scope detection admits only point
    estimates: it is a one-class problem with no representative sample of
    the outside world, so a measured rate cannot be justified and the
    restriction is enforced at the type level.
    """

    kind: DetectionKind
    campaign: tuple[int, int] | None = None
    point: float | None = None
    provenance: Provenance = Provenance.EXPERT
    justification: str = ""

    def __post_init__(self):
        if (self.campaign is None) == (self.point is None):
            raise ValueError("detection evidence needs exactly one of campaign or point")
        if self.kind is DetectionKind.OOS and self.campaign is not None:
            raise ValueError(
                "out-of-scope detection admits only point estimates, not campaigns"
            )
        if self.point is not None:
            _probability(self.point, "p_detect")
        else:
            d, t = self.campaign
            _count(d, "detected")
            _count(t, "total")
            object.__setattr__(self, "campaign", (d, t))


@dataclass(frozen=True)
class CaseBundle:
    """Everything one case declares, prior to any computation."""

    id: str
    target: SafetyTarget
    test: TestEvidence
    scope: ScopeEvidence | None = None
    detect_srf: DetectionEvidence | None = None
    detect_oos: DetectionEvidence | None = None
    labels: LabelQuality | None = None
    assumptions: tuple[str, ...] = ()
    mission_time: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "assumptions", tuple(self.assumptions))
        if self.detect_srf is not None and self.detect_srf.kind is not DetectionKind.SRF:
            raise ValueError("detect_srf must carry kind SRF")
        if self.detect_oos is not None and self.detect_oos.kind is not DetectionKind.OOS:
            raise ValueError("detect_oos must carry kind OOS")

    @property
    def closed_scope(self) -> bool:
        return CLOSED_SCOPE_ASSUMPTION in self.assumptions

    def with_mission_time(self, t: float) -> "CaseBundle":
        return replace(self, mission_time=float(t))


def validate_bundle(bundle: CaseBundle) -> list[SemanticError]:
    """Report every violated bundle invariant; an empty list means valid.

    Does not stop at the first problem. Codes are stable and suitable
    for machine handling.
    """
    errors: list[SemanticError] = []

    def err(code: str, message: str, where: str) -> None:
        errors.append(SemanticError(code, message, where))

    t = bundle.target
    if t.p_target <= 0.0 or t.p_target >= 1.0:
        err(E_PROB_RANGE, f"p_target must lie strictly inside (0, 1), got {t.p_target}", "target")

    te = bundle.test
    if te.samples < 1:
        err(E_SAMPLES_MIN, "testing needs at least one sample", "testing")
    if te.failures > te.samples:
        err(E_COUNT_ORDER, f"failures ({te.failures}) exceed samples ({te.samples})", "testing")

    sc = bundle.scope
    if sc is None:
        if not bundle.closed_scope:
            err(
                E_ASSUMPTION_REQUIRED,
                f'without scope evidence the bundle must assume "{CLOSED_SCOPE_ASSUMPTION}"',
                "case",
            )
    else:
        if sc.point is not None:
            if sc.point >= 1.0:
                err(E_PROB_RANGE, f"p_oos must be < 1, got {sc.point}", "scope")
        else:
            prof = sc.profile
            if len(prof) == 0:
                err(E_PROFILE_EMPTY, "profile declares no points", "scope.profile")
            else:
                for (t0, p0), (t1, p1) in zip(prof, prof[1:]):
                    if t1 <= t0:
                        err(
                            E_PROFILE_ORDER,
                            f"profile times must strictly increase ({t0} then {t1})",
                            "scope.profile",
                        )
                    if p1 < p0:
                        err(
                            E_PROFILE_ORDER,
                            f"profile probabilities must not decrease ({p0} then {p1})",
                            "scope.profile",
                        )
                if any(p >= 1.0 for _, p in prof):
                    err(E_PROB_RANGE, "profile probabilities must be < 1", "scope.profile")
            if bundle.mission_time is None:
                err(
                    E_MISSION_TIME_REQUIRED,
                    "a profile-form scope needs mission_time to evaluate",
                    "case",
                )

    if bundle.detect_oos is not None and sc is None:
        err(
            E_SCOPE_REQUIRED,
            "out-of-scope detection evidence requires scope evidence",
            "detection oos",
        )

    for name, det in (("detection srf", bundle.detect_srf), ("detection oos", bundle.detect_oos)):
        if det is None:
            continue
        if det.campaign is not None:
            d, total = det.campaign
            if total < 1:
                err(E_SAMPLES_MIN, "detection campaign needs at least one sample", name)
            if d > total:
                err(E_COUNT_ORDER, f"detected ({d}) exceeds total ({total})", name)

    lq = bundle.labels
    if lq is not None:
        if lq.rate is not None:
            if lq.rate >= 1.0:
                err(E_PROB_RANGE, f"label-fault rate must be < 1, got {lq.rate}", "labels")
        else:
            d, a = lq.audit
            if a < 1:
                err(E_SAMPLES_MIN, "label audit needs at least one sample", "labels")
            if d > a:
                err(E_COUNT_ORDER, f"disagreements ({d}) exceed audited ({a})", "labels")

    return errors


def scope_at_time(scope: ScopeEvidence, t: float) -> float:
    """Evaluate scope evidence at mission time t (hours).

    Point form returns the point regardless of t. Profile form is a step
    function holding each declared value until the next declared time
    (last value carried forward), which never understates the probability
    between points given the monotone profile. Raises ProfileTimeError
    when t lies before the first declared time.
    """
    if scope.point is not None:
        return scope.point
    t = float(t)
    prof = scope.profile
    if not prof or t < prof[0][0]:
        raise ProfileTimeError(
            f"time {t} lies before the first profile point at {prof[0][0] if prof else 'n/a'}"
        )
    value = prof[0][1]
    for ti, pi in prof:
        if ti <= t:
            value = pi
        else:
            break
    return value


@dataclass(frozen=True)
class EffectiveConfidence:
    """Per-quantity confidence level actually used for statistical bounds.

    None marks a quantity that carried no statistical campaign (expert
    point, declared rate, or absent evidence) and therefore consumed no
    confidence budget.
    """

    test: float
    detect_srf: float | None = None
    labels: float | None = None


@dataclass(frozen=True)
class ResolvedEstimates:
    """Confidence-bounded numbers ready for composition.

    u_test is an upper bound on the in-scope failure rate as observed on
    the dataset; l_detect_srf a lower bound on detection efficacy;
    p_oos, p_detect_oos and (declared-form) p_lf pass through as given.
    """

    u_test: float
    l_detect_srf: float = 0.0
    p_oos: float = 0.0
    p_detect_oos: float = 0.0
    p_lf: float = 0.0
    cl_effective: EffectiveConfidence = field(default=None)  # type: ignore[assignment]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("u_test", "l_detect_srf", "p_oos", "p_detect_oos", "p_lf"):
            _probability(getattr(self, name), name)
        if self.cl_effective is None:
            raise ValueError("cl_effective record is required")


_UPPER = {
    IntervalMethod.CLOPPER_PEARSON: binomial.cp_upper,
    IntervalMethod.WILSON: binomial.wilson_upper,
    IntervalMethod.WALD: binomial.wald_upper,
}
_LOWER = {
    IntervalMethod.CLOPPER_PEARSON: binomial.cp_lower,
    IntervalMethod.WILSON: binomial.wilson_lower,
    IntervalMethod.WALD: binomial.wald_lower,
}


def statistical_quantity_count(bundle: CaseBundle) -> int:
    """Number of campaign/audit-form quantities that consume confidence budget."""
    m = 1  # the test campaign is always statistical
    if bundle.detect_srf is not None and bundle.detect_srf.campaign is not None:
        m += 1
    if bundle.labels is not None and bundle.labels.audit is not None:
        m += 1
    return m


def resolve_estimates(
    bundle: CaseBundle,
    mode: ConfidenceMode = ConfidenceMode.SHARED,
    method: IntervalMethod = IntervalMethod.CLOPPER_PEARSON,
    at_time: float | None = None,
) -> ResolvedEstimates:
    """Resolve declared evidence into bounded estimates.

    Under SHARED every statistical bound is computed at the target's CL;
    under BONFERRONI at 1 - (1 - CL)/m where m counts the campaign and
    audit quantities in the bundle. Expert points and declared rates pass
    through unchanged. Missing detection evidence resolves to efficacy 0
    (no credit) and missing scope under the closed-scope assumption to
    p_oos = 0. `at_time` overrides the bundle's mission time for
    profile-form scope.

    Raises BundleInvalidError when validate_bundle reports problems.
    """
    problems = validate_bundle(bundle)
    if problems:
        raise BundleInvalidError(problems)

    cl = bundle.target.cl
    if mode is ConfidenceMode.BONFERRONI:
        cl_stat = 1.0 - (1.0 - cl) / statistical_quantity_count(bundle)
    else:
        cl_stat = cl

    notes: list[str] = []
    if method is not IntervalMethod.CLOPPER_PEARSON:
        notes.append(
            f"interval method '{method.value}' is approximate and not conservative; "
            "coverage below the stated confidence level is possible"
        )

    upper = _UPPER[method]
    lower = _LOWER[method]

    u_test = upper(bundle.test.failures, bundle.test.samples, cl_stat)

    l_detect = 0.0
    cl_detect = None
    det = bundle.detect_srf
    if det is not None:
        if det.campaign is not None:
            d, total = det.campaign
            l_detect = lower(d, total, cl_stat)
            cl_detect = cl_stat
        else:
            l_detect = det.point
    else:
        notes.append("no failure-detection evidence declared; no detection credit taken")

    if bundle.scope is not None:
        t = at_time if at_time is not None else bundle.mission_time
        p_oos = scope_at_time(bundle.scope, t if t is not None else 0.0)
    else:
        p_oos = 0.0

    p_detect_oos = 0.0
    if bundle.detect_oos is not None:
        p_detect_oos = bundle.detect_oos.point

    p_lf = 0.0
    cl_labels = None
    if bundle.labels is not None:
        if bundle.labels.rate is not None:
            p_lf = bundle.labels.rate
            notes.append("label-fault rate declared without an audit; taken at face value")
        else:
            d, a = bundle.labels.audit
            p_lf = upper(d, a, cl_stat)
            cl_labels = cl_stat

    return ResolvedEstimates(
        u_test=u_test,
        l_detect_srf=l_detect,
        p_oos=p_oos,
        p_detect_oos=p_detect_oos,
        p_lf=p_lf,
        cl_effective=EffectiveConfidence(test=cl_stat, detect_srf=cl_detect, labels=cl_labels),
        notes=tuple(notes),
    )
