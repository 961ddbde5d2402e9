"""Composition of bounded estimates into a safety-violation bound.

One formula covers every evidence configuration:

    p_safe_upper = (u_test + p_lf) * (1 - p_oos - l_detect_srf)
                   + p_oos * (1 - p_detect_oos)

with terms zeroed according to the applicable case: B keeps only the
test bound (closed scope, no detection), C adds scope exposure, D adds
failure-detection credit, E adds out-of-scope detection credit, and the
label-fault adjustment F folds p_lf into the test term whenever label
quality is declared. Zeroing one formula instead of branching keeps a
single auditable expression and makes the degeneracy identities (D with
zeros equals B, E with zero OOS detection equals D) hold exactly.

Inversion solves the same formula for the largest acceptable test bound
and, given a campaign size, for the largest acceptable failure count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from . import binomial
from .evidence import (
    CaseBundle,
    ConfidenceMode,
    DetectionEvidence,
    DetectionKind,
    IntervalMethod,
    LabelQuality,
    Provenance,
    ResolvedEstimates,
    SafetyTarget,
    ScopeEvidence,
    resolve_estimates,
    validate_bundle,
)

__all__ = [
    "CaseBase",
    "CaseId",
    "Verdict",
    "Violation",
    "Terms",
    "BoundReport",
    "Infeasible",
    "DerivationResult",
    "DenominatorError",
    "SweepDomainError",
    "SweepRow",
    "applicable_case",
    "check_prepositions",
    "evaluate_bound",
    "derive_required_test_bound",
    "sensitivity_sweep",
    "SWEEP_PARAMS",
    "V_PREPOSITION",
    "V_DENOMINATOR",
]

V_PREPOSITION = "V_PREPOSITION"
V_DENOMINATOR = "V_DENOMINATOR"
E_DENOMINATOR = "E_DENOMINATOR"
E_SWEEP_DOMAIN = "E_SWEEP_DOMAIN"

REASON_SCOPE_FLOOR = "target below scope floor"
REASON_LABEL_BUDGET = "label faults consume budget"
REASON_TEST_CAPACITY = "test campaign cannot demonstrate the required bound"


class CaseBase(Enum):
    B = "B"  # closed scope, statistical testing only
    C = "C"  # scope exposure acknowledged
    D = "D"  # runtime failure detection credited
    E = "E"  # out-of-scope detection credited


@dataclass(frozen=True)
class CaseId:
    """Which evidence configuration applies, plus the label-adjustment flag."""

    base: CaseBase
    label_adjusted: bool = False

    def __str__(self) -> str:
        return self.base.value + ("+F" if self.label_adjusted else "")


class Verdict(Enum):
    SATISFIED = "satisfied"
    NOT_SATISFIED = "not_satisfied"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class DenominatorError(ArithmeticError):
    """Detection credit meets or exceeds in-scope probability mass.

    The composed formula's in-scope factor 1 - p_oos - l_detect_srf is
    not positive, so neither evaluation nor derivation may proceed.
    """

    code = E_DENOMINATOR

    def __init__(self, p_oos: float, l_detect_srf: float):
        self.p_oos = p_oos
        self.l_detect_srf = l_detect_srf
        super().__init__(
            f"1 - p_oos - l_detect_srf = {1.0 - p_oos - l_detect_srf!r} is not positive "
            f"(p_oos={p_oos}, l_detect_srf={l_detect_srf})"
        )


class SweepDomainError(ValueError):
    code = E_SWEEP_DOMAIN


@dataclass(frozen=True)
class Terms:
    """Additive breakdown of the composed bound.

    unclipped = test_term + label_penalty - srf_detect_credit
                + scope_term - oos_detect_credit
    """

    test_term: float
    label_penalty: float
    srf_detect_credit: float
    scope_term: float
    oos_detect_credit: float

    @property
    def unclipped(self) -> float:
        return (
            self.test_term
            + self.label_penalty
            - self.srf_detect_credit
            + self.scope_term
            - self.oos_detect_credit
        )


@dataclass(frozen=True)
class BoundReport:
    """Composed upper bound on the probability of an unflagged safety-related failure."""

    case: CaseId
    p_safe_upper: float  # clipped to [0, 1]
    p_safe_upper_raw: float  # as composed, before clipping
    terms: Terms
    preposition_status: tuple[Violation, ...]
    verdict: Verdict
    margin: float  # p_target - p_safe_upper, signed
    p_target: float
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Infeasible:
    """A derivation outcome that no test campaign can rescue."""

    reason: str

    def __str__(self) -> str:
        return f"infeasible: {self.reason}"


@dataclass(frozen=True)
class DerivationResult:
    required_u_test: float | Infeasible
    max_failures: int | Infeasible | None = None  # None: samples not supplied
    min_samples: int | Infeasible | None = None  # None: expected rate not supplied


def applicable_case(bundle: CaseBundle) -> CaseId:
    """Classify a valid bundle into its evidence configuration.

    Out-of-scope detection implies E; otherwise failure detection implies
    D (with p_oos = 0 when the scope is closed, which degenerates
    correctly); otherwise scope evidence implies C; otherwise the
    closed-scope assumption implies B. Label quality sets the F flag
    orthogonally.
    """
    f = bundle.labels is not None
    if bundle.detect_oos is not None:
        base = CaseBase.E
    elif bundle.detect_srf is not None:
        base = CaseBase.D
    elif bundle.scope is not None:
        base = CaseBase.C
    else:
        base = CaseBase.B
    return CaseId(base=base, label_adjusted=f)


def _masked(r: ResolvedEstimates, case: CaseId) -> tuple[float, float, float, float, float]:
    """Zero out quantities the case takes no credit or exposure for."""
    u = r.u_test
    p_lf = r.p_lf if case.label_adjusted else 0.0
    p_oos = 0.0 if case.base is CaseBase.B else r.p_oos
    l_detect = r.l_detect_srf if case.base in (CaseBase.D, CaseBase.E) else 0.0
    p_detect_oos = r.p_detect_oos if case.base is CaseBase.E else 0.0
    return u, p_lf, p_oos, l_detect, p_detect_oos


def check_prepositions(r: ResolvedEstimates, case: CaseId) -> list[Violation]:
    """Check the side conditions detection credit depends on.

    For cases D and E the credited detection efficacy must leave strictly
    positive in-scope probability mass: 1 - p_oos > l_detect_srf. Equality
    already violates the check because the composed formula's in-scope
    factor degenerates to zero there. A denominator violation is reported
    additionally when the factor is exactly zero, i.e. when derivation
    would divide by zero.
    """
    if case.base not in (CaseBase.D, CaseBase.E):
        return []
    _, _, p_oos, l_detect, _ = _masked(r, case)
    violations = []
    denom = 1.0 - p_oos - l_detect
    if not (1.0 - p_oos > l_detect):
        violations.append(
            Violation(
                V_PREPOSITION,
                f"detection credit needs 1 - p_oos > l_detect_srf, "
                f"got 1 - {p_oos} = {1.0 - p_oos!r} vs {l_detect}",
            )
        )
    if denom == 0.0:
        violations.append(
            Violation(
                V_DENOMINATOR,
                f"in-scope factor 1 - p_oos - l_detect_srf is exactly zero "
                f"(p_oos={p_oos}, l_detect_srf={l_detect})",
            )
        )
    return violations


def compose_terms(r: ResolvedEstimates, case: CaseId) -> Terms:
    """Evaluate the composed formula's additive terms for a case.

    Raises DenominatorError when the in-scope factor is not positive;
    callers that want data instead of an exception should run
    check_prepositions first.
    """
    u, p_lf, p_oos, l_detect, p_detect_oos = _masked(r, case)
    denom = 1.0 - p_oos - l_detect
    if case.base in (CaseBase.D, CaseBase.E) and denom <= 0.0:
        raise DenominatorError(p_oos, l_detect)
    return Terms(
        test_term=u * (1.0 - p_oos),
        label_penalty=p_lf * (1.0 - p_oos),
        srf_detect_credit=(u + p_lf) * l_detect,
        scope_term=p_oos,
        oos_detect_credit=p_oos * p_detect_oos,
    )


def evaluate_bound(
    r: ResolvedEstimates, case: CaseId, target: SafetyTarget
) -> BoundReport:
    """Compose the bound and compare it against the target.

    The verdict is SATISFIED exactly when the clipped bound does not
    exceed p_target and no side condition is violated; the comparison is
    a plain <= with no epsilon, because all conservatism lives in the
    bounds themselves.
    """
    violations = tuple(check_prepositions(r, case))
    terms = compose_terms(r, case)  # raises DenominatorError on violation
    raw = terms.unclipped
    clipped = min(1.0, max(0.0, raw))
    satisfied = clipped <= target.p_target and not violations
    return BoundReport(
        case=case,
        p_safe_upper=clipped,
        p_safe_upper_raw=raw,
        terms=terms,
        preposition_status=violations,
        verdict=Verdict.SATISFIED if satisfied else Verdict.NOT_SATISFIED,
        margin=target.p_target - clipped,
        p_target=target.p_target,
        notes=r.notes,
    )


def derive_required_test_bound(
    r: ResolvedEstimates,
    case: CaseId,
    target: SafetyTarget,
    samples: int | None = None,
    expected_rate: float | None = None,
) -> DerivationResult:
    """Solve the composed formula for the largest acceptable test bound.

    required_u_test = (p_target - p_oos * (1 - p_detect_oos))
                      / (1 - p_oos - l_detect_srf)  -  p_lf

    Infeasibility is reported with its cause: a numerator that is not
    positive means the target sits below the scope exposure floor and no
    amount of testing helps; a positive numerator that label faults
    consume entirely points at data quality instead. When `samples` is
    given, the largest acceptable failure count at that campaign size is
    included; when `expected_rate` is given, the smallest sufficient
    campaign size is included.
    """
    _, p_lf, p_oos, l_detect, p_detect_oos = _masked(r, case)
    denom = 1.0 - p_oos - l_detect
    if case.base in (CaseBase.D, CaseBase.E) and denom <= 0.0:
        raise DenominatorError(p_oos, l_detect)

    numerator = target.p_target - p_oos * (1.0 - p_detect_oos)
    if numerator <= 0.0:
        required: float | Infeasible = Infeasible(REASON_SCOPE_FLOOR)
    else:
        value = numerator / denom - p_lf
        required = value if value > 0.0 else Infeasible(REASON_LABEL_BUDGET)

    max_failures: int | Infeasible | None = None
    min_samples: int | Infeasible | None = None
    if isinstance(required, float):
        cl_stat = r.cl_effective.test
        if samples is not None:
            k = binomial.max_acceptable_failures(samples, cl_stat, min(required, 1.0))
            max_failures = k if k is not None else Infeasible(REASON_TEST_CAPACITY)
        if expected_rate is not None:
            n = binomial.min_sample_size(expected_rate, cl_stat, min(required, 1.0 - 1e-16))
            min_samples = n if n is not None else Infeasible(REASON_TEST_CAPACITY)
    else:
        if samples is not None:
            max_failures = Infeasible(required.reason)
        if expected_rate is not None:
            min_samples = Infeasible(required.reason)

    return DerivationResult(
        required_u_test=required, max_failures=max_failures, min_samples=min_samples
    )


SWEEP_PARAMS = (
    "p_oos",
    "p_detect_srf",
    "p_detect_oos",
    "p_lf",
    "samples",
    "failures",
    "cl",
)

_SWEEP_OVERRIDE_NOTE = "sensitivity override"


@dataclass(frozen=True)
class SweepRow:
    """One sensitivity-sweep evaluation."""

    param: str
    value: float
    p_safe_upper: float | None
    required_u_test: float | None
    max_failures: int | None
    verdict: Verdict
    codes: tuple[str, ...] = ()  # violation / infeasibility codes, if any


def _override_bundle(bundle: CaseBundle, param: str, value: float) -> CaseBundle:
    if param == "p_oos":
        scope = ScopeEvidence(
            point=value, provenance=Provenance.EXPERT, justification=_SWEEP_OVERRIDE_NOTE
        )
        return replace(bundle, scope=scope)
    if param == "p_detect_srf":
        det = DetectionEvidence(
            kind=DetectionKind.SRF,
            point=value,
            provenance=Provenance.EXPERT,
            justification=_SWEEP_OVERRIDE_NOTE,
        )
        return replace(bundle, detect_srf=det)
    if param == "p_detect_oos":
        det = DetectionEvidence(
            kind=DetectionKind.OOS,
            point=value,
            provenance=Provenance.EXPERT,
            justification=_SWEEP_OVERRIDE_NOTE,
        )
        return replace(bundle, detect_oos=det)
    if param == "p_lf":
        return replace(bundle, labels=LabelQuality(rate=value))
    if param == "samples":
        return replace(bundle, test=replace(bundle.test, samples=int(round(value))))
    if param == "failures":
        return replace(bundle, test=replace(bundle.test, failures=int(round(value))))
    if param == "cl":
        return replace(bundle, target=replace(bundle.target, cl=value))
    raise SweepDomainError(f"unknown sweep parameter {param!r}")


def _check_sweep_domain(param: str, lo: float, hi: float) -> None:
    if param in ("p_oos", "p_detect_srf", "p_detect_oos", "p_lf"):
        if lo < 0.0 or hi >= 1.0:
            raise SweepDomainError(f"{param} sweep must stay within [0, 1), got [{lo}, {hi}]")
    elif param == "cl":
        if lo <= 0.0 or hi >= 1.0:
            raise SweepDomainError(f"cl sweep must stay within (0, 1), got [{lo}, {hi}]")
    elif param == "samples":
        if lo < 1:
            raise SweepDomainError(f"samples sweep must start at >= 1, got {lo}")
    elif param == "failures":
        if lo < 0:
            raise SweepDomainError(f"failures sweep must start at >= 0, got {lo}")
    else:
        raise SweepDomainError(f"unknown sweep parameter {param!r}")


def sensitivity_sweep(
    bundle: CaseBundle,
    mode: ConfidenceMode,
    param: str,
    from_value: float,
    to_value: float,
    steps: int,
    method: IntervalMethod = IntervalMethod.CLOPPER_PEARSON,
    at_time: float | None = None,
) -> list[SweepRow]:
    """Re-resolve and re-evaluate the bundle across a parameter range.

    Values are equally spaced over [from_value, to_value] inclusive, in
    sweep order. Rows whose modified bundle fails validation or violates
    a side condition carry verdict INFEASIBLE together with the
    triggering codes instead of numbers.
    """
    if not isinstance(steps, int) or steps < 2:
        raise SweepDomainError(f"steps must be an integer >= 2, got {steps!r}")
    lo, hi = float(from_value), float(to_value)
    if math.isnan(lo) or math.isnan(hi) or not lo < hi:
        raise SweepDomainError(f"sweep range must satisfy from < to, got [{lo}, {hi}]")
    _check_sweep_domain(param, lo, hi)

    rows: list[SweepRow] = []
    for idx in range(steps):
        value = lo + (hi - lo) * idx / (steps - 1)
        modified = _override_bundle(bundle, param, value)
        problems = validate_bundle(modified)
        if problems:
            rows.append(
                SweepRow(
                    param=param,
                    value=value,
                    p_safe_upper=None,
                    required_u_test=None,
                    max_failures=None,
                    verdict=Verdict.INFEASIBLE,
                    codes=tuple(dict.fromkeys(p.code for p in problems)),
                )
            )
            continue
        resolved = resolve_estimates(modified, mode=mode, method=method, at_time=at_time)
        case = applicable_case(modified)
        violations = check_prepositions(resolved, case)
        if violations:
            # a violated side condition implies a non-positive in-scope
            # factor, so neither evaluation nor derivation can proceed
            rows.append(
                SweepRow(
                    param=param,
                    value=value,
                    p_safe_upper=None,
                    required_u_test=None,
                    max_failures=None,
                    verdict=Verdict.INFEASIBLE,
                    codes=tuple(v.code for v in violations),
                )
            )
            continue
        report = evaluate_bound(resolved, case, modified.target)
        derivation = derive_required_test_bound(
            resolved, case, modified.target, samples=modified.test.samples
        )
        required = derivation.required_u_test
        max_fail = derivation.max_failures
        rows.append(
            SweepRow(
                param=param,
                value=value,
                p_safe_upper=report.p_safe_upper,
                required_u_test=required if isinstance(required, float) else None,
                max_failures=max_fail if isinstance(max_fail, int) else None,
                verdict=report.verdict,
                codes=tuple(v.code for v in report.preposition_status)
                or ((required.reason,) if isinstance(required, Infeasible) else ()),
            )
        )
    return rows
