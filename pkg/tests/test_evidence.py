import math
from dataclasses import replace

import pytest

from qcase.binomial import cp_lower, cp_upper
from qcase.evidence import (
    BundleInvalidError,
    CaseBundle,
    ConfidenceMode,
    DetectionEvidence,
    DetectionKind,
    IntervalMethod,
    LabelQuality,
    ProfileTimeError,
    Provenance,
    SafetyTarget,
    ScopeEvidence,
    TestEvidence,
    resolve_estimates,
    scope_at_time,
    statistical_quantity_count,
    validate_bundle,
)


class TestConstruction:
    def test_probability_range_is_rejected(self):
        with pytest.raises(ValueError):
            SafetyTarget(p_target=1.5, cl=0.99)
        with pytest.raises(ValueError):
            SafetyTarget(p_target=0.1, cl=1.0)
        with pytest.raises(ValueError):
            SafetyTarget(p_target=float("nan"), cl=0.99)

    def test_negative_counts_are_rejected(self):
        with pytest.raises(ValueError):
            TestEvidence(samples=10, failures=-1)

    def test_exactly_one_form(self):
        with pytest.raises(ValueError):
            LabelQuality()
        with pytest.raises(ValueError):
            LabelQuality(rate=0.1, audit=(1, 10))
        with pytest.raises(ValueError):
            ScopeEvidence(point=0.1, profile=((0.0, 0.1),))
        with pytest.raises(ValueError):
            DetectionEvidence(kind=DetectionKind.SRF)

    def test_oos_detection_rejects_campaigns(self):
        with pytest.raises(ValueError, match="point estimates"):
            DetectionEvidence(kind=DetectionKind.OOS, campaign=(5, 10))

    def test_wrong_kind_in_slot(self, worked_bundle):
        with pytest.raises(ValueError):
            replace(
                worked_bundle,
                detect_srf=DetectionEvidence(kind=DetectionKind.OOS, point=0.1),
            )


class TestValidateBundle:
    def test_worked_bundle_is_clean(self, worked_bundle):
        assert validate_bundle(worked_bundle) == []

    def test_oos_detection_requires_scope(self, worked_bundle):
        broken = replace(
            worked_bundle,
            scope=None,
            assumptions=worked_bundle.assumptions + ("no-out-of-scope-operation",),
        )
        codes = [e.code for e in validate_bundle(broken)]
        assert codes == ["E_SCOPE_REQUIRED"]

    def test_count_order(self, worked_bundle):
        broken = replace(worked_bundle, test=TestEvidence(samples=100000, failures=200000))
        codes = [e.code for e in validate_bundle(broken)]
        assert "E_COUNT_ORDER" in codes

    def test_missing_closed_scope_assumption(self, worked_bundle):
        broken = replace(worked_bundle, scope=None, detect_oos=None, assumptions=())
        codes = [e.code for e in validate_bundle(broken)]
        assert "E_ASSUMPTION_REQUIRED" in codes

    def test_reports_every_problem(self, worked_bundle):
        broken = replace(
            worked_bundle,
            test=TestEvidence(samples=0, failures=3),
            labels=LabelQuality(audit=(8, 2)),
        )
        codes = {e.code for e in validate_bundle(broken)}
        assert {"E_SAMPLES_MIN", "E_COUNT_ORDER"} <= codes
        assert len(validate_bundle(broken)) >= 3

    def test_profile_requires_mission_time(self, worked_bundle):
        broken = replace(
            worked_bundle,
            scope=ScopeEvidence(profile=((0.0, 0.0005), (8760.0, 0.001))),
            mission_time=None,
        )
        codes = [e.code for e in validate_bundle(broken)]
        assert "E_MISSION_TIME_REQUIRED" in codes

    def test_profile_ordering(self, worked_bundle):
        broken = replace(
            worked_bundle,
            scope=ScopeEvidence(profile=((10.0, 0.001), (5.0, 0.002))),
            mission_time=20.0,
        )
        codes = [e.code for e in validate_bundle(broken)]
        assert "E_PROFILE_ORDER" in codes

    def test_probability_strictness(self, worked_bundle):
        # the closed endpoints construct fine but fail strict validation
        for endpoint in (0.0, 1.0):
            broken = replace(worked_bundle, target=SafetyTarget(p_target=endpoint, cl=0.99))
            codes = [e.code for e in validate_bundle(broken)]
            assert codes == ["E_PROB_RANGE"]


class TestScopeAtTime:
    profile = ScopeEvidence(profile=((0.0, 0.0005), (8760.0, 0.001)))

    def test_step_holds_first_value(self):
        assert scope_at_time(self.profile, 100.0) == 0.0005

    def test_point_ignores_time(self):
        assert scope_at_time(ScopeEvidence(point=0.0005), 123456.0) == 0.0005

    def test_last_step_carries_forward(self):
        assert scope_at_time(self.profile, 9000.0) == 0.001

    def test_exact_breakpoint_takes_new_value(self):
        assert scope_at_time(self.profile, 8760.0) == 0.001

    def test_before_profile_start(self):
        with pytest.raises(ProfileTimeError):
            scope_at_time(self.profile, -1.0)

    def test_monotone_in_time(self):
        times = [0.0, 1.0, 4000.0, 8759.9, 8760.0, 50000.0]
        values = [scope_at_time(self.profile, t) for t in times]
        assert values == sorted(values)


class TestResolveEstimates:
    def test_worked_values(self, worked_bundle):
        r = resolve_estimates(worked_bundle)
        assert r.u_test == cp_upper(100, 100000, 0.9999)
        assert r.l_detect_srf == cp_lower(85, 200, 0.9999)
        assert 0.29 <= r.l_detect_srf <= 0.31
        assert r.p_oos == 0.0005
        assert r.p_detect_oos == 0.495
        assert r.p_lf == 0.001
        assert r.cl_effective.test == 0.9999
        assert r.cl_effective.detect_srf == 0.9999
        assert r.cl_effective.labels is None  # declared rate, no budget spent

    def test_minimal_neutral_defaults(self, minimal_bundle):
        r = resolve_estimates(minimal_bundle)
        assert r.u_test == pytest.approx(0.258866, abs=1e-6)
        assert r.l_detect_srf == 0.0
        assert r.p_oos == 0.0
        assert r.p_detect_oos == 0.0
        assert r.p_lf == 0.0

    def test_declared_rate_is_flagged(self, worked_bundle):
        r = resolve_estimates(worked_bundle)
        assert any("face value" in note for note in r.notes)

    def test_bonferroni_splits_budget(self, worked_bundle):
        assert statistical_quantity_count(worked_bundle) == 2
        r = resolve_estimates(worked_bundle, mode=ConfidenceMode.BONFERRONI)
        assert r.cl_effective.test == pytest.approx(0.99995, abs=1e-12)
        shared = resolve_estimates(worked_bundle, mode=ConfidenceMode.SHARED)
        assert r.u_test > shared.u_test
        assert r.l_detect_srf < shared.l_detect_srf

    def test_bonferroni_with_single_quantity_matches_shared(self, minimal_bundle):
        assert statistical_quantity_count(minimal_bundle) == 1
        a = resolve_estimates(minimal_bundle, mode=ConfidenceMode.BONFERRONI)
        b = resolve_estimates(minimal_bundle, mode=ConfidenceMode.SHARED)
        assert a == b

    def test_audit_form_consumes_budget(self, worked_bundle):
        bundle = replace(worked_bundle, labels=LabelQuality(audit=(3, 1000)))
        assert statistical_quantity_count(bundle) == 3
        r = resolve_estimates(bundle)
        assert r.p_lf == cp_upper(3, 1000, 0.9999)
        assert r.cl_effective.labels == 0.9999
        rb = resolve_estimates(bundle, mode=ConfidenceMode.BONFERRONI)
        expected_cl = 1.0 - (1.0 - 0.9999) / 3
        assert rb.cl_effective.test == pytest.approx(expected_cl, abs=1e-15)

    def test_point_detection_passes_through(self, worked_point_bundle):
        r = resolve_estimates(worked_point_bundle)
        assert r.l_detect_srf == 0.30
        assert r.cl_effective.detect_srf is None

    def test_profile_scope_uses_mission_time(self, worked_bundle):
        bundle = replace(
            worked_bundle,
            scope=ScopeEvidence(profile=((0.0, 0.0005), (8760.0, 0.001))),
            mission_time=9000.0,
        )
        assert resolve_estimates(bundle).p_oos == 0.001
        assert resolve_estimates(bundle, at_time=10.0).p_oos == 0.0005

    def test_invalid_bundle_raises(self, worked_bundle):
        broken = replace(worked_bundle, test=TestEvidence(samples=10, failures=20))
        with pytest.raises(BundleInvalidError):
            resolve_estimates(broken)

    def test_wilson_method_is_flagged(self, minimal_bundle):
        r = resolve_estimates(minimal_bundle, method=IntervalMethod.WILSON)
        assert any("not conservative" in note for note in r.notes)
        assert not math.isclose(
            r.u_test, resolve_estimates(minimal_bundle).u_test, rel_tol=1e-6
        )

    def test_resolution_is_deterministic(self, worked_bundle):
        assert resolve_estimates(worked_bundle) == resolve_estimates(worked_bundle)
