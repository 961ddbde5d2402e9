import math
import random
from dataclasses import replace

import pytest

from qcase.budget import (
    CaseBase,
    CaseId,
    DenominatorError,
    Infeasible,
    SweepDomainError,
    V_DENOMINATOR,
    V_PREPOSITION,
    Verdict,
    applicable_case,
    check_prepositions,
    derive_required_test_bound,
    evaluate_bound,
    sensitivity_sweep,
)
from qcase.evidence import (
    ConfidenceMode,
    EffectiveConfidence,
    ResolvedEstimates,
    SafetyTarget,
    TestEvidence,
)

TARGET = SafetyTarget(p_target=0.002, cl=0.9999)


def estimates(u_test=0.0, l_detect=0.0, p_oos=0.0, p_detect_oos=0.0, p_lf=0.0, cl=0.9999):
    return ResolvedEstimates(
        u_test=u_test,
        l_detect_srf=l_detect,
        p_oos=p_oos,
        p_detect_oos=p_detect_oos,
        p_lf=p_lf,
        cl_effective=EffectiveConfidence(test=cl),
    )


def case(base, f=False):
    return CaseId(base=CaseBase[base], label_adjusted=f)


class TestApplicableCase:
    def test_full_bundle_is_e_with_f(self, worked_bundle):
        assert applicable_case(worked_bundle) == case("E", f=True)

    def test_minimal_is_b(self, minimal_bundle):
        assert applicable_case(minimal_bundle) == case("B")

    def test_scope_only_is_c(self, worked_bundle):
        bundle = replace(worked_bundle, detect_srf=None, detect_oos=None, labels=None)
        assert applicable_case(bundle) == case("C")

    def test_detect_srf_with_closed_scope_is_d(self, worked_bundle, minimal_bundle):
        bundle = replace(minimal_bundle, detect_srf=worked_bundle.detect_srf)
        assert applicable_case(bundle) == case("D")

    def test_str_rendering(self):
        assert str(case("E", f=True)) == "E+F"
        assert str(case("B")) == "B"


class TestPrepositions:
    def test_reference_values_pass(self):
        r = estimates(p_oos=0.0005, l_detect=0.30)
        assert check_prepositions(r, case("D")) == []

    def test_detection_exceeding_in_scope_mass(self):
        r = estimates(p_oos=0.5, l_detect=0.6)
        codes = [v.code for v in check_prepositions(r, case("D"))]
        assert codes == [V_PREPOSITION]

    def test_exact_zero_denominator(self):
        r = estimates(p_oos=0.2, l_detect=0.8)
        codes = [v.code for v in check_prepositions(r, case("E"))]
        assert codes == [V_PREPOSITION, V_DENOMINATOR]

    def test_cases_without_detection_skip_the_check(self):
        r = estimates(p_oos=0.5, l_detect=0.6)
        assert check_prepositions(r, case("B")) == []
        assert check_prepositions(r, case("C")) == []


class TestEvaluateBound:
    def test_case_b_passthrough(self):
        report = evaluate_bound(estimates(u_test=0.0015), case("B"), TARGET)
        assert report.p_safe_upper == 0.0015
        assert report.verdict is Verdict.SATISFIED

    def test_full_composition(self):
        r = estimates(
            u_test=0.0014, p_lf=0.001, p_oos=0.0005, l_detect=0.30, p_detect_oos=0.495
        )
        report = evaluate_bound(r, case("E", f=True), TARGET)
        expected = 0.0024 * (1 - 0.0005 - 0.30) + 0.0005 * (1 - 0.495)
        assert report.p_safe_upper == pytest.approx(expected, abs=1e-15)
        assert report.p_safe_upper == pytest.approx(0.0019313, abs=1e-7)
        assert report.verdict is Verdict.SATISFIED
        assert report.margin == pytest.approx(0.002 - expected, abs=1e-15)

    def test_scope_exposure_can_break_the_target(self):
        report = evaluate_bound(estimates(u_test=0.0016, p_oos=0.0005), case("C"), TARGET)
        assert report.p_safe_upper == pytest.approx(0.0020992, abs=1e-12)
        assert report.verdict is Verdict.NOT_SATISFIED

    def test_terms_recompose_the_bound(self):
        r = estimates(
            u_test=0.004, p_lf=0.002, p_oos=0.01, l_detect=0.25, p_detect_oos=0.3
        )
        report = evaluate_bound(r, case("E", f=True), TARGET)
        t = report.terms
        recomposed = (
            t.test_term + t.label_penalty - t.srf_detect_credit
            + t.scope_term - t.oos_detect_credit
        )
        assert report.p_safe_upper_raw == recomposed
        assert report.p_safe_upper == min(1.0, max(0.0, recomposed))

    def test_refuses_nonpositive_in_scope_factor(self):
        with pytest.raises(DenominatorError):
            evaluate_bound(estimates(u_test=0.1, p_oos=0.5, l_detect=0.6), case("D"), TARGET)
        with pytest.raises(DenominatorError):
            evaluate_bound(estimates(u_test=0.1, p_oos=0.2, l_detect=0.8), case("D"), TARGET)

    def test_f_flag_gates_label_penalty(self):
        r = estimates(u_test=0.001, p_lf=0.01)
        with_f = evaluate_bound(r, case("B", f=True), TARGET)
        without_f = evaluate_bound(r, case("B"), TARGET)
        assert with_f.p_safe_upper == 0.011
        assert without_f.p_safe_upper == 0.001


# the published six-value threshold chain and its exact counterparts
CHAIN = [
    ("C", 0.0, 0.0015007503751875938, 0.0015),
    ("D", 0.0, 0.0021443888491779837, 0.0021),
    ("E", 0.0, 0.0024982130092923516, 0.0025),
    ("C", 0.001, 0.0005007503751875938, 0.0005),
    ("D", 0.001, 0.0011443888491779837, 0.0011),
    ("E", 0.001, 0.0014982130092923516, 0.0015),
]


class TestDerivation:
    @pytest.mark.parametrize("base,p_lf,exact,rounded", CHAIN)
    def test_threshold_chain(self, base, p_lf, exact, rounded):
        r = estimates(p_oos=0.0005, l_detect=0.30, p_detect_oos=0.495, p_lf=p_lf)
        result = derive_required_test_bound(r, case(base, f=p_lf > 0), TARGET)
        required = result.required_u_test
        assert isinstance(required, float)
        assert required == pytest.approx(exact, abs=1e-12)
        assert required == pytest.approx(rounded, abs=1e-4)

    def test_case_b_with_labels_and_samples(self):
        r = estimates(p_lf=0.001)
        result = derive_required_test_bound(
            r, case("B", f=True), TARGET, samples=100000
        )
        assert result.required_u_test == pytest.approx(0.001, abs=1e-15)
        assert result.max_failures == 64

    def test_case_b_plain_threshold_equals_target(self):
        result = derive_required_test_bound(estimates(), case("B"), TARGET, samples=100000)
        assert result.required_u_test == pytest.approx(0.002, abs=1e-15)
        assert result.max_failures == 149

    def test_scope_floor_infeasibility(self):
        r = estimates(p_oos=0.0005)
        result = derive_required_test_bound(
            r, case("C"), SafetyTarget(p_target=0.0004, cl=0.9999)
        )
        assert isinstance(result.required_u_test, Infeasible)
        assert "scope floor" in result.required_u_test.reason

    def test_label_budget_infeasibility(self):
        r = estimates(p_oos=0.0005, p_lf=0.0016)
        result = derive_required_test_bound(
            r, case("C", f=True), SafetyTarget(p_target=0.002, cl=0.9999)
        )
        assert isinstance(result.required_u_test, Infeasible)
        assert "label faults" in result.required_u_test.reason

    def test_min_samples_when_rate_supplied(self):
        result = derive_required_test_bound(
            estimates(cl=0.95), case("B"), SafetyTarget(p_target=0.01, cl=0.95),
            expected_rate=0.0,
        )
        assert result.min_samples == 299
        assert result.max_failures is None

    def test_denominator_refusal(self):
        with pytest.raises(DenominatorError):
            derive_required_test_bound(estimates(p_oos=0.2, l_detect=0.8), case("D"), TARGET)


class TestCalculusInvariants:
    def test_case_chain_ordering(self):
        r = estimates(p_oos=0.0005, l_detect=0.30, p_detect_oos=0.495)
        req = {
            b: derive_required_test_bound(r, case(b), TARGET).required_u_test
            for b in ("C", "D", "E")
        }
        assert req["C"] < TARGET.p_target
        assert req["C"] < req["D"] < req["E"]

    def test_f_shift_is_exact(self):
        rng = random.Random(5)
        for _ in range(300):
            r = estimates(
                p_oos=rng.uniform(0, 0.05),
                l_detect=rng.uniform(0, 0.5),
                p_detect_oos=rng.uniform(0, 0.9),
                p_lf=rng.uniform(0, 0.001),
            )
            target = SafetyTarget(p_target=rng.uniform(0.001, 0.1), cl=0.9999)
            for base in ("B", "C", "D", "E"):
                plain = derive_required_test_bound(r, case(base), target).required_u_test
                adjusted = derive_required_test_bound(
                    r, case(base, f=True), target
                ).required_u_test
                if isinstance(plain, float) and isinstance(adjusted, float):
                    assert adjusted == pytest.approx(plain - r.p_lf, abs=1e-15)

    def test_derive_evaluate_round_trip(self):
        rng = random.Random(6)
        for _ in range(300):
            r = estimates(
                p_oos=rng.uniform(0, 0.1),
                l_detect=rng.uniform(0, 0.6),
                p_detect_oos=rng.uniform(0, 0.9),
                p_lf=rng.uniform(0, 0.002),
            )
            target = SafetyTarget(p_target=rng.uniform(0.0005, 0.2), cl=0.9999)
            base = rng.choice(("B", "C", "D", "E"))
            f = rng.random() < 0.5
            cid = case(base, f=f)
            try:
                required = derive_required_test_bound(r, cid, target).required_u_test
            except DenominatorError:
                continue
            if not isinstance(required, float) or required > 1.0:
                continue
            report = evaluate_bound(replace(r, u_test=required), cid, target)
            assert report.p_safe_upper_raw == pytest.approx(target.p_target, abs=1e-12)

    def test_degeneracy_d_to_b(self):
        rng = random.Random(7)
        for _ in range(200):
            r = estimates(u_test=rng.random(), p_lf=rng.uniform(0, 0.01))
            f = rng.random() < 0.5
            d = evaluate_bound(r, case("D", f=f), TARGET)
            b = evaluate_bound(r, case("B", f=f), TARGET)
            assert d.p_safe_upper_raw == b.p_safe_upper_raw

    def test_degeneracy_e_to_d(self):
        rng = random.Random(8)
        for _ in range(200):
            r = estimates(
                u_test=rng.random() * 0.1,
                p_oos=rng.uniform(0, 0.2),
                l_detect=rng.uniform(0, 0.5),
                p_detect_oos=0.0,
            )
            e = evaluate_bound(r, case("E"), TARGET)
            d = evaluate_bound(r, case("D"), TARGET)
            assert e.p_safe_upper_raw == d.p_safe_upper_raw

    def test_monotonicity_under_guard(self):
        rng = random.Random(9)
        for _ in range(300):
            r = estimates(
                u_test=rng.uniform(0, 0.3),
                p_oos=rng.uniform(0, 0.2),
                l_detect=rng.uniform(0, 0.4),
                p_detect_oos=rng.uniform(0, 0.9),
                p_lf=rng.uniform(0, 0.1),
            )
            cid = case("E", f=True)
            base_value = evaluate_bound(r, cid, TARGET).p_safe_upper_raw
            up = evaluate_bound(replace(r, u_test=min(1.0, r.u_test + 0.01)), cid, TARGET)
            assert up.p_safe_upper_raw >= base_value
            more_detect = evaluate_bound(
                replace(r, p_detect_oos=min(1.0, r.p_detect_oos + 0.05)), cid, TARGET
            )
            assert more_detect.p_safe_upper_raw <= base_value
            if r.u_test + r.p_lf < 1.0 - r.p_detect_oos and r.p_oos < 0.19:
                wider_scope = evaluate_bound(
                    replace(r, p_oos=r.p_oos + 0.01), cid, TARGET
                )
                assert wider_scope.p_safe_upper_raw > base_value

    def test_complement_identity(self):
        rng = random.Random(10)
        for _ in range(500):
            u = rng.random()
            p_oos = rng.random()
            left = u * (1.0 - p_oos) + p_oos
            right = 1.0 - (1.0 - u) * (1.0 - p_oos)
            assert math.isclose(left, right, abs_tol=1e-15)


class TestSensitivitySweep:
    def test_label_rate_endpoints(self, worked_point_bundle):
        rows = sensitivity_sweep(
            worked_point_bundle, ConfidenceMode.SHARED, "p_lf", 0.0, 0.001, 2
        )
        assert [row.value for row in rows] == [0.0, 0.001]
        assert rows[0].required_u_test == pytest.approx(0.0024982130092923516, abs=1e-12)
        assert rows[1].required_u_test == pytest.approx(0.0014982130092923516, abs=1e-12)

    def test_degenerate_range_is_rejected(self, worked_bundle):
        with pytest.raises(SweepDomainError):
            sensitivity_sweep(worked_bundle, ConfidenceMode.SHARED, "p_detect_srf", 0.0, 0.0, 2)

    def test_out_of_domain_range(self, worked_bundle):
        with pytest.raises(SweepDomainError):
            sensitivity_sweep(worked_bundle, ConfidenceMode.SHARED, "p_oos", -0.5, 0.5, 3)
        with pytest.raises(SweepDomainError):
            sensitivity_sweep(worked_bundle, ConfidenceMode.SHARED, "cl", 0.5, 1.0, 3)

    def test_too_few_steps(self, worked_bundle):
        with pytest.raises(SweepDomainError):
            sensitivity_sweep(worked_bundle, ConfidenceMode.SHARED, "p_lf", 0.0, 0.1, 1)

    def test_scope_sweep_monotone_required(self, worked_bundle):
        bundle = replace(worked_bundle, detect_srf=None, detect_oos=None, labels=None)
        rows = sensitivity_sweep(bundle, ConfidenceMode.SHARED, "p_oos", 0.0, 0.0019, 8)
        required = [row.required_u_test for row in rows]
        assert all(isinstance(v, float) for v in required)
        assert all(a > b for a, b in zip(required, required[1:]))

    def test_preposition_violating_rows_are_marked(self, worked_point_bundle):
        rows = sensitivity_sweep(
            worked_point_bundle, ConfidenceMode.SHARED, "p_detect_srf", 0.0, 0.9995, 5
        )
        verdicts = [row.verdict for row in rows]
        assert Verdict.INFEASIBLE not in verdicts[:4]
        assert verdicts[4] is Verdict.INFEASIBLE
        assert V_PREPOSITION in rows[4].codes
        assert rows[4].p_safe_upper is None

    def test_rows_preserve_sweep_order(self, worked_bundle):
        rows = sensitivity_sweep(
            worked_bundle, ConfidenceMode.SHARED, "failures", 0.0, 400.0, 5
        )
        assert [row.value for row in rows] == [0.0, 100.0, 200.0, 300.0, 400.0]
        satisfied = [row.verdict is Verdict.SATISFIED for row in rows]
        assert satisfied == sorted(satisfied, reverse=True)

    def test_cl_sweep(self, minimal_bundle):
        rows = sensitivity_sweep(minimal_bundle, ConfidenceMode.SHARED, "cl", 0.8, 0.99, 3)
        bounds = [row.p_safe_upper for row in rows]
        assert bounds[0] < bounds[1] < bounds[2]
