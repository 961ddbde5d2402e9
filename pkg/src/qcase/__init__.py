"""Quantitative safety-bound calculus and assurance-case tooling.

Composes statistical-testing bounds, scope-compliance estimates, runtime
detection efficacy, and label-fault rates into a single conservative
upper bound on the probability of an unflagged safety-related failure,
inverts that bound into acceptance thresholds for test campaigns, checks
the result inside an explicit claim tree, and validates the whole
machinery by Monte Carlo simulation.
"""

__version__ = "0.1.0"

from .binomial import (
    binom_cdf,
    binom_sf,
    cp_lower,
    cp_upper,
    max_acceptable_failures,
    min_sample_size,
)
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
    TestEvidence,
    resolve_estimates,
    scope_at_time,
    validate_bundle,
)
from .budget import (
    BoundReport,
    CaseBase,
    CaseId,
    DerivationResult,
    Infeasible,
    Verdict,
    applicable_case,
    check_prepositions,
    derive_required_test_bound,
    evaluate_bound,
    sensitivity_sweep,
)
from .dsl import CaseSyntaxError, parse, serialize
from .argument import build_tree, export_dot, export_json, propagate_status
from .simulate import (
    CampaignDesign,
    CoverageReport,
    GroundTruth,
    coverage_experiment,
    simulate_campaign,
)

__all__ = [
    "__version__",
    "binom_cdf",
    "binom_sf",
    "cp_lower",
    "cp_upper",
    "max_acceptable_failures",
    "min_sample_size",
    "CaseBundle",
    "ConfidenceMode",
    "DetectionEvidence",
    "DetectionKind",
    "IntervalMethod",
    "LabelQuality",
    "Provenance",
    "ResolvedEstimates",
    "SafetyTarget",
    "ScopeEvidence",
    "TestEvidence",
    "resolve_estimates",
    "scope_at_time",
    "validate_bundle",
    "BoundReport",
    "CaseBase",
    "CaseId",
    "DerivationResult",
    "Infeasible",
    "Verdict",
    "applicable_case",
    "check_prepositions",
    "derive_required_test_bound",
    "evaluate_bound",
    "sensitivity_sweep",
    "CaseSyntaxError",
    "parse",
    "serialize",
    "build_tree",
    "export_dot",
    "export_json",
    "propagate_status",
    "CampaignDesign",
    "CoverageReport",
    "GroundTruth",
    "coverage_experiment",
    "simulate_campaign",
]
