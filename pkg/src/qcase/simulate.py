"""Monte Carlo check of the composed bound's coverage.

Worlds with known ground truth are simulated, campaigns drawn from them,
estimates resolved exactly as the calculus would from real data, and the
composed bound compared against the true violation probability. The
fraction of runs in which the bound covers the truth is the empirical
coverage; for a conservative bound it must not fall below the declared
confidence level (up to binomial sampling noise).

Randomness comes from numpy's Philox counter-based generator
(Philox 4x64 with 10 rounds). Each run draws from its own stream, keyed
by the 128-bit pair (seed, run_index), so results are a pure function of
(truth, design, runs, seed) no matter how runs are scheduled or batched.
The adversarial label model is built in: every labelling fault hides a
true failure, so the dataset-observed failure rate is
max(0, p_srf - p_lf).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .binomial import cp_lower, cp_upper
from .budget import CaseBase, CaseId, compose_terms
from .evidence import ConfidenceMode, EffectiveConfidence, ResolvedEstimates

__all__ = [
    "GroundTruth",
    "CampaignDesign",
    "SimOutcome",
    "CoverageReport",
    "simulate_campaign",
    "coverage_experiment",
    "true_violation_probability",
    "GridPoint",
    "GridResult",
    "coverage_grid",
    "grid_to_csv",
    "coverage_report_to_json",
]

_MAX_SEED = 2**64


def _check_unit(value: float, name: str) -> float:
    value = float(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return value


def _check_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    return seed


@dataclass(frozen=True)
class GroundTruth:
    """True component characteristics of a simulated world.

    Only worlds satisfying the detection side condition
    (1 - p_oos >= p_detect_srf) are admitted, matching the regime in
    which the composed bound is asserted.
    """

    p_srf: float
    p_oos: float = 0.0
    p_detect_srf: float = 0.0
    p_detect_oos: float = 0.0
    p_lf: float = 0.0

    def __post_init__(self):
        for name in ("p_srf", "p_oos", "p_detect_srf", "p_detect_oos", "p_lf"):
            _check_unit(getattr(self, name), name)
        if 1.0 - self.p_oos < self.p_detect_srf:
            raise ValueError(
                "ground truth must satisfy 1 - p_oos >= p_detect_srf, got "
                f"p_oos={self.p_oos}, p_detect_srf={self.p_detect_srf}"
            )


@dataclass(frozen=True)
class CampaignDesign:
    """Shape of the simulated campaign and of the estimator applied to it.

    n_detect_eval sizes the detection-efficacy evaluation sample; None
    means the evaluation runs on the true failures found in the test
    campaign, whose count varies per run.
    """

    n_test: int
    cl: float
    case: CaseId
    mode: ConfidenceMode = ConfidenceMode.SHARED
    n_detect_eval: int | None = None

    def __post_init__(self):
        if not isinstance(self.n_test, int) or self.n_test < 1:
            raise ValueError(f"n_test must be an integer >= 1, got {self.n_test!r}")
        cl = float(self.cl)
        if math.isnan(cl) or not 0.0 < cl < 1.0:
            raise ValueError(f"cl must be in (0, 1), got {cl!r}")
        if self.n_detect_eval is not None and (
            not isinstance(self.n_detect_eval, int) or self.n_detect_eval < 1
        ):
            raise ValueError(f"n_detect_eval must be None or >= 1, got {self.n_detect_eval!r}")


@dataclass(frozen=True)
class SimOutcome:
    k_test: int  # dataset-observed failures (label faults already hid some)
    detected: int  # detection successes on the evaluation sample
    srf_count: int  # true failures in the campaign


@dataclass(frozen=True)
class CoverageReport:
    runs: int
    covered: int
    coverage: float
    mean_slack: float  # mean of (bound - truth) over covered runs
    seed: int
    violations: tuple[int, ...]  # run indices, capped at 100


def _stream(seed: int, run_index: int) -> np.random.Generator:
    key = np.array([seed, run_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_campaign(
    truth: GroundTruth, design: CampaignDesign, seed: int, run_index: int = 0
) -> SimOutcome:
    """Draw one campaign from a ground-truth world.

    Draw order is fixed (dataset failures, true failures, detections) on
    the (seed, run_index) stream, so an outcome depends only on those
    four arguments.
    """
    _check_seed(seed)
    rng = _stream(seed, run_index)
    p_dataset = max(0.0, truth.p_srf - truth.p_lf)
    k_test = int(rng.binomial(design.n_test, p_dataset))
    srf_count = int(rng.binomial(design.n_test, truth.p_srf))
    m = design.n_detect_eval if design.n_detect_eval is not None else srf_count
    detected = int(rng.binomial(m, truth.p_detect_srf)) if m > 0 else 0
    return SimOutcome(k_test=k_test, detected=detected, srf_count=srf_count)


@lru_cache(maxsize=1 << 18)
def _cp_upper_cached(k: int, n: int, cl: float) -> float:
    return cp_upper(k, n, cl)


@lru_cache(maxsize=1 << 18)
def _cp_lower_cached(k: int, n: int, cl: float) -> float:
    return cp_lower(k, n, cl)


def _statistical_quantities(design: CampaignDesign) -> int:
    return 2 if design.case.base in (CaseBase.D, CaseBase.E) else 1


def resolve_outcome(
    outcome: SimOutcome, truth: GroundTruth, design: CampaignDesign
) -> ResolvedEstimates:
    """Resolve simulated counts the way the calculus would resolve real ones.

    Expert-style quantities (p_oos, p_detect_oos, declared p_lf) pass
    through from the truth: the experiment isolates the statistical
    machinery and treats declared inputs as exact.
    """
    if design.mode is ConfidenceMode.BONFERRONI:
        cl_stat = 1.0 - (1.0 - design.cl) / _statistical_quantities(design)
    else:
        cl_stat = design.cl
    u_test = _cp_upper_cached(outcome.k_test, design.n_test, cl_stat)
    l_detect = 0.0
    cl_detect = None
    if design.case.base in (CaseBase.D, CaseBase.E):
        m = design.n_detect_eval if design.n_detect_eval is not None else outcome.srf_count
        if m > 0:
            l_detect = _cp_lower_cached(outcome.detected, m, cl_stat)
            cl_detect = cl_stat
    return ResolvedEstimates(
        u_test=u_test,
        l_detect_srf=l_detect,
        p_oos=truth.p_oos,
        p_detect_oos=truth.p_detect_oos,
        p_lf=truth.p_lf,
        cl_effective=EffectiveConfidence(test=cl_stat, detect_srf=cl_detect),
    )


def true_violation_probability(truth: GroundTruth) -> float:
    """Exact violation probability of a world, worst-casing out-of-scope behaviour.

    In scope, a violation needs a true failure that detection misses;
    out of scope every undetected application is counted as a violation.
    """
    return truth.p_srf * (1.0 - truth.p_oos) * (1.0 - truth.p_detect_srf) + truth.p_oos * (
        1.0 - truth.p_detect_oos
    )


def coverage_experiment(
    truth: GroundTruth, design: CampaignDesign, runs: int, seed: int
) -> CoverageReport:
    """Measure how often the composed bound covers the true probability.

    Each run draws a campaign from its own (seed, run_index) stream,
    resolves estimates, composes the bound for the design's case, and
    compares it with the world's true violation probability. The report
    is a pure function of (truth, design, runs, seed); per-run results
    are aggregated in run-index order regardless of how callers might
    batch the work.
    """
    if not isinstance(runs, int) or runs < 1:
        raise ValueError(f"runs must be an integer >= 1, got {runs!r}")
    _check_seed(seed)
    p_true = true_violation_probability(truth)
    covered = 0
    slack_sum: list[float] = []
    violations: list[int] = []
    for index in range(runs):
        outcome = simulate_campaign(truth, design, seed, run_index=index)
        resolved = resolve_outcome(outcome, truth, design)
        terms = compose_terms(resolved, design.case)
        bound = min(1.0, max(0.0, terms.unclipped))
        if bound >= p_true:
            covered += 1
            slack_sum.append(bound - p_true)
        elif len(violations) < 100:
            violations.append(index)
    mean_slack = math.fsum(slack_sum) / covered if covered else 0.0
    return CoverageReport(
        runs=runs,
        covered=covered,
        coverage=covered / runs,
        mean_slack=mean_slack,
        seed=seed,
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class GridPoint:
    name: str
    truth: GroundTruth
    design: CampaignDesign


@dataclass(frozen=True)
class GridResult:
    point: GridPoint
    report: CoverageReport


def coverage_grid(points: list[GridPoint], runs: int, seed: int) -> list[GridResult]:
    """Run the coverage experiment over a grid of worlds, one shared seed."""
    return [
        GridResult(point=p, report=coverage_experiment(p.truth, p.design, runs, seed))
        for p in points
    ]


_GRID_CSV_HEADER = [
    "name",
    "case",
    "mode",
    "p_srf",
    "p_oos",
    "p_detect_srf",
    "p_detect_oos",
    "p_lf",
    "n_test",
    "cl",
    "runs",
    "covered",
    "coverage",
    "mean_slack",
    "seed",
]


def grid_to_csv(results: list[GridResult]) -> str:
    """One CSV row per grid point, in input order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_GRID_CSV_HEADER)
    for result in results:
        t, d, r = result.point.truth, result.point.design, result.report
        writer.writerow(
            [
                result.point.name,
                str(d.case),
                d.mode.value,
                repr(t.p_srf),
                repr(t.p_oos),
                repr(t.p_detect_srf),
                repr(t.p_detect_oos),
                repr(t.p_lf),
                d.n_test,
                repr(d.cl),
                r.runs,
                r.covered,
                repr(r.coverage),
                repr(r.mean_slack),
                r.seed,
            ]
        )
    return buffer.getvalue()


def coverage_report_to_json(report: CoverageReport) -> str:
    data = {
        "runs": report.runs,
        "covered": report.covered,
        "coverage": report.coverage,
        "mean_slack": report.mean_slack,
        "seed": report.seed,
        "violations": list(report.violations),
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
