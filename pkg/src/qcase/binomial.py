"""Exact one-sided binomial proportion bounds and their inversions.

Everything in this module rests on a single numerical kernel: direct
log-space summation of binomial probability mass terms. The one-sided
bounds (`cp_upper`, `cp_lower`) are obtained by bisecting that kernel,
never through a closed-form quantile, so the kernel itself can be checked
against an independent brute-force oracle and every bound inherits that
check.

The exact bounds are conservative: the returned upper (lower) bound is
guaranteed to sit on the safe side of the bisection bracket. Approximate
Wilson and Wald variants are provided for comparison; they do not carry a
coverage guarantee and reporting layers label them as non-conservative.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "binom_cdf",
    "binom_sf",
    "cp_upper",
    "cp_lower",
    "max_acceptable_failures",
    "min_sample_size",
    "wilson_upper",
    "wilson_lower",
    "wald_upper",
    "wald_lower",
    "one_sided_z",
]

# Bisection on a probability stops once the bracket is narrower than this.
# 1e-13 leaves headroom under the documented 1e-12 root tolerance.
_ROOT_TOL = 1e-13
_MAX_ITER = 200

# Sample-size search gives up beyond this many samples unless overridden.
DEFAULT_SAMPLE_CAP = 1_000_000_000


def _check_counts(k: int, n: int) -> None:
    if not isinstance(k, int) or not isinstance(n, int):
        raise ValueError(f"counts must be integers, got k={k!r}, n={n!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k > n:
        raise ValueError(f"k must not exceed n, got k={k}, n={n}")


def _check_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if math.isnan(p) or not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {p!r}")
    return p


def _check_confidence(cl: float) -> float:
    cl = float(cl)
    if math.isnan(cl) or not 0.0 < cl < 1.0:
        raise ValueError(f"confidence level must be in (0, 1), got {cl!r}")
    return cl


def _log_binom_coef(lo: int, hi: int, n: int) -> np.ndarray:
    """log C(n, i) for i in [lo, hi], via lgamma."""
    lg_n1 = math.lgamma(n + 1)
    return np.array(
        [lg_n1 - math.lgamma(i + 1) - math.lgamma(n - i + 1) for i in range(lo, hi + 1)],
        dtype=np.float64,
    )


def _mass_sum(coef: np.ndarray, lo: int, n: int, p: float) -> float:
    """Sum of C(n,i) p^i (1-p)^(n-i) over i = lo .. lo+len(coef)-1.

    Terms are assembled in log space and summed after rescaling by the
    largest term, which keeps the result accurate even when individual
    terms underflow binary64.
    """
    if p == 0.0:
        return 1.0 if lo == 0 else 0.0
    if p == 1.0:
        return 1.0 if lo + len(coef) - 1 == n else 0.0
    i = np.arange(lo, lo + len(coef), dtype=np.float64)
    log_terms = coef + i * math.log(p) + (n - i) * math.log1p(-p)
    m = float(log_terms.max())
    if m == -math.inf:
        return 0.0
    total = math.exp(m) * float(np.exp(log_terms - m).sum())
    return min(total, 1.0)


def binom_cdf(k: int, n: int, p: float) -> float:
    """P(X <= k) for X ~ Binomial(n, p), by direct term summation.

    Relative accuracy is about 1e-10 or better for results down to
    1e-300; the limiting factor at large n is the absolute precision of
    the log-space coefficients.
    """
    _check_counts(k, n)
    p = _check_probability(p)
    if k == n:
        return 1.0
    return _mass_sum(_log_binom_coef(0, k, n), 0, n, p)


def binom_sf(k: int, n: int, p: float) -> float:
    """P(X >= k) for X ~ Binomial(n, p), summed over the upper tail.

    Computed by its own summation over i = k..n rather than as
    1 - binom_cdf(k-1, ...), so the two tails provide independent routes
    for cross-checks.
    """
    _check_counts(k, n)
    p = _check_probability(p)
    if k == 0:
        return 1.0
    return _mass_sum(_log_binom_coef(k, n, n), k, n, p)


def cp_upper(k: int, n: int, cl: float) -> float:
    """Exact one-sided upper confidence bound on a binomial proportion.

    Returns the smallest p with binom_cdf(k, n, p) <= 1 - cl, located by
    bisection over the CDF kernel. The returned value always satisfies
    the defining inequality (the feasible end of the final bracket), so
    rounding errs on the conservative side. Saturates at exactly 1.0
    when k = n.
    """
    _check_counts(k, n)
    cl = _check_confidence(cl)
    if k == n:
        return 1.0
    alpha = 1.0 - cl
    coef = _log_binom_coef(0, k, n)

    def cdf(p: float) -> float:
        if p == 0.0:
            return 1.0
        if p == 1.0:
            return 0.0
        return _mass_sum(coef, 0, n, p)

    lo, hi = 0.0, 1.0  # cdf(lo) > alpha, cdf(hi) <= alpha
    for _ in range(_MAX_ITER):
        if hi - lo <= _ROOT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if cdf(mid) <= alpha:
            hi = mid
        else:
            lo = mid
    return hi


def cp_lower(k: int, n: int, cl: float) -> float:
    """Exact one-sided lower confidence bound on a binomial proportion.

    Returns the largest p with binom_sf(k, n, p) <= 1 - cl, located by
    bisection over the survival-function kernel (not derived from
    cp_upper, so the mirror identity between the two stays a genuine
    cross-check). Returns exactly 0.0 when k = 0.
    """
    _check_counts(k, n)
    cl = _check_confidence(cl)
    if k == 0:
        return 0.0
    alpha = 1.0 - cl
    coef = _log_binom_coef(k, n, n)

    def sf(p: float) -> float:
        if p == 0.0:
            return 0.0
        if p == 1.0:
            return 1.0
        return _mass_sum(coef, k, n, p)

    lo, hi = 0.0, 1.0  # sf(lo) <= alpha, sf(hi) > alpha
    for _ in range(_MAX_ITER):
        if hi - lo <= _ROOT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if sf(mid) <= alpha:
            lo = mid
        else:
            hi = mid
    return lo


def max_acceptable_failures(n: int, cl: float, threshold: float) -> int | None:
    """Largest k whose exact upper bound stays at or below `threshold`.

    Returns None when even k = 0 exceeds the threshold (the campaign
    cannot demonstrate the threshold at this sample size and confidence).
    The search bisects on k using the CDF directly, then verifies the
    boundary against cp_upper itself, so the result satisfies
    cp_upper(k) <= threshold < cp_upper(k + 1) exactly as computed.
    """
    _check_counts(0, n)
    cl = _check_confidence(cl)
    threshold = float(threshold)
    if math.isnan(threshold) or threshold <= 0.0:
        raise ValueError(f"threshold must be > 0, got {threshold!r}")
    if threshold >= 1.0:
        return n
    alpha = 1.0 - cl

    # cp_upper(k) <= t  iff  binom_cdf(k, n, t) <= 1 - cl; one CDF
    # evaluation per probe instead of a full inversion.
    def feasible(k: int) -> bool:
        return binom_cdf(k, n, threshold) <= alpha

    if not feasible(0):
        k = -1
    elif feasible(n):
        k = n
    else:
        lo, hi = 0, n  # feasible(lo), not feasible(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        k = lo

    # Settle boundary disagreements between the probe and the inverted
    # bound in favour of cp_upper, which is the published quantity.
    while k >= 0 and cp_upper(max(k, 0), n, cl) > threshold:
        k -= 1
    while k < n and cp_upper(k + 1, n, cl) <= threshold:
        k += 1
    return None if k < 0 else k


def min_sample_size(
    expected_rate: float,
    cl: float,
    threshold: float,
    cap: int = DEFAULT_SAMPLE_CAP,
) -> int | None:
    """Smallest n demonstrating `threshold` if failures arrive at `expected_rate`.

    The assumed observed count at size n is round(expected_rate * n)
    (Python round-half-to-even). Returns None when expected_rate >=
    threshold (the bound can never fall below the point estimate) or when
    no n up to `cap` works. The search doubles n until the property
    holds, bisects for the boundary, then walks backward across any
    rounding-induced wiggle so that the property fails at n - 1.
    """
    expected_rate = _check_probability(expected_rate, "expected_rate")
    cl = _check_confidence(cl)
    threshold = float(threshold)
    if math.isnan(threshold) or not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold!r}")
    if expected_rate >= threshold:
        return None

    def ok(n: int) -> bool:
        return cp_upper(round(expected_rate * n), n, cl) <= threshold

    n = 1
    while not ok(n):
        n *= 2
        if n > cap:
            return None
    if n == 1:
        return 1
    lo, hi = n // 2, n  # not ok(lo), ok(hi) -- up to rounding wiggle
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    while hi > 1 and ok(hi - 1):
        hi -= 1
    return hi


def one_sided_z(cl: float) -> float:
    """Standard-normal quantile for a one-sided confidence level."""
    from statistics import NormalDist

    return NormalDist().inv_cdf(_check_confidence(cl))


def wilson_upper(k: int, n: int, cl: float) -> float:
    """One-sided Wilson score upper bound. Approximate, not conservative."""
    _check_counts(k, n)
    z = one_sided_z(cl)
    phat = k / n
    denom = 1.0 + z * z / n
    centre = phat + z * z / (2.0 * n)
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n))
    return min(1.0, (centre + half) / denom)


def wilson_lower(k: int, n: int, cl: float) -> float:
    """One-sided Wilson score lower bound. Approximate, not conservative."""
    _check_counts(k, n)
    z = one_sided_z(cl)
    phat = k / n
    denom = 1.0 + z * z / n
    centre = phat + z * z / (2.0 * n)
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n))
    return max(0.0, (centre - half) / denom)


def wald_upper(k: int, n: int, cl: float) -> float:
    """One-sided normal-approximation upper bound. Not conservative."""
    _check_counts(k, n)
    z = one_sided_z(cl)
    phat = k / n
    return min(1.0, phat + z * math.sqrt(phat * (1.0 - phat) / n))


def wald_lower(k: int, n: int, cl: float) -> float:
    """One-sided normal-approximation lower bound. Not conservative."""
    _check_counts(k, n)
    z = one_sided_z(cl)
    phat = k / n
    return max(0.0, phat - z * math.sqrt(phat * (1.0 - phat) / n))
