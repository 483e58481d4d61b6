"""Evaluation metrics for posterior approximations: proportion of variation
unexplained, credible-interval coverage, relative Frobenius covariance loss,
and the one-sample Kolmogorov-Smirnov statistic against a Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .specfun import normal_quantile

__all__ = [
    "MetricReport",
    "unexplained_variation",
    "coverage",
    "gaussian_intervals",
    "empirical_intervals",
    "frobenius_loss",
    "ks_statistic",
]


@dataclass(frozen=True)
class MetricReport:
    """One metric value with the keys a study needs to group it by."""

    metric: str
    value: float
    parametrization: str = ""
    sample_size: int = 0
    mc: int = 0
    replicate: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"metric {self.metric!r} produced a non-finite value")

    def as_row(self) -> tuple:
        return (
            self.metric,
            self.parametrization,
            self.sample_size,
            self.mc if self.mc else "",
            self.replicate,
            repr(float(self.value)),
        )


def unexplained_variation(theta_hat, theta0) -> float:
    """Residual norm of the estimate over the total variation of the truth:
    ||theta_hat - theta0|| / sqrt(sum_j (theta0_j - mean(theta0))^2).

    The denominator is the centered norm of the true vector, i.e. its sample
    standard deviation (divisor d - 1) times sqrt(d - 1). With no data this
    ratio sits near 1, and it falls toward 0 as the estimate improves, which
    is what "proportion of variation unexplained" means.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    if theta_hat.shape != theta0.shape or theta_hat.ndim != 1:
        raise ValueError("estimate and truth must be vectors of equal length")
    if theta0.size < 2:
        raise ValueError("need at least 2 coordinates to measure variation")
    centered = theta0 - theta0.mean()
    total = float(np.sqrt((centered * centered).sum()))
    if total == 0.0:
        raise ValueError("true vector is constant; variation is undefined")
    return float(np.linalg.norm(theta_hat - theta0)) / total


def coverage(intervals, theta0) -> float:
    """Fraction of coordinates whose interval contains the true value."""
    theta0 = np.asarray(theta0, dtype=float)
    intervals = [(float(lo), float(hi)) for lo, hi in intervals]
    if len(intervals) != theta0.size:
        raise ValueError("one interval per coordinate required")
    hits = 0
    for (lo, hi), value in zip(intervals, theta0):
        if lo > hi:
            raise ValueError(f"interval has lo > hi: ({lo}, {hi})")
        if lo <= value <= hi:
            hits += 1
    return hits / theta0.size


def gaussian_intervals(mean, variances, level: float = 0.95) -> list[tuple[float, float]]:
    """Symmetric normal credible intervals mean +/- z * sd per coordinate."""
    mean = np.asarray(mean, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if np.any(variances < 0):
        raise ValueError("variances must be nonnegative")
    z = normal_quantile(0.5 + 0.5 * level)
    half = z * np.sqrt(variances)
    return [(float(m - h), float(m + h)) for m, h in zip(mean, half)]


def empirical_intervals(draws, level: float = 0.95) -> list[tuple[float, float]]:
    """Columnwise empirical central intervals from a sample matrix."""
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 2:
        raise ValueError("draws must be an (mc x d) matrix")
    tail = 100.0 * 0.5 * (1.0 - level)
    lo = np.percentile(draws, tail, axis=0)
    hi = np.percentile(draws, 100.0 - tail, axis=0)
    return [(float(a), float(b)) for a, b in zip(lo, hi)]


def frobenius_loss(sigma_hat, sigma) -> float:
    """Relative Frobenius error ||Sigma_hat - Sigma||_F / ||Sigma||_F."""
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if sigma_hat.shape != sigma.shape:
        raise ValueError("matrices must have the same shape")
    denom = float(np.linalg.norm(sigma))
    if denom == 0.0:
        raise ValueError("reference matrix is zero; relative loss undefined")
    return float(np.linalg.norm(sigma_hat - sigma)) / denom


def ks_statistic(samples, mu: float, sigma: float) -> float:
    """One-sample Kolmogorov-Smirnov distance between an empirical sample and
    N(mu, sigma^2), by the exact order-statistic formula
    max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n).
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.sort(np.asarray(samples, dtype=float))
    if x.ndim != 1 or x.size < 1:
        raise ValueError("need at least one sample")
    n = x.size
    z = (x - mu) / sigma
    # Vectorized Phi via erf keeps this O(n log n) end to end.
    cdf = 0.5 * (1.0 + _erf_vec(z / np.sqrt(2.0)))
    i = np.arange(1, n + 1)
    upper = i / n - cdf
    lower = cdf - (i - 1) / n
    return float(np.maximum(upper, lower).max())


def _erf_vec(x: np.ndarray) -> np.ndarray:
    import math

    return np.vectorize(math.erf, otypes=[float])(x)
