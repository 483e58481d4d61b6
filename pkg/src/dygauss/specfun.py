"""Scalar special functions: log-gamma, digamma, trigamma, normal CDF/quantile,
regularized incomplete gamma, and chi-square quantiles.

All functions are pure and deterministic. Strategy for the gamma-derivative
family: shift the argument upward by the recurrence until it is >= 10, then
evaluate an asymptotic (Bernoulli-number) expansion whose truncation error is
below 1e-14 there. The recurrences double as test invariants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ToleranceConfig",
    "DEFAULT_TOL",
    "log_gamma",
    "digamma",
    "trigamma",
    "normal_cdf",
    "normal_quantile",
    "reg_lower_gamma",
    "chi2_cdf",
    "chi2_quantile",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)

# Arguments below this are shifted up by the recurrence before the
# asymptotic series is applied.
_ASYMPTOTIC_CUTOFF = 10.0


@dataclass(frozen=True)
class ToleranceConfig:
    """Convergence targets shared by the iterative routines here."""

    abs_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0):
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_TOL = ToleranceConfig()


def _require_positive(z: float, name: str) -> float:
    z = float(z)
    if not math.isfinite(z) or z <= 0.0:
        raise ValueError(f"{name} requires a positive finite argument, got {z}")
    return z


def log_gamma(z: float) -> float:
    """log Gamma(z) for z > 0."""
    z = _require_positive(z, "log_gamma")
    shift = 0.0
    while z < _ASYMPTOTIC_CUTOFF:
        shift -= math.log(z)
        z += 1.0
    # Stirling series: coefficients B_{2k} / (2k (2k-1)).
    w = 1.0 / (z * z)
    series = (
        1.0 / 12.0
        + w
        * (
            -1.0 / 360.0
            + w
            * (
                1.0 / 1260.0
                + w
                * (
                    -1.0 / 1680.0
                    + w * (1.0 / 1188.0 + w * (-691.0 / 360360.0 + w * (1.0 / 156.0)))
                )
            )
        )
    ) / z
    return _HALF_LOG_2PI + (z - 0.5) * math.log(z) - z + series + shift


def digamma(z: float) -> float:
    """psi(z) = d/dz log Gamma(z) for z > 0."""
    z = _require_positive(z, "digamma")
    shift = 0.0
    while z < _ASYMPTOTIC_CUTOFF:
        shift -= 1.0 / z
        z += 1.0
    w = 1.0 / (z * z)
    series = w * (
        1.0 / 12.0
        - w
        * (
            1.0 / 120.0
            - w
            * (
                1.0 / 252.0
                - w
                * (
                    1.0 / 240.0
                    - w * (1.0 / 132.0 - w * (691.0 / 32760.0 - w * (1.0 / 12.0)))
                )
            )
        )
    )
    return math.log(z) - 0.5 / z - series + shift


def trigamma(z: float) -> float:
    """psi'(z), the derivative of digamma, for z > 0. Always positive."""
    z = _require_positive(z, "trigamma")
    shift = 0.0
    while z < _ASYMPTOTIC_CUTOFF:
        shift += 1.0 / (z * z)
        z += 1.0
    w = 1.0 / (z * z)
    series = w * (
        1.0 / 6.0
        - w
        * (
            1.0 / 30.0
            - w
            * (
                1.0 / 42.0
                - w
                * (1.0 / 30.0 - w * (5.0 / 66.0 - w * (691.0 / 2730.0 - w * (7.0 / 6.0))))
            )
        )
    )
    return 1.0 / z + 0.5 * w + series / z + shift


def normal_cdf(x: float) -> float:
    """Standard normal CDF Phi(x)."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"normal_cdf requires a finite argument, got {x}")
    return 0.5 * math.erfc(-x / _SQRT2)


def _normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def normal_quantile(p: float, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Inverse of the standard normal CDF on (0, 1).

    Tail-asymptotic initial guess refined by Newton; the CDF is smooth and
    log-concave so this converges in a handful of steps.
    """
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ValueError(f"normal_quantile requires p in (0, 1), got {p}")
    q = min(p, 1.0 - p)
    # sqrt(-2 log q) is exact to leading order in the tail and adequate
    # everywhere as a starting point.
    x = -math.sqrt(max(-2.0 * math.log(q), 0.0))
    if p > 0.5:
        x = -x
    for _ in range(tol.max_iter):
        err = normal_cdf(x) - p
        if abs(err) <= tol.abs_tol * min(p, 1.0 - p) + 1e-16:
            break
        d = _normal_pdf(x)
        if d <= 0.0:
            break
        step = err / d
        # Limit the step so the tail-flat pdf cannot catapult the iterate.
        step = max(min(step, 1.0), -1.0)
        x -= step
    return x


def _lower_gamma_series(a: float, x: float, tol: ToleranceConfig) -> float:
    """P(a, x) by power series, reliable for x < a + 1."""
    term = 1.0 / a
    total = term
    n = a
    for _ in range(10 * tol.max_iter):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(a * math.log(x) - x - log_gamma(a))


def _upper_gamma_cf(a: float, x: float, tol: ToleranceConfig) -> float:
    """Q(a, x) by modified Lentz continued fraction, reliable for x >= a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10 * tol.max_iter):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(a * math.log(x) - x - log_gamma(a))


def reg_lower_gamma(a: float, x: float, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0."""
    a = _require_positive(a, "reg_lower_gamma")
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise ValueError(f"reg_lower_gamma requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _lower_gamma_series(a, x, tol)
    return 1.0 - _upper_gamma_cf(a, x, tol)


def chi2_cdf(x: float, k: int, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """CDF of the chi-square distribution with k degrees of freedom."""
    if k < 1:
        raise ValueError(f"chi2_cdf requires k >= 1, got {k}")
    if x <= 0.0:
        return 0.0
    return reg_lower_gamma(0.5 * k, 0.5 * x, tol)


def _chi2_logpdf(x: float, k: int) -> float:
    half_k = 0.5 * k
    return (half_k - 1.0) * math.log(x) - 0.5 * x - half_k * math.log(2.0) - log_gamma(half_k)


def chi2_quantile(p: float, k: int, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Quantile of the chi-square distribution with k degrees of freedom.

    Wilson-Hilferty initial guess refined by bracket-safeguarded Newton on
    the regularized incomplete gamma; falls back to bisection when Newton
    stalls (the density is unbounded at 0 for k = 1, so the safeguard is
    not optional).
    """
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ValueError(f"chi2_quantile requires p in (0, 1), got {p}")
    if k < 1:
        raise ValueError(f"chi2_quantile requires k >= 1, got {k}")

    z = normal_quantile(p, tol)
    t = 1.0 - 2.0 / (9.0 * k) + z * math.sqrt(2.0 / (9.0 * k))
    x = k * t * t * t if t > 0.0 else 0.0
    if x <= 0.0:
        x = 0.5 * k * math.exp((math.log(p) + log_gamma(0.5 * k) + math.log(2.0)) / (0.5 * k))
        x = max(x, 1e-300)

    lo, hi = 0.0, math.inf
    for _ in range(tol.max_iter):
        err = chi2_cdf(x, k, tol) - p
        if err > 0.0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        if abs(err) <= tol.abs_tol:
            return x
        d = math.exp(_chi2_logpdf(x, k))
        if d > 0.0 and math.isfinite(d):
            x_new = x - err / d
        else:
            x_new = math.nan
        if not (lo < x_new < hi) or not math.isfinite(x_new):
            x_new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * x
        x = x_new

    # Bisection endgame; the bracket is guaranteed by the loop above.
    if not math.isfinite(hi):
        hi = max(x, 1.0)
        while chi2_cdf(hi, k, tol) < p:
            hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, k, tol) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
