"""Conjugate updating for the multinomial log-linear model and the optimal
Gaussian approximation to its posterior.

The posterior of the log-ratio parameter under the conjugate prior is the
log-ratio pushforward of a Dirichlet law with concentration beta = prior +
counts. The KL-closest Gaussian to that law has mean mu*_j = psi(b_j) -
psi(b_0) and covariance Sigma* = Diag(psi'(b_j)) + psi'(b_0) 11^T, i.e. the
exact posterior mean and covariance. Sigma* is compound symmetric, so every
quadratic form, solve, and determinant here runs in O(d) via the
Sherman-Morrison and matrix-determinant identities.

Covariance transform convention: a Gaussian G ~ N(m, S) pushed through the
linear map t -> A t is N(A m, A S A^T). For t* = X^{-1} t that means mean
X^{-1} m and covariance X^{-1} S X^{-T}. (Displays that write the
transformed covariance as X^T S X are inconsistent with this rule; the
change-of-variables form is the one under which KL divergence is invariant,
and it is what we use.)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .parametrization import DesignMatrix
from .specfun import digamma, log_gamma, trigamma

__all__ = [
    "DirichletParams",
    "CompoundSymmetryMatrix",
    "GaussianApprox",
    "dy_update",
    "ld_moments",
    "optimal_gaussian",
    "transform_gaussian",
    "cs_solve",
    "cs_logdet",
    "cs_mahalanobis",
    "exact_min_kl",
    "kl_to_gaussian",
    "KLBound",
    "kl_bound",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class DirichletParams:
    """Positive concentration vector (b_0, ..., b_d); index 0 is the baseline."""

    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or beta.size < 2:
            raise ValueError("concentration must be a vector of length >= 2")
        if np.any(beta <= 0.0) or not np.all(np.isfinite(beta)):
            raise ValueError("concentration entries must be positive and finite")
        beta.flags.writeable = False
        object.__setattr__(self, "beta", beta)

    @property
    def d(self) -> int:
        return self.beta.size - 1

    @property
    def total(self) -> float:
        return float(self.beta.sum())


@dataclass(frozen=True)
class CompoundSymmetryMatrix:
    """Diag(diag) + common * 11^T with positive diag and common > 0."""

    diag: np.ndarray
    common: float

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        if diag.ndim != 1 or diag.size < 1:
            raise ValueError("diag must be a 1-d vector")
        if np.any(diag <= 0.0) or not np.all(np.isfinite(diag)):
            raise ValueError("diag entries must be positive and finite")
        if not (self.common > 0.0 and math.isfinite(self.common)):
            raise ValueError("common term must be positive and finite")
        diag.flags.writeable = False
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "common", float(self.common))

    @property
    def d(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + self.common

    def full_diagonal(self) -> np.ndarray:
        return self.diag + self.common

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.diag * v + self.common * v.sum()


def cs_solve(m: CompoundSymmetryMatrix, v) -> np.ndarray:
    """Solve (Diag(D) + c 11^T) x = v by Sherman-Morrison in O(d)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (m.d,):
        raise ValueError(f"expected a length-{m.d} vector, got shape {v.shape}")
    w = v / m.diag
    s = float((1.0 / m.diag).sum())
    return w - (m.common * w.sum() / (1.0 + m.common * s)) / m.diag


def cs_logdet(m: CompoundSymmetryMatrix) -> float:
    """log det via the matrix-determinant lemma: sum log D_j + log(1 + c sum 1/D_j)."""
    s = float((1.0 / m.diag).sum())
    return float(np.log(m.diag).sum()) + math.log1p(m.common * s)


def cs_mahalanobis(m: CompoundSymmetryMatrix, v) -> float:
    """v^T M^{-1} v >= 0, in O(d)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (m.d,):
        raise ValueError(f"expected a length-{m.d} vector, got shape {v.shape}")
    w = v / m.diag
    s = float((1.0 / m.diag).sum())
    t = float(w.sum())
    return float(v @ w) - m.common * t * t / (1.0 + m.common * s)


@dataclass(frozen=True)
class GaussianApprox:
    """Gaussian with mean vector and either structured or dense covariance.

    `parametrization` records which coordinates the moments live in:
    "identity" for raw log ratios, or the kind of the design matrix used to
    transform them ("corner").
    """

    mean: np.ndarray
    cov: CompoundSymmetryMatrix | np.ndarray
    parametrization: str = "identity"

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.ndim != 1:
            raise ValueError("mean must be a vector")
        cov = self.cov
        if isinstance(cov, CompoundSymmetryMatrix):
            if cov.d != mean.size:
                raise ValueError("mean and covariance dimensions disagree")
        else:
            cov = np.asarray(cov, dtype=float)
            if cov.shape != (mean.size, mean.size):
                raise ValueError("mean and covariance dimensions disagree")
            if not np.allclose(cov, cov.T, atol=1e-10):
                raise ValueError("dense covariance must be symmetric")
            cov = 0.5 * (cov + cov.T)
            cov.flags.writeable = False
            object.__setattr__(self, "cov", cov)
        mean.flags.writeable = False
        object.__setattr__(self, "mean", mean)

    @property
    def d(self) -> int:
        return self.mean.size

    def cov_dense(self) -> np.ndarray:
        if isinstance(self.cov, CompoundSymmetryMatrix):
            return self.cov.to_dense()
        return np.asarray(self.cov)

    def variances(self) -> np.ndarray:
        if isinstance(self.cov, CompoundSymmetryMatrix):
            return self.cov.full_diagonal()
        return np.diag(self.cov).copy()

    def to_json_dict(self) -> dict:
        if isinstance(self.cov, CompoundSymmetryMatrix):
            cov = {"type": "cs", "diag": self.cov.diag.tolist(), "common": self.cov.common}
        else:
            cov = {"type": "dense", "entries": np.asarray(self.cov).tolist()}
        return {
            "parametrization": self.parametrization,
            "mean": self.mean.tolist(),
            "cov": cov,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_dict(), **kwargs)

    @classmethod
    def from_json_dict(cls, payload: dict) -> "GaussianApprox":
        cov_spec = payload["cov"]
        if cov_spec["type"] == "cs":
            cov = CompoundSymmetryMatrix(np.array(cov_spec["diag"], dtype=float), float(cov_spec["common"]))
        elif cov_spec["type"] == "dense":
            cov = np.array(cov_spec["entries"], dtype=float)
        else:
            raise ValueError(f"unknown covariance type {cov_spec['type']!r}")
        return cls(np.array(payload["mean"], dtype=float), cov, payload["parametrization"])


def dy_update(alpha: DirichletParams, y) -> DirichletParams:
    """Conjugate update: posterior concentration = prior + observed counts."""
    y = np.asarray(y, dtype=float)
    if y.shape != alpha.beta.shape:
        raise ValueError(f"count vector must have length {alpha.beta.size}, got {y.shape}")
    if np.any(y < 0) or not np.all(y == np.floor(y)):
        raise ValueError("counts must be nonnegative integers")
    return DirichletParams(alpha.beta + y)


def ld_moments(beta: DirichletParams) -> tuple[np.ndarray, CompoundSymmetryMatrix]:
    """Exact mean and covariance of the log-ratio coordinates under beta."""
    b = beta.beta
    psi0 = digamma(b[0])
    mean = np.array([digamma(bj) - psi0 for bj in b[1:]])
    diag = np.array([trigamma(bj) for bj in b[1:]])
    return mean, CompoundSymmetryMatrix(diag, trigamma(b[0]))


def optimal_gaussian(beta: DirichletParams) -> GaussianApprox:
    """The KL-closest Gaussian to the log-ratio law with concentration beta."""
    mean, cov = ld_moments(beta)
    return GaussianApprox(mean, cov, "identity")


def transform_gaussian(g: GaussianApprox, design, direction: str = "to_theta_star") -> GaussianApprox:
    """Push a Gaussian through the design-matrix change of coordinates.

    "to_theta_star" maps t -> X^{-1} t (mean X^{-1} m, covariance
    X^{-1} S X^{-T}); "to_theta" maps t* -> X t* (mean X m, covariance
    X S X^T). The result covariance is dense either way. `design` may be a
    DesignMatrix or any non-singular square matrix.
    """
    if isinstance(design, DesignMatrix):
        x = design.entries.astype(float)
        star_tag = design.kind
    else:
        x = np.asarray(design, dtype=float)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise ValueError("transform matrix must be square")
        star_tag = "custom"
    if x.shape[0] != g.d:
        raise ValueError(f"transform matrix is {x.shape[0]}-dimensional, Gaussian is {g.d}")
    cov = g.cov_dense()
    if direction == "to_theta_star":
        mean = np.linalg.solve(x, g.mean)
        new_cov = np.linalg.solve(x, np.linalg.solve(x, cov).T)
        tag = star_tag
    elif direction == "to_theta":
        mean = x @ g.mean
        new_cov = x @ cov @ x.T
        tag = "identity"
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return GaussianApprox(mean, 0.5 * (new_cov + new_cov.T), tag)


def _log_dirichlet_norm(beta: DirichletParams) -> float:
    b = beta.beta
    return log_gamma(beta.total) - sum(log_gamma(bj) for bj in b)


def exact_min_kl(beta: DirichletParams) -> float:
    """KL divergence from the log-ratio law to its optimal Gaussian, in closed form.

    Equals log-normalizer + sum_j b_j (psi(b_j) - psi(B)) + (d/2)(1 + log 2pi)
    + (1/2) log det Sigma*, evaluated without densifying Sigma*.
    """
    b = beta.beta
    d = beta.d
    psi_total = digamma(beta.total)
    cross = float(sum(bj * (digamma(bj) - psi_total) for bj in b))
    _, cov = ld_moments(beta)
    return _log_dirichlet_norm(beta) + cross + 0.5 * d * (1.0 + _LOG_2PI) + 0.5 * cs_logdet(cov)


def kl_to_gaussian(beta: DirichletParams, mu, sigma) -> float:
    """KL divergence from the log-ratio law with concentration beta to N(mu, sigma).

    Closed form: the only terms involving (mu, sigma) are
    (1/2) log det Sigma + (1/2)[tr(Sigma^{-1} Sigma*) + (m* - mu)^T
    Sigma^{-1} (m* - mu)], minimized exactly at the law's own moments.
    """
    mu = np.asarray(mu, dtype=float)
    d = beta.d
    if mu.shape != (d,):
        raise ValueError(f"mean must have length {d}, got shape {mu.shape}")
    if isinstance(sigma, CompoundSymmetryMatrix):
        if sigma.d != d:
            raise ValueError("covariance dimension mismatch")
        cov = sigma.to_dense()
    else:
        cov = np.asarray(sigma, dtype=float)
        if cov.shape != (d, d):
            raise ValueError(f"covariance must be {d}x{d}, got {cov.shape}")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance must be symmetric positive definite") from exc

    mean_star, cov_star = ld_moments(beta)
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    # tr(Sigma^{-1} Sigma*) via triangular solves against the structured factor.
    half = np.linalg.solve(chol, cov_star.to_dense())
    trace = float(np.trace(np.linalg.solve(chol, half.T)))
    resid = np.linalg.solve(chol, mean_star - mu)
    quad = float(resid @ resid)

    psi_total = digamma(beta.total)
    cross = float(sum(bj * (digamma(bj) - psi_total) for bj in beta.beta))
    return (
        _log_dirichlet_norm(beta)
        + cross
        + 0.5 * d * _LOG_2PI
        + 0.5 * logdet
        + 0.5 * (trace + quad)
    )


class KLBound(NamedTuple):
    """Upper bound on the optimal approximation error, with its hypothesis flag."""

    value: float
    valid: bool


def kl_bound(beta: DirichletParams) -> KLBound:
    """(1/2) sum_j 1/b_j + 1/(6B), valid as a bound when every b_j > 1/2.

    The value is computed regardless; `valid` records whether the
    hypothesis under which it actually bounds the minimum KL holds.
    """
    b = beta.beta
    value = 0.5 * float((1.0 / b).sum()) + 1.0 / (6.0 * beta.total)
    return KLBound(value, bool(np.all(b > 0.5)))
