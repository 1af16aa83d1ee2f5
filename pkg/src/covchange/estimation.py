"""Post-change covariance estimators and the plug-in change detector.

Two estimators of the unknown channel covariance from k blocks of noisy ML
channel estimates:

- the condition-number-constrained ML estimator, whose closed form clips the
  inverse sample eigenvalues into the box implied by beta I <= C <= kappa
  beta I and keeps the sample eigenvectors;
- a shrinkage benchmark blending the sample covariance with a scaled
  identity using a data-driven weight.

Both subtract the estimation-noise floor noise_var_eff * I and feed the same
LLR detector as the genie-aided case.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ObservationSet
from .detection import (
    Decision,
    decide,
    effective_covariance,
    llr_statistic,
    sample_covariance,
)
from .exceptions import (
    ConfigurationError,
    DegenerateHypothesesWarning,
    NumericalDomainError,
)
from .validation import (
    as_square_matrix,
    check_hermitian,
    check_psd,
    hermitian_part,
    matrices_coincide,
)

# Floor for the auto-selected eigenvalue lower bound.
BETA_FLOOR = 1e-6


@dataclass(frozen=True)
class MlEstimatorConfig:
    """Constraint box of the condition-number-constrained ML estimator.

    ``beta`` is the eigenvalue lower bound and ``kappa * beta`` the upper
    bound.  ``beta=None`` selects the data-driven default at fit time:
    beta = max((tr(S)/m - noise_var_eff) / sqrt(kappa), 1e-6), which centers
    the feasible interval geometrically on the average signal eigenvalue.
    """

    kappa: float = 4.0
    beta: float | None = None

    def __post_init__(self):
        if self.kappa <= 1:
            raise ConfigurationError("condition bound kappa must be > 1")
        if self.beta is not None and self.beta <= 0:
            raise ConfigurationError("eigenvalue lower bound beta must be > 0")

    def resolve_beta(self, sample_cov: np.ndarray, noise_var_eff: float) -> float:
        """The effective beta for a given sample covariance."""
        if self.beta is not None:
            return self.beta
        m = sample_cov.shape[0]
        avg_signal = float(np.real(np.trace(sample_cov))) / m - noise_var_eff
        return max(avg_signal / np.sqrt(self.kappa), BETA_FLOOR)


@dataclass(frozen=True)
class EigenSystem:
    """Eigendecomposition with eigenvalues sorted descending."""

    vectors: np.ndarray
    values: np.ndarray

    @classmethod
    def from_hermitian(cls, a: np.ndarray) -> "EigenSystem":
        a = as_square_matrix(a, name="matrix")
        check_hermitian(a, name="matrix")
        w, v = np.linalg.eigh(hermitian_part(a))
        order = np.argsort(w)[::-1]
        return cls(vectors=np.ascontiguousarray(v[:, order]), values=w[order])

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def clip_inverse_eigenvalues(
    sample_eigenvalues: np.ndarray, noise_var_eff: float, beta: float, kappa: float
) -> np.ndarray:
    """Optimal inverse effective-covariance eigenvalues for the box constraint.

    Per eigenvalue: min(max(1/(kappa*beta + n), 1/lambda_s), 1/(beta + n)),
    with 1/0 treated as +inf so zero sample eigenvalues clip to the upper
    bound (estimate beta).
    """
    lam = np.asarray(sample_eigenvalues, dtype=np.float64)
    lower = 1.0 / (kappa * beta + noise_var_eff)
    upper = 1.0 / (beta + noise_var_eff)
    with np.errstate(divide="ignore"):
        inv = np.where(lam > 0.0, 1.0 / np.where(lam > 0.0, lam, 1.0), np.inf)
    return np.minimum(np.maximum(lower, inv), upper)


def ml_covariance(
    sample_cov: np.ndarray,
    noise_var_eff: float,
    config: MlEstimatorConfig | None = None,
) -> np.ndarray:
    """Condition-number-constrained ML covariance estimate.

    Keeps the sample eigenvectors and clips each inverse sample eigenvalue
    into [1/(kappa*beta + n), 1/(beta + n)] before inverting back and
    removing the noise floor.  The output spectrum lies in [beta, kappa*beta].
    """
    config = config or MlEstimatorConfig()
    sample_cov = as_square_matrix(sample_cov, name="sample covariance")
    check_hermitian(sample_cov, name="sample covariance")
    check_psd(sample_cov, name="sample covariance")
    if noise_var_eff < 0:
        raise ConfigurationError("noise_var_eff must be >= 0")
    beta = config.resolve_beta(sample_cov, noise_var_eff)
    eig = EigenSystem.from_hermitian(sample_cov)
    inv_eff = clip_inverse_eigenvalues(eig.values, noise_var_eff, beta, config.kappa)
    estimate = (eig.vectors * (1.0 / inv_eff - noise_var_eff)) @ eig.vectors.conj().T
    return hermitian_part(estimate)


def ml_objective(sample_cov: np.ndarray, cov: np.ndarray, noise_var_eff: float) -> float:
    """Constrained-ML minimand: log det(C + n I) + tr((C + n I)^-1 S).

    Minimizing this over the constraint box maximizes the summed Gaussian
    log-likelihood of the blocks behind ``sample_cov``.
    """
    sample_cov = as_square_matrix(sample_cov, name="sample covariance")
    eff = effective_covariance(cov, noise_var_eff)
    sign, logdet = np.linalg.slogdet(eff)
    if sign.real <= 0:
        raise NumericalDomainError("effective covariance must be positive definite")
    try:
        solved = np.linalg.solve(eff, sample_cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalDomainError(f"effective covariance is singular: {exc}") from exc
    return float(logdet) + float(np.real(np.trace(solved)))


def shrinkage_weight(sample_cov: np.ndarray, k: int) -> float:
    """Data-driven shrinkage weight toward the scaled identity, in [0, 1].

    Computed from tr(S^2) and tr(S)^2 of the sample covariance over k blocks;
    saturates at 1 when the denominator vanishes (S proportional to I).
    """
    if k < 2:
        raise ConfigurationError("shrinkage weight requires k >= 2 blocks")
    m = sample_cov.shape[0]
    tr_s = float(np.real(np.trace(sample_cov)))
    tr_s2 = float(np.real(np.trace(sample_cov @ sample_cov)))
    numerator = -tr_s2 / m + tr_s**2
    denominator = (k - 1) / m * (tr_s2 - tr_s**2 / m)
    if denominator <= 1e-12 * tr_s**2:
        return 1.0
    return float(min(max(numerator / denominator, 0.0), 1.0))


def shrinkage_covariance(
    sample_cov: np.ndarray, k: int, noise_var_eff: float, *, rho: float | None = None
) -> tuple[np.ndarray, float]:
    """Shrinkage covariance estimate and the weight used.

    Blends the sample covariance with tr(S)/m * I, subtracts the noise
    floor, and floors negative eigenvalues at zero so the effective
    covariance stays at least noise_var_eff * I.  ``rho`` pins the blend
    weight; the default is the data-driven choice of
    :func:`shrinkage_weight`.
    """
    sample_cov = as_square_matrix(sample_cov, name="sample covariance")
    check_hermitian(sample_cov, name="sample covariance")
    if noise_var_eff < 0:
        raise ConfigurationError("noise_var_eff must be >= 0")
    if rho is None:
        rho = shrinkage_weight(sample_cov, k)
    elif not 0.0 <= rho <= 1.0:
        raise ConfigurationError("rho must lie in [0, 1]")
    m = sample_cov.shape[0]
    mu = float(np.real(np.trace(sample_cov))) / m
    blended = (1.0 - rho) * sample_cov + rho * mu * np.eye(m)
    shifted = blended - noise_var_eff * np.eye(m)
    w, v = np.linalg.eigh(hermitian_part(shifted))
    return (v * np.maximum(w, 0.0)) @ v.conj().T, rho


def _estimate_from_sample(
    s: np.ndarray,
    k: int,
    noise_var_eff: float,
    method: str,
    config: MlEstimatorConfig | None,
) -> np.ndarray:
    if method == "ml":
        return ml_covariance(s, noise_var_eff, config)
    if method == "shrinkage":
        estimate, _ = shrinkage_covariance(s, k, noise_var_eff)
        return estimate
    raise ConfigurationError(f"unknown estimation method {method!r}")


def estimate_covariance(
    obs: ObservationSet,
    method: str,
    config: MlEstimatorConfig | None = None,
) -> np.ndarray:
    """Estimate the post-change covariance from one observation window."""
    return _estimate_from_sample(
        sample_covariance(obs), obs.k, obs.noise_var_eff, method, config
    )


def detect_unknown(
    obs: ObservationSet,
    c0: np.ndarray,
    method: str = "ml",
    config: MlEstimatorConfig | None = None,
    threshold: float = 0.0,
) -> Decision:
    """Plug-in change detector with the post-change covariance estimated.

    Estimates the current covariance from the observations by the chosen
    method, evaluates the LLR of the estimate against the reference ``c0``,
    and thresholds.  If the estimate coincides with the reference the
    statistic is identically zero and the decision is H0 (flagged
    degenerate).
    """
    c0 = as_square_matrix(c0, name="reference covariance")
    if c0.shape[0] != obs.m:
        raise ConfigurationError("reference covariance does not match observations")
    s = sample_covariance(obs)
    estimate = _estimate_from_sample(s, obs.k, obs.noise_var_eff, method, config)
    if matrices_coincide(estimate, c0):
        warnings.warn(
            "estimated covariance coincides with the reference; statistic is 0",
            DegenerateHypothesesWarning,
            stacklevel=2,
        )
        return Decision(
            hypothesis="H0", statistic=0.0, threshold=float(threshold), degenerate=True
        )
    stat = llr_statistic(s, obs.k, c0, estimate, obs.noise_var_eff)
    return decide(stat.value, threshold)
