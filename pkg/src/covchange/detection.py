"""Log-likelihood-ratio change statistic and threshold decision.

Given per-block channel estimates with sample covariance S and two
hypothesized channel covariances C0 (pre-change) and C1 (post-change), the
detector compares the summed LLR

    S_llr = ll(S, C1) - ll(S, C0),
    ll(S, C) = -k * (log det(C + n I) + tr((C + n I)^-1 S)),

against a threshold; H1 (change) is declared on strict exceedance.  The
additive constant -k m log(pi) of the complex-Gaussian log-density is dropped
everywhere since it cancels in every LLR difference.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .channel import ObservationSet
from .exceptions import (
    ConfigurationError,
    DegenerateHypothesesWarning,
    NumericalDomainError,
)
from .validation import as_square_matrix, hermitian_part, matrices_coincide

HYPOTHESIS_NULL = "H0"
HYPOTHESIS_CHANGE = "H1"


@dataclass(frozen=True)
class LlrStatistic:
    """Summed LLR over a detection window.

    ``per_block`` carries the k individual block LLRs when the statistic was
    computed from raw estimates; it is None when only the sample covariance
    was available.  When present, the entries sum to ``value``.
    """

    value: float
    k: int
    per_block: np.ndarray | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError("block count k must be >= 1")
        if self.per_block is not None:
            pb = np.asarray(self.per_block, dtype=np.float64)
            if pb.shape != (self.k,):
                raise ConfigurationError("per_block must have length k")
            total = float(pb.sum())
            scale = max(abs(self.value), abs(total), 1e-30)
            if abs(total - self.value) > 1e-9 * scale:
                raise NumericalDomainError(
                    "per-block LLRs do not sum to the statistic value"
                )
            object.__setattr__(self, "per_block", pb)


@dataclass(frozen=True)
class Decision:
    """Outcome of thresholding the LLR statistic.

    ``hypothesis`` is H1 iff statistic > threshold (ties go to H0).
    ``degenerate`` flags tests whose hypothesized covariances coincided.
    """

    hypothesis: str
    statistic: float
    threshold: float
    degenerate: bool = False

    @property
    def change_detected(self) -> bool:
        return self.hypothesis == HYPOTHESIS_CHANGE


def sample_covariance(obs) -> np.ndarray:
    """Sample covariance (1/k) H H^H of the estimate columns.

    Accepts an :class:`ObservationSet` or a raw (m, k) estimate matrix.
    Hermitian PSD by construction, rank at most min(m, k).
    """
    est = obs.estimates if isinstance(obs, ObservationSet) else np.asarray(obs, dtype=np.complex128)
    if est.ndim != 2 or est.shape[1] < 1:
        raise ConfigurationError("estimates must be an (m, k) matrix with k >= 1")
    return hermitian_part(est @ est.conj().T / est.shape[1])


def effective_covariance(cov: np.ndarray, noise_var_eff: float) -> np.ndarray:
    """Covariance of the noisy ML estimate: cov + noise_var_eff * I."""
    cov = as_square_matrix(cov, name="covariance")
    if noise_var_eff < 0:
        raise ConfigurationError("noise_var_eff must be >= 0")
    return cov + noise_var_eff * np.eye(cov.shape[0])


def _cho_logdet_and_solve(eff: np.ndarray):
    """Cholesky factor of an effective covariance: (log det, factor)."""
    try:
        factor = linalg.cho_factor(eff, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalDomainError(f"effective covariance is not positive definite: {exc}") from exc
    logdet = 2.0 * float(np.sum(np.log(np.real(np.diag(factor[0])))))
    return logdet, factor


def log_likelihood_sum(sample_cov: np.ndarray, k: int, cov: np.ndarray, noise_var_eff: float) -> float:
    """Summed complex-Gaussian log-likelihood of k blocks, constants dropped.

    Returns -k * (log det(cov + n I) + tr((cov + n I)^-1 sample_cov)).
    """
    if k < 1:
        raise ConfigurationError("block count k must be >= 1")
    sample_cov = as_square_matrix(sample_cov, name="sample covariance")
    eff = effective_covariance(cov, noise_var_eff)
    logdet, factor = _cho_logdet_and_solve(eff)
    trace_term = float(np.real(np.trace(linalg.cho_solve(factor, sample_cov))))
    return -k * (logdet + trace_term)


def per_block_llrs(estimates: np.ndarray, c0: np.ndarray, c1: np.ndarray, noise_var_eff: float) -> np.ndarray:
    """Block-wise LLRs, log p(h_est | C1) - log p(h_est | C0), length k."""
    est = np.asarray(estimates, dtype=np.complex128)
    if est.ndim != 2:
        raise ConfigurationError("estimates must be an (m, k) matrix")
    logdets = []
    quads = []
    for cov in (c0, c1):
        eff = effective_covariance(cov, noise_var_eff)
        logdet, factor = _cho_logdet_and_solve(eff)
        solved = linalg.cho_solve(factor, est)
        logdets.append(logdet)
        quads.append(np.real(np.sum(est.conj() * solved, axis=0)))
    return (logdets[0] - logdets[1]) + (quads[0] - quads[1])


def _warn_if_degenerate(c0: np.ndarray, c1: np.ndarray) -> bool:
    if matrices_coincide(np.asarray(c0), np.asarray(c1)):
        warnings.warn(
            "hypothesized covariances coincide; the LLR statistic is identically 0",
            DegenerateHypothesesWarning,
            stacklevel=3,
        )
        return True
    return False


def llr_statistic(
    sample_cov: np.ndarray,
    k: int,
    c0: np.ndarray,
    c1: np.ndarray,
    noise_var_eff: float,
) -> LlrStatistic:
    """Summed LLR statistic from the sample covariance of k blocks."""
    _warn_if_degenerate(c0, c1)
    value = log_likelihood_sum(sample_cov, k, c1, noise_var_eff) - log_likelihood_sum(
        sample_cov, k, c0, noise_var_eff
    )
    return LlrStatistic(value=value, k=k)


def llr_statistic_from_observations(
    obs: ObservationSet, c0: np.ndarray, c1: np.ndarray
) -> LlrStatistic:
    """Summed LLR statistic with the per-block breakdown attached."""
    _warn_if_degenerate(c0, c1)
    blocks = per_block_llrs(obs.estimates, c0, c1, obs.noise_var_eff)
    return LlrStatistic(value=float(blocks.sum()), k=obs.k, per_block=blocks)


def decide(statistic: float, threshold: float) -> Decision:
    """Threshold test: H1 iff statistic > threshold, ties to H0."""
    statistic = float(statistic)
    threshold = float(threshold)
    if math.isnan(statistic) or math.isinf(statistic):
        raise ValueError(f"statistic must be finite, got {statistic}")
    if math.isnan(threshold) or math.isinf(threshold):
        raise ValueError(f"threshold must be finite, got {threshold}")
    hyp = HYPOTHESIS_CHANGE if statistic > threshold else HYPOTHESIS_NULL
    return Decision(hypothesis=hyp, statistic=statistic, threshold=threshold)
