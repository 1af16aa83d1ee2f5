"""Scikit-learn style wrappers around the covariance estimators and detector.

Data follows the sklearn sample convention: ``X`` has one channel-estimate
vector per row, shape (n_blocks, n_antennas), complex-valued.  The wrappers
expose ``get_params`` / ``set_params`` and compose with sklearn tooling such
as ``clone``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .channel import ObservationSet
from .detection import decide, llr_statistic, sample_covariance
from .estimation import (
    MlEstimatorConfig,
    ml_covariance,
    shrinkage_covariance,
)
from .exceptions import ConfigurationError
from .validation import validate_covariance


def _validate_blocks(x, *, min_blocks: int = 1) -> np.ndarray:
    """Coerce block data to a complex (n_blocks, n_antennas) array."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ConfigurationError(f"block data must be 2-D, got shape {x.shape}")
    if x.shape[0] < min_blocks:
        raise ConfigurationError(f"need at least {min_blocks} blocks, got {x.shape[0]}")
    return np.ascontiguousarray(x, dtype=np.complex128)


class ConditionConstrainedCovariance(BaseEstimator):
    """Covariance estimator with a condition-number box on the spectrum.

    Fits the constrained ML estimate from noisy channel-estimate rows: the
    sample eigenvectors are kept and the spectrum is clipped into
    [beta, kappa * beta] after removing the estimation-noise floor.

    Parameters
    ----------
    kappa:
        Condition bound (> 1).
    beta:
        Eigenvalue lower bound; None selects the data-driven default.
    noise_var_eff:
        Variance of the estimation noise present in the rows of ``X``.
    """

    def __init__(self, kappa: float = 4.0, beta: float | None = None, noise_var_eff: float = 0.0):
        self.kappa = kappa
        self.beta = beta
        self.noise_var_eff = noise_var_eff

    def fit(self, X, y=None):
        x = _validate_blocks(X)
        config = MlEstimatorConfig(kappa=self.kappa, beta=self.beta)
        sample = sample_covariance(x.T)
        self.covariance_ = ml_covariance(sample, self.noise_var_eff, config)
        self.beta_ = config.resolve_beta(sample, self.noise_var_eff)
        self.eigenvalues_ = np.linalg.eigvalsh(self.covariance_)[::-1]
        self.n_features_in_ = x.shape[1]
        return self


class ShrinkageCovariance(BaseEstimator):
    """Shrinkage covariance estimator with a data-driven weight.

    Blends the sample covariance of the rows with a scaled identity and
    removes the estimation-noise floor; exposes the weight as ``shrinkage_``.
    """

    def __init__(self, noise_var_eff: float = 0.0):
        self.noise_var_eff = noise_var_eff

    def fit(self, X, y=None):
        x = _validate_blocks(X, min_blocks=2)
        sample = sample_covariance(x.T)
        self.covariance_, self.shrinkage_ = shrinkage_covariance(
            sample, x.shape[0], self.noise_var_eff
        )
        self.n_features_in_ = x.shape[1]
        return self


class CovarianceChangeDetector(BaseEstimator):
    """LLR test for an abrupt change of the channel covariance matrix.

    ``fit`` learns the reference (pre-change) covariance, either from the
    ``reference_covariance`` parameter or from no-change training blocks.
    ``decision_function`` returns the summed LLR of a detection window
    against the reference, with the post-change covariance taken from
    ``changed_covariance`` when given (genie detector) or estimated from the
    window by ``method``.  ``predict`` thresholds the statistic: 1 declares
    a change.

    Parameters
    ----------
    reference_covariance:
        Known pre-change channel covariance; None to learn it in ``fit``.
    changed_covariance:
        Known post-change covariance (genie variant); None to estimate.
    method:
        Estimation method for the unknown post-change covariance,
        'ml' or 'shrinkage'.
    threshold:
        Decision threshold on the LLR statistic.
    noise_var_eff:
        Estimation-noise variance in the data rows.
    kappa, beta:
        Constraint box of the 'ml' method.
    """

    def __init__(
        self,
        reference_covariance=None,
        changed_covariance=None,
        method: str = "ml",
        threshold: float = 0.0,
        noise_var_eff: float = 0.0,
        kappa: float = 4.0,
        beta: float | None = None,
    ):
        self.reference_covariance = reference_covariance
        self.changed_covariance = changed_covariance
        self.method = method
        self.threshold = threshold
        self.noise_var_eff = noise_var_eff
        self.kappa = kappa
        self.beta = beta

    def fit(self, X=None, y=None):
        if self.method not in ("ml", "shrinkage"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.reference_covariance is not None:
            self.reference_covariance_ = validate_covariance(
                self.reference_covariance, name="reference covariance"
            )
        elif X is not None:
            x = _validate_blocks(X)
            config = MlEstimatorConfig(kappa=self.kappa, beta=self.beta)
            self.reference_covariance_ = ml_covariance(
                sample_covariance(x.T), self.noise_var_eff, config
            )
        else:
            raise ConfigurationError(
                "provide reference_covariance or training blocks X to fit"
            )
        self.n_features_in_ = self.reference_covariance_.shape[0]
        return self

    def _check_fitted(self):
        if not hasattr(self, "reference_covariance_"):
            raise ConfigurationError("detector is not fitted; call fit first")

    def decision_function(self, X) -> float:
        """Summed LLR of the window against the fitted reference."""
        self._check_fitted()
        x = _validate_blocks(X)
        if x.shape[1] != self.n_features_in_:
            raise ConfigurationError(
                f"window has {x.shape[1]} antennas, detector fitted with {self.n_features_in_}"
            )
        obs = ObservationSet(estimates=x.T, noise_var_eff=self.noise_var_eff)
        if self.changed_covariance is not None:
            changed = validate_covariance(self.changed_covariance, name="changed covariance")
        else:
            from .estimation import estimate_covariance

            changed = estimate_covariance(
                obs, self.method, MlEstimatorConfig(kappa=self.kappa, beta=self.beta)
            )
        stat = llr_statistic(
            sample_covariance(obs), obs.k, self.reference_covariance_, changed, self.noise_var_eff
        )
        return stat.value

    def predict(self, X) -> int:
        """1 when a covariance change is declared, else 0."""
        statistic = self.decision_function(X)
        return int(decide(statistic, self.threshold).change_detected)
