"""Multi-antenna channel simulation: one-ring covariances, pilots, ML estimates.

A base station with ``m`` antennas serves a single-antenna user over a block
Rayleigh-fading channel h ~ CN(0, C).  Pilot observations in each coherence
block yield the maximum-likelihood channel estimate, which is the channel plus
white estimation noise of per-antenna variance sigma2 / (rho * t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import dft

from .exceptions import ConfigurationError, ModelFidelityError
from .validation import (
    as_square_matrix,
    check_hermitian,
    check_psd,
    hermitian_part,
    psd_factor,
)

# Relative threshold below which negative one-ring eigenvalues are repaired by
# flooring; anything worse is treated as a non-physical model matrix.
ONE_RING_PSD_REPAIR_RTOL = 1e-6


@dataclass(frozen=True)
class SystemParams:
    """Link-level simulation parameters.

    Parameters
    ----------
    m:
        Number of base-station antennas.
    t:
        Pilot sequence length; downlink estimation requires t >= m.
    k:
        Number of coherence blocks used for change detection.
    n:
        Blocks per frame (>= k).  Defaults to k when omitted.
    rho:
        Transmit power (linear scale).
    sigma2:
        Noise variance (linear scale).  Zero is allowed for noiseless checks.
    """

    m: int
    t: int
    k: int
    rho: float = 1.0
    sigma2: float = 1.0
    n: int | None = None

    def __post_init__(self):
        if self.m < 1 or self.t < 1 or self.k < 1:
            raise ConfigurationError("m, t and k must be positive integers")
        if self.n is None:
            object.__setattr__(self, "n", self.k)
        if self.n < self.k:
            raise ConfigurationError(f"blocks per frame n={self.n} must be >= k={self.k}")
        if self.rho <= 0:
            raise ConfigurationError("transmit power rho must be > 0")
        if self.sigma2 < 0:
            raise ConfigurationError("noise variance sigma2 must be >= 0")

    @property
    def e0(self) -> float:
        """Pilot energy rho * t."""
        return self.rho * self.t

    @property
    def noise_var_eff(self) -> float:
        """Variance of the ML channel-estimate noise per antenna, sigma2 / e0."""
        return self.sigma2 / self.e0

    @property
    def snr_db(self) -> float:
        """10 log10(rho / sigma2)."""
        if self.sigma2 == 0:
            return math.inf
        return 10.0 * math.log10(self.rho / self.sigma2)

    def with_k(self, k: int) -> "SystemParams":
        """Copy with a different detection-block count (frame length follows)."""
        return replace(self, k=k, n=max(self.n, k))


@dataclass(frozen=True)
class OneRingParams:
    """Geometry of the one-ring scattering model.

    The scatterers sit on a ring around the user; the covariance entry for an
    antenna pair is an average over the ring angle of a phase term driven by
    the angle of departure ``aod_rad`` and the angle spread ``spread_rad``.
    Antenna m1 and m2 are ``spacing_factor * (m1 - m2)`` wavelengths apart.
    """

    aod_rad: float
    spread_rad: float
    wavelength_m: float = 3.76e-3
    spacing_factor: float = 2.0
    quadrature_points: int = 2048

    def __post_init__(self):
        if self.spread_rad < 0:
            raise ConfigurationError("angle spread must be >= 0")
        if self.wavelength_m <= 0:
            raise ConfigurationError("wavelength must be > 0")
        if self.quadrature_points < 64:
            raise ConfigurationError("quadrature_points must be >= 64")

    def with_aod_offset(self, delta_rad: float) -> "OneRingParams":
        """Copy with the angle of departure shifted by ``delta_rad``."""
        return replace(self, aod_rad=self.aod_rad + delta_rad)

    def pair_distance_m(self, m1: int, m2: int) -> float:
        """Relative antenna distance D for the (m1, m2) pair, in meters."""
        return self.spacing_factor * (m1 - m2) * self.wavelength_m


@dataclass(frozen=True)
class PilotSet:
    """Uplink pilot vector x (length t) and downlink pilot matrix X (t x m).

    Normalization: x^H x = t and X^H X = t * I.
    """

    uplink_pilot: np.ndarray
    downlink_pilot: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.uplink_pilot, dtype=np.complex128)
        big_x = np.asarray(self.downlink_pilot, dtype=np.complex128)
        if x.ndim != 1 or big_x.ndim != 2 or big_x.shape[0] != x.shape[0]:
            raise ConfigurationError("pilot shapes inconsistent: x is (t,), X is (t, m)")
        t = x.shape[0]
        if abs(np.vdot(x, x).real - t) > 1e-10 * t:
            raise ConfigurationError("uplink pilot must satisfy x^H x = t")
        gram = big_x.conj().T @ big_x
        if np.abs(gram - t * np.eye(big_x.shape[1])).max() > 1e-10 * t:
            raise ConfigurationError("downlink pilot must satisfy X^H X = t I")
        object.__setattr__(self, "uplink_pilot", x)
        object.__setattr__(self, "downlink_pilot", big_x)

    @property
    def t(self) -> int:
        return self.uplink_pilot.shape[0]

    @property
    def m(self) -> int:
        return self.downlink_pilot.shape[1]


@dataclass(frozen=True)
class ObservationSet:
    """Per-block ML channel estimates for one detection window.

    ``estimates`` holds the estimate vectors as columns (shape m x k);
    ``noise_var_eff`` is the per-antenna variance of the estimation noise.
    """

    estimates: np.ndarray
    noise_var_eff: float

    def __post_init__(self):
        est = np.asarray(self.estimates, dtype=np.complex128)
        if est.ndim != 2 or est.shape[1] < 1:
            raise ConfigurationError("estimates must be an (m, k) matrix with k >= 1")
        if self.noise_var_eff < 0:
            raise ConfigurationError("noise_var_eff must be >= 0")
        object.__setattr__(self, "estimates", est)

    @property
    def m(self) -> int:
        return self.estimates.shape[0]

    @property
    def k(self) -> int:
        return self.estimates.shape[1]


def _one_ring_lag_integrals(params: OneRingParams, lags: np.ndarray) -> np.ndarray:
    """Quadrature of the ring integral for each antenna lag m1 - m2.

    Uses the composite trapezoid rule on the periodic interval [0, 2*pi),
    which converges spectrally for this smooth periodic integrand.
    """
    npts = params.quadrature_points
    theta = np.linspace(0.0, 2.0 * np.pi, npts, endpoint=False)
    spread = params.spread_rad
    # Ring-angle modulation of the effective departure angle.
    angle_mod = 1.0 - spread**2 / 4.0 + spread**2 * np.cos(2.0 * theta) / 4.0
    dist = params.spacing_factor * lags[:, None] * params.wavelength_m
    phase = (
        -1j
        * (2.0 * np.pi / params.wavelength_m)
        * dist
        * np.sin(params.aod_rad)
        * angle_mod[None, :]
    )
    damping = spread * dist * np.cos(params.aod_rad) * np.sin(theta)[None, :]
    return np.exp(phase + damping).mean(axis=1)


def one_ring_covariance(params: OneRingParams, dim: int) -> np.ndarray:
    """Synthesize a ``dim x dim`` one-ring channel covariance matrix.

    The raw quadrature output is Hermitian-symmetrized and projected onto the
    PSD cone by flooring negative eigenvalues at zero.  The matrix has unit
    diagonal before projection.

    Raises
    ------
    ModelFidelityError
        If the pre-projection minimum eigenvalue is below
        ``-ONE_RING_PSD_REPAIR_RTOL`` times the maximum eigenvalue, meaning
        the parameters produce a non-physical matrix.
    """
    if dim < 1:
        raise ConfigurationError("covariance dimension must be >= 1")
    lags = np.arange(-(dim - 1), dim)
    values = _one_ring_lag_integrals(params, lags)
    idx = np.subtract.outer(np.arange(dim), np.arange(dim)) + (dim - 1)
    raw = hermitian_part(values[idx])

    w, v = np.linalg.eigh(raw)
    w_max = max(w[-1], 1e-300)
    if w[0] < -ONE_RING_PSD_REPAIR_RTOL * w_max:
        raise ModelFidelityError(
            f"one-ring quadrature produced min eigenvalue {w[0]:.3e} "
            f"({w[0] / w_max:.3e} relative); parameters are non-physical"
        )
    if w[0] >= 0.0:
        return raw
    return (v * np.maximum(w, 0.0)) @ v.conj().T


def make_dft_pilots(t: int, m: int) -> PilotSet:
    """Pilots from the first ``m`` columns of the ``t x t`` DFT matrix.

    The unscaled DFT matrix already satisfies X^H X = t * I; the uplink pilot
    is its first column (all ones), with x^H x = t.
    """
    if t < m:
        raise ConfigurationError(f"downlink pilots need t >= m, got t={t}, m={m}")
    if m < 1:
        raise ConfigurationError("antenna count must be >= 1")
    full = dft(t)
    return PilotSet(uplink_pilot=full[:, 0].copy(), downlink_pilot=full[:, :m].copy())


def _spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """Derive ``n`` independent substreams from a seed (splittable, reproducible)."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n)]


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """I.i.d. CN(0, 1) samples: unit-variance circularly-symmetric Gaussians."""
    return math.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channels(cov: np.ndarray, k: int, seed) -> np.ndarray:
    """Draw ``k`` i.i.d. channel vectors h ~ CN(0, cov) as columns (m x k).

    Samples are L z with L a Hermitian PSD factor of ``cov`` (rank deficiency
    allowed) and z i.i.d. CN(0, 1); deterministic for a fixed seed.
    """
    cov = as_square_matrix(cov, name="channel covariance")
    check_hermitian(cov, name="channel covariance")
    check_psd(cov, name="channel covariance")
    if k < 1:
        raise ConfigurationError("block count k must be >= 1")
    (rng,) = _spawn_rngs(seed, 1)
    factor = psd_factor(cov)
    return factor @ _complex_normal(rng, (cov.shape[0], k))


def observe_and_estimate(
    cov_true: np.ndarray,
    params: SystemParams,
    pilots: PilotSet,
    link: str,
    seed,
) -> ObservationSet:
    """Synthesize pilot observations and form per-block ML channel estimates.

    Uplink blocks receive Y = sqrt(rho) h x^H + N and estimate
    h_est = Y x / (sqrt(rho) t); downlink blocks receive
    y = sqrt(rho) X h + n and estimate h_est = X^H y / (sqrt(rho) t).
    Both reduce to h plus CN(0, sigma2/e0 I) noise and are statistically
    identical.  The channel draw depends only on the seed (not the link), so
    uplink/downlink runs with equal seeds share channels.
    """
    cov_true = as_square_matrix(cov_true, name="true covariance")
    check_hermitian(cov_true, name="true covariance")
    check_psd(cov_true, name="true covariance")
    if link not in ("uplink", "downlink"):
        raise ConfigurationError(f"link must be 'uplink' or 'downlink', got {link!r}")
    if cov_true.shape[0] != params.m:
        raise ConfigurationError(
            f"covariance dimension {cov_true.shape[0]} does not match m={params.m}"
        )
    if pilots.t != params.t or pilots.m < params.m:
        raise ConfigurationError("pilot dimensions do not match system parameters")
    if link == "downlink" and params.t < params.m:
        raise ConfigurationError("downlink estimation requires t >= m")

    rng_channel, rng_up, rng_dl = _spawn_rngs(seed, 3)
    m, t, k = params.m, params.t, params.k
    channels = psd_factor(cov_true) @ _complex_normal(rng_channel, (m, k))
    sqrt_rho = math.sqrt(params.rho)
    sigma = math.sqrt(params.sigma2)

    if link == "uplink":
        x = pilots.uplink_pilot
        noise = sigma * _complex_normal(rng_up, (m, t, k))
        received = sqrt_rho * np.einsum("mk,t->mtk", channels, x.conj()) + noise
        estimates = np.einsum("mtk,t->mk", received, x) / (sqrt_rho * t)
    else:
        big_x = pilots.downlink_pilot[:, :m]
        noise = sigma * _complex_normal(rng_dl, (t, k))
        received = sqrt_rho * (big_x @ channels) + noise
        estimates = big_x.conj().T @ received / (sqrt_rho * t)

    return ObservationSet(estimates=estimates, noise_var_eff=params.noise_var_eff)


def sample_observations(cov_true: np.ndarray, params: SystemParams, seed, k: int | None = None) -> ObservationSet:
    """Draw ML channel estimates directly from their unified model.

    Equivalent in distribution to :func:`observe_and_estimate` for either
    link: h_est = h + noise with noise ~ CN(0, sigma2/e0 I).  This skips the
    pilot synthesis and is the fast path for Monte Carlo experiments.
    """
    cov_true = as_square_matrix(cov_true, name="true covariance")
    check_hermitian(cov_true, name="true covariance")
    check_psd(cov_true, name="true covariance")
    k = params.k if k is None else k
    if k < 1:
        raise ConfigurationError("block count k must be >= 1")
    rng_channel, rng_noise = _spawn_rngs(seed, 2)
    m = cov_true.shape[0]
    channels = psd_factor(cov_true) @ _complex_normal(rng_channel, (m, k))
    noise_var = params.noise_var_eff
    estimates = channels + math.sqrt(noise_var) * _complex_normal(rng_noise, (m, k))
    return ObservationSet(estimates=estimates, noise_var_eff=noise_var)
