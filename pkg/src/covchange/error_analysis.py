"""Exact error analysis of the genie-aided detector.

Centered and scaled, the summed LLR statistic is a weighted sum of
independent chi-squared variables with 2k degrees of freedom: under
hypothesis i the statistic satisfies

    2 * (S_llr - k * R) ~ sum_m q_{i,m} * chisq_{2k, m},

where the weights q_i are the eigenvalues of the discrimination matrix
sandwiched by the hypothesis-i effective covariance square root.  Missed
detection and false alarm probabilities follow as CDF and survival values of
this generalized chi-squared law at 2 * (threshold - k * R), and the
equal-error threshold is found by bisection on their difference.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg
from scipy.stats import chi2

from .detection import effective_covariance
from .exceptions import (
    CalibrationError,
    ConfigurationError,
    DegenerateHypothesesError,
    NumericalDomainError,
)
from .validation import hermitian_part, hermitian_sqrt, matrices_coincide

# Components whose |weight| falls below this fraction of the largest are
# numerically indistinguishable from zero and are pruned before inversion.
WEIGHT_PRUNE_RTOL = 1e-12

# Monte Carlo fallback, used when the Imhof quadrature reports an error
# estimate above _IMHOF_ABSERR_LIMIT.
MC_FALLBACK_DRAWS = 1_000_000
_MC_FALLBACK_SEED = 0x1C0FFEE
_IMHOF_ABSERR_LIMIT = 1e-7

# Truncation tail target for the Imhof integral (CDF error contribution).
_IMHOF_TAIL = 1e-8

# Budget (in units of the remaining standard deviation) for the CDF shift
# incurred by dropping negligible trailing components before inversion.
_NEGLIGIBLE_BUDGET = 3e-7

# Standardized distance beyond which the CDF saturates far below the 1e-6
# accuracy target (the tails decay exponentially, so 250 sigma is conservative
# by hundreds of orders of magnitude).
_SATURATION_Z = 250.0


@dataclass(frozen=True)
class DiscriminationPair:
    """Quantities separating two effective covariances.

    ``m_matrix`` is the difference of inverse effective covariances,
    ``log_det_ratio`` the difference of their log-determinants, and
    ``weights0`` / ``weights1`` the eigenvalue vectors of the matrix
    sandwiched by each hypothesis' effective covariance square root.
    """

    m_matrix: np.ndarray
    log_det_ratio: float
    weights0: np.ndarray
    weights1: np.ndarray


@dataclass(frozen=True)
class GchiSqSpec:
    """Weighted sum of independent chi-squared components.

    ``weights`` is the pruned weight vector (exact zeros removed);
    ``dof_per_component`` the common even degree of freedom (2k).  An empty
    weight vector marks the degenerate point mass at zero.
    """

    weights: np.ndarray
    dof_per_component: int

    def __post_init__(self):
        dof = self.dof_per_component
        if dof < 2 or dof % 2 != 0:
            raise ConfigurationError("dof_per_component must be even and >= 2")
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if not np.all(np.isfinite(w)):
            raise NumericalDomainError("weights must be finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, weights, dof_per_component: int) -> "GchiSqSpec":
        """Build a spec, pruning weights below ``WEIGHT_PRUNE_RTOL`` of the max."""
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.size:
            keep = np.abs(w) > WEIGHT_PRUNE_RTOL * np.abs(w).max()
            w = np.sort(w[keep])[::-1]
        return cls(weights=w, dof_per_component=dof_per_component)

    @property
    def degenerate(self) -> bool:
        """True when all components pruned away: the point mass at zero."""
        return self.weights.size == 0

    @property
    def mean(self) -> float:
        return float(self.dof_per_component * self.weights.sum())

    @property
    def std(self) -> float:
        return math.sqrt(2.0 * self.dof_per_component * float(np.sum(self.weights**2)))


def discrimination(c0: np.ndarray, c1: np.ndarray, noise_var_eff: float) -> DiscriminationPair:
    """Discrimination matrix, log-det ratio, and per-hypothesis weights."""
    eff0 = effective_covariance(c0, noise_var_eff)
    eff1 = effective_covariance(c1, noise_var_eff)
    m = eff0.shape[0]
    if eff1.shape[0] != m:
        raise ConfigurationError("covariance dimensions do not match")
    inv = []
    logdet = []
    for eff in (eff0, eff1):
        try:
            factor = linalg.cho_factor(eff, lower=True)
        except linalg.LinAlgError as exc:
            raise NumericalDomainError(
                f"effective covariance is not positive definite: {exc}"
            ) from exc
        logdet.append(2.0 * float(np.sum(np.log(np.real(np.diag(factor[0]))))))
        inv.append(linalg.cho_solve(factor, np.eye(m, dtype=np.complex128)))

    m_matrix = hermitian_part(inv[0] - inv[1])
    log_det_ratio = logdet[0] - logdet[1]
    weights = []
    for eff in (eff0, eff1):
        root = hermitian_sqrt(eff)
        weights.append(np.linalg.eigvalsh(hermitian_part(root @ m_matrix @ root)))
    return DiscriminationPair(
        m_matrix=m_matrix,
        log_det_ratio=log_det_ratio,
        weights0=weights[0],
        weights1=weights[1],
    )


def _log_rho(w: np.ndarray, dof: int, u: float) -> float:
    return 0.25 * dof * float(np.sum(np.log1p((w * u) ** 2)))


def _drop_negligible(w: np.ndarray, dof: int) -> np.ndarray:
    """Drop trailing components whose total effect on the CDF is negligible.

    A dropped set D shifts the CDF by at most roughly
    (dof * sum_D |w| + 5 * sqrt(2 dof sum_D w^2)) / sd_remaining, which is
    kept below ``_NEGLIGIBLE_BUDGET``.  Real covariance pairs produce weight
    spectra that decay continuously to machine noise; this removes the noise
    floor without touching distribution-defining components.
    """
    if w.size <= 1:
        return w
    order = np.argsort(np.abs(w))
    sorted_abs = np.abs(w[order])
    cum_abs = np.cumsum(sorted_abs)
    cum_sq = np.cumsum(sorted_abs**2)
    total_sq = cum_sq[-1]
    n_drop = 0
    for i in range(w.size - 1):
        sd_rest = math.sqrt(2.0 * dof * (total_sq - cum_sq[i]))
        shift = dof * cum_abs[i] + 5.0 * math.sqrt(2.0 * dof * cum_sq[i])
        if sd_rest > 0 and shift <= _NEGLIGIBLE_BUDGET * sd_rest:
            n_drop = i + 1
        else:
            break
    if n_drop == 0:
        return w
    keep = np.ones(w.size, dtype=bool)
    keep[order[:n_drop]] = False
    return w[keep]


def _imhof_upper_limit(w: np.ndarray, dof: int) -> float:
    """Truncation point with integral tail below ``pi * _IMHOF_TAIL``.

    Two valid bounds, the smaller wins:
    - product bound: rho(u) >= prod_m |w_m u|^(dof/2) gives a closed form;
    - envelope bound: for U >= 1/max|w|, the tail is at most
      2^(dof/4) * (2/dof) / rho(U), solved for U by monotone bisection.
    """
    target = math.pi * _IMHOF_TAIL
    s = 0.5 * dof * w.size
    log_prod = 0.5 * dof * float(np.sum(np.log(np.abs(w))))
    u_product = math.exp(-(math.log(target) + math.log(s) + log_prod) / s)

    w_max = float(np.abs(w).max())
    log_rho_target = 0.25 * dof * math.log(2.0) + math.log(2.0 / dof) - math.log(target)
    lo = 1.0 / w_max
    if _log_rho(w, dof, lo) >= log_rho_target:
        u_envelope = lo
    else:
        hi = 2.0 * lo
        while _log_rho(w, dof, hi) < log_rho_target:
            hi *= 2.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _log_rho(w, dof, mid) < log_rho_target:
                lo = mid
            else:
                hi = mid
        u_envelope = hi
    return min(u_product, u_envelope)


def _imhof_integral(w: np.ndarray, dof: int, x: float) -> tuple[float, float]:
    """Adaptive quadrature of the Imhof integral; P(Q <= x) = 1/2 - I/pi.

    Returns the integral value and the integrator's absolute error estimate.
    """
    half_dof = 0.5 * dof

    def integrand(u):
        if u <= 0.0:
            return 0.5 * (dof * float(w.sum()) - x)
        theta = half_dof * float(np.sum(np.arctan(w * u))) - 0.5 * x * u
        return math.sin(theta) * math.exp(-_log_rho(w, dof, u)) / u

    upper = _imhof_upper_limit(w, dof)
    # Subdivision budget scales with the oscillation count, theta' ~ -x/2.
    cycles = abs(x) * upper / (4.0 * math.pi)
    limit = int(min(3 * cycles + 100, 20_000))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        with np.errstate(all="ignore"):
            value, abserr = integrate.quad(
                integrand, 0.0, upper, limit=limit, epsabs=1e-9, epsrel=1e-9
            )
    return value, abserr


def gchi2_cdf_monte_carlo(spec: GchiSqSpec, x: float, *, draws: int = MC_FALLBACK_DRAWS) -> float:
    """Monte Carlo CDF estimate with a fixed internal seed (deterministic).

    Fallback route when the Imhof quadrature reports poor convergence; also
    usable as an independent cross-check of :func:`gchi2_cdf`.
    """
    if spec.degenerate:
        return 1.0 if x >= 0.0 else 0.0
    rng = np.random.default_rng(np.random.SeedSequence(_MC_FALLBACK_SEED))
    total = np.zeros(draws)
    for weight in spec.weights:
        total += weight * rng.chisquare(spec.dof_per_component, size=draws)
    return float(np.mean(total <= x))


def _gchi2_both(spec: GchiSqSpec, x: float) -> tuple[float, float]:
    """(CDF, survival) at ``x`` from one inversion pass."""
    if spec.degenerate:
        return (1.0, 0.0) if x >= 0.0 else (0.0, 1.0)
    dof = spec.dof_per_component
    w = _drop_negligible(spec.weights, dof)
    # Exact support endpoints for one-sided weight vectors.
    if np.all(w > 0) and x <= 0.0:
        return 0.0, 1.0
    if np.all(w < 0) and x >= 0.0:
        return 1.0, 0.0
    if w.size == 1:
        # Single component: exact scaled chi-squared.
        weight = float(w[0])
        if weight > 0:
            return float(chi2.cdf(x / weight, dof)), float(chi2.sf(x / weight, dof))
        return float(chi2.sf(x / weight, dof)), float(chi2.cdf(x / weight, dof))
    mean = dof * float(w.sum())
    sd = math.sqrt(2.0 * dof * float(np.sum(w**2)))
    z = (x - mean) / sd
    if z <= -_SATURATION_Z:
        return 0.0, 1.0
    if z >= _SATURATION_Z:
        return 1.0, 0.0
    value, abserr = _imhof_integral(w, dof, x)
    if not math.isfinite(value) or abserr > _IMHOF_ABSERR_LIMIT:
        mc = gchi2_cdf_monte_carlo(GchiSqSpec(weights=w, dof_per_component=dof), x)
        return mc, 1.0 - mc
    cdf = min(max(0.5 - value / math.pi, 0.0), 1.0)
    sf = min(max(0.5 + value / math.pi, 0.0), 1.0)
    return cdf, sf


def gchi2_cdf(spec: GchiSqSpec, x: float) -> float:
    """CDF of the weighted chi-squared sum at ``x``, clamped to [0, 1].

    Numerical inversion of the characteristic function (Imhof integral) with
    absolute accuracy 1e-6; degenerate specs reduce to the step at zero.  If
    the quadrature reports poor convergence the deterministic Monte Carlo
    fallback takes over.
    """
    x = float(x)
    if math.isnan(x):
        raise NumericalDomainError("gchi2_cdf evaluation point is NaN")
    return _gchi2_both(spec, x)[0]


def gchi2_sf(spec: GchiSqSpec, x: float) -> float:
    """Survival function P(Q > x), the complement of :func:`gchi2_cdf`.

    Computed from the same Imhof integral with the opposite sign, so the two
    sum to exactly 1 up to clamping.
    """
    x = float(x)
    if math.isnan(x):
        raise NumericalDomainError("gchi2_sf evaluation point is NaN")
    return _gchi2_both(spec, x)[1]


def _check_nondegenerate(c0: np.ndarray, c1: np.ndarray) -> None:
    if matrices_coincide(np.asarray(c0), np.asarray(c1)):
        raise DegenerateHypothesesError(
            "hypothesized covariances coincide; error probabilities are undefined"
        )


def error_probabilities_from_discrimination(
    disc: DiscriminationPair, k: int, threshold: float
) -> tuple[float, float]:
    """(P_MD, P_FA) at a threshold, given precomputed discrimination data.

    P_MD is the CDF of the hypothesis-1 weighted chi-squared law at
    2 * (threshold - k * R); P_FA is the survival of the hypothesis-0 law at
    the same point, equivalently the CDF of the negated-weight law at the
    negated point.
    """
    if k < 1:
        raise ConfigurationError("block count k must be >= 1")
    x = 2.0 * (threshold - k * disc.log_det_ratio)
    dof = 2 * k
    p_md = gchi2_cdf(GchiSqSpec.from_weights(disc.weights1, dof), x)
    p_fa = gchi2_sf(GchiSqSpec.from_weights(disc.weights0, dof), x)
    return p_md, p_fa


def error_probabilities(
    c0: np.ndarray, c1: np.ndarray, noise_var_eff: float, k: int, threshold: float
) -> tuple[float, float]:
    """Analytic (P_MD, P_FA) of the genie-aided detector at ``threshold``."""
    _check_nondegenerate(c0, c1)
    disc = discrimination(c0, c1, noise_var_eff)
    return error_probabilities_from_discrimination(disc, k, threshold)


def calibrate_equal_error_threshold(
    c0: np.ndarray,
    c1: np.ndarray,
    noise_var_eff: float,
    k: int,
    *,
    tol: float = 1e-4,
) -> float:
    """Threshold at which P_MD and P_FA agree to within ``tol``.

    Bisection on P_MD - P_FA, which is nondecreasing in the threshold.
    """
    _check_nondegenerate(c0, c1)
    disc = discrimination(c0, c1, noise_var_eff)
    center = k * disc.log_det_ratio

    def gap(theta: float) -> float:
        p_md, p_fa = error_probabilities_from_discrimination(disc, k, theta)
        return p_md - p_fa

    g_center = gap(center)
    if abs(g_center) < tol:
        return center

    span_limit = 1e3 * abs(center) + 1e3
    step = 1.0
    lo, hi = center, center
    g_lo, g_hi = g_center, g_center
    while g_lo > -tol or g_hi < tol:
        if g_lo > -tol:
            lo = center - step
            g_lo = gap(lo)
        if g_hi < tol:
            hi = center + step
            g_hi = gap(hi)
        if step > span_limit:
            raise CalibrationError(
                f"no equal-error bracket within +/-{span_limit:.3e} of k*R"
            )
        step *= 2.0

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if abs(g_mid) < tol:
            return mid
        if g_mid > 0:
            hi = mid
        else:
            lo = mid
    raise CalibrationError("equal-error bisection did not converge")
