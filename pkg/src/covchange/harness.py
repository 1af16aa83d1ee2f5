"""Reproducible Monte Carlo experiments for the change detectors.

Drives genie-aided error-probability experiments, ROC sweeps for the
plug-in detectors, and frame-protocol walks, and persists results as
plot-ready CSV with a reproducibility manifest.

Trials are processed in fixed-size chunks, each drawing from its own
substream derived from (seed, scenario, chunk), so results are identical
regardless of the worker-thread count, and H0/H1 trials share common random
numbers for variance reduction on paired comparisons.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__ as _ARTIFACT_VERSION
from .channel import (
    OneRingParams,
    SystemParams,
    one_ring_covariance,
    sample_observations,
)
from .detection import llr_statistic_from_observations, decide
from .error_analysis import (
    calibrate_equal_error_threshold,
    discrimination,
    error_probabilities_from_discrimination,
)
from .estimation import MlEstimatorConfig, detect_unknown, estimate_covariance
from .exceptions import ConfigurationError, NumericalDomainError
from .validation import matrices_coincide

# Fixed trial chunk so numerics are independent of threading.
CHUNK_TRIALS = 4096

# Spawn-key tags keeping experiment, frame, and calibration streams disjoint.
_STREAM_EXPERIMENT = 0
_STREAM_FRAMES = 1
_STREAM_CALIBRATION = 2

CSV_HEADER = (
    "detector,K,delta_aod_deg,threshold,p_fa_emp,p_md_emp,"
    "p_fa_analytic,p_md_analytic,trials,wall_time_s"
)

FRAME_CSV_HEADER = "frame,hypothesis,statistic,threshold,reference_updated,degenerate"


# =============================================================================
# Configuration
# =============================================================================

@dataclass(frozen=True)
class ThresholdPolicy:
    """How detection thresholds are chosen.

    ``equal_error`` calibrates P_MD = P_FA; ``explicit`` uses ``value``;
    ``sweep`` traces ``count`` thresholds linearly spaced over [lo, hi].
    """

    kind: str
    value: float | None = None
    lo: float | None = None
    hi: float | None = None
    count: int | None = None

    def __post_init__(self):
        if self.kind not in ("equal_error", "explicit", "sweep"):
            raise ConfigurationError(f"unknown threshold policy {self.kind!r}")
        if self.kind == "explicit" and self.value is None:
            raise ConfigurationError("explicit threshold policy requires a value")
        if self.kind == "sweep":
            if self.lo is None or self.hi is None or self.count is None:
                raise ConfigurationError("sweep policy requires lo, hi and count")
            if self.count < 2:
                raise ConfigurationError("sweep count must be >= 2")
            if not self.hi > self.lo:
                raise ConfigurationError("sweep range must satisfy hi > lo")

    def sweep_thresholds(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    @classmethod
    def from_dict(cls, data: dict) -> "ThresholdPolicy":
        allowed = {"kind", "value", "lo", "hi", "count"}
        _reject_unknown(data, allowed, "threshold_policy")
        return cls(**data)


@dataclass(frozen=True)
class DetectorSpec:
    """Which detector runs: genie, or a plug-in estimator variant."""

    kind: str
    beta: float | None = None
    kappa: float = 4.0

    def __post_init__(self):
        if self.kind not in ("genie", "ml", "shrinkage"):
            raise ConfigurationError(f"unknown detector {self.kind!r}")
        if self.kind == "ml":
            # Validate the estimator box eagerly.
            MlEstimatorConfig(kappa=self.kappa, beta=self.beta)

    @property
    def label(self) -> str:
        # No commas: the label is a field of a plain comma-separated file.
        if self.kind == "ml":
            beta = "auto" if self.beta is None else f"{self.beta:g}"
            return f"ml[beta={beta};kappa={self.kappa:g}]"
        return self.kind

    def estimator_config(self) -> MlEstimatorConfig:
        return MlEstimatorConfig(kappa=self.kappa, beta=self.beta)

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorSpec":
        allowed = {"kind", "beta", "kappa"}
        _reject_unknown(data, allowed, "detector")
        return cls(**data)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte Carlo experiment."""

    system: SystemParams
    ring: OneRingParams
    delta_aod_deg: tuple[float, ...]
    k_values: tuple[int, ...]
    trials: int
    seed: int
    threshold_policy: ThresholdPolicy
    detector: DetectorSpec
    output_path: str | None = None
    target_error: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not self.k_values:
            raise ConfigurationError("k_values must be nonempty")
        if any(k < 1 for k in self.k_values):
            raise ConfigurationError("all k_values must be >= 1")
        if not self.delta_aod_deg:
            raise ConfigurationError("delta_aod_deg must be nonempty")
        if self.target_error is not None:
            if not 0 < self.target_error < 1:
                raise ConfigurationError("target_error must lie in (0, 1)")
            needed = math.ceil(25.0 / self.target_error)
            if self.trials < needed:
                raise ConfigurationError(
                    f"target_error={self.target_error} needs trials >= {needed}, "
                    f"got {self.trials}"
                )
        object.__setattr__(self, "delta_aod_deg", tuple(float(d) for d in self.delta_aod_deg))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        allowed = {
            "system",
            "ring",
            "delta_aod_deg",
            "k_values",
            "trials",
            "seed",
            "threshold_policy",
            "detector",
            "output_path",
            "target_error",
        }
        _reject_unknown(data, allowed, "config")
        try:
            system = _system_from_dict(data["system"])
            ring = _ring_from_dict(data["ring"])
            policy = ThresholdPolicy.from_dict(data["threshold_policy"])
            detector = DetectorSpec.from_dict(data["detector"])
        except KeyError as exc:
            raise ConfigurationError(f"missing config section: {exc}") from exc
        return cls(
            system=system,
            ring=ring,
            delta_aod_deg=tuple(data.get("delta_aod_deg", ())),
            k_values=tuple(data.get("k_values", (system.k,))),
            trials=int(data["trials"]),
            seed=int(data["seed"]),
            threshold_policy=policy,
            detector=detector,
            output_path=data.get("output_path"),
            target_error=data.get("target_error"),
        )

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
        return cls.from_dict(data)

    def flattened(self) -> dict[str, str]:
        """Flat key/value echo of the configuration for the run manifest."""
        flat: dict[str, str] = {}
        flat["system.m"] = str(self.system.m)
        flat["system.t"] = str(self.system.t)
        flat["system.k"] = str(self.system.k)
        flat["system.n"] = str(self.system.n)
        flat["system.rho"] = str(self.system.rho)
        flat["system.sigma2"] = str(self.system.sigma2)
        flat["ring.aod_deg"] = str(math.degrees(self.ring.aod_rad))
        flat["ring.spread_deg"] = str(math.degrees(self.ring.spread_rad))
        flat["ring.wavelength_m"] = str(self.ring.wavelength_m)
        flat["ring.spacing_factor"] = str(self.ring.spacing_factor)
        flat["ring.quadrature_points"] = str(self.ring.quadrature_points)
        flat["delta_aod_deg"] = ",".join(str(d) for d in self.delta_aod_deg)
        flat["k_values"] = ",".join(str(k) for k in self.k_values)
        flat["trials"] = str(self.trials)
        flat["seed"] = str(self.seed)
        flat["threshold_policy.kind"] = self.threshold_policy.kind
        if self.threshold_policy.value is not None:
            flat["threshold_policy.value"] = str(self.threshold_policy.value)
        if self.threshold_policy.kind == "sweep":
            flat["threshold_policy.lo"] = str(self.threshold_policy.lo)
            flat["threshold_policy.hi"] = str(self.threshold_policy.hi)
            flat["threshold_policy.count"] = str(self.threshold_policy.count)
        flat["detector"] = self.detector.label
        if self.target_error is not None:
            flat["target_error"] = str(self.target_error)
        return flat


def _reject_unknown(data: dict, allowed: set[str], section: str) -> None:
    if not isinstance(data, dict):
        raise ConfigurationError(f"{section} must be a mapping")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(f"unknown {section} keys: {sorted(unknown)}")


def _system_from_dict(data: dict) -> SystemParams:
    allowed = {"m", "t", "k", "n", "rho", "sigma2"}
    _reject_unknown(data, allowed, "system")
    return SystemParams(**data)


def _ring_from_dict(data: dict) -> OneRingParams:
    allowed = {
        "aod_deg",
        "spread_deg",
        "wavelength_m",
        "spacing_factor",
        "quadrature_points",
    }
    _reject_unknown(data, allowed, "ring")
    kwargs = dict(data)
    # Default AoD 70 degrees: lands the unknown-covariance detectors in a
    # measurable error range for the Table-I style parameters.
    aod = math.radians(kwargs.pop("aod_deg", 70.0))
    spread = math.radians(kwargs.pop("spread_deg", 20.0))
    return OneRingParams(aod_rad=aod, spread_rad=spread, **kwargs)


# =============================================================================
# Result rows and persistence
# =============================================================================

@dataclass(frozen=True)
class ResultRow:
    """One (detector, K, delta, threshold) operating point."""

    detector: str
    k: int
    delta_aod_deg: float
    threshold: float
    p_fa_emp: float
    p_md_emp: float
    p_fa_analytic: float | None
    p_md_analytic: float | None
    trials: int
    wall_time_s: float

    def __post_init__(self):
        for name in ("p_fa_emp", "p_md_emp"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        is_genie = self.detector == "genie"
        has_analytic = self.p_fa_analytic is not None and self.p_md_analytic is not None
        if is_genie != has_analytic:
            raise ConfigurationError(
                "analytic probabilities must be present exactly for genie rows"
            )
        for name in ("p_fa_analytic", "p_md_analytic"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class FrameRecord:
    """Per-frame outcome of a frame-protocol walk."""

    frame: int
    hypothesis: str
    statistic: float
    threshold: float
    reference_updated: bool
    degenerate: bool = False


def _fmt(value) -> str:
    if value is None:
        return ""
    return str(value)


def emit_results(rows, path, fmt: str = "csv", *, config: ExperimentConfig | None = None) -> Path:
    """Write result rows as CSV plus a key=value run manifest sidecar.

    Rows are sorted by (detector, K, delta, threshold) so output does not
    depend on generation order; identical (config, seed) runs produce
    byte-identical CSV apart from the wall_time_s column.
    """
    if fmt != "csv":
        raise ConfigurationError(f"unsupported output format {fmt!r}")
    rows = list(rows)
    if not rows:
        raise ConfigurationError("no result rows to emit")
    rows.sort(key=lambda r: (r.detector, r.k, r.delta_aod_deg, r.threshold))
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fields = [
                row.detector,
                str(row.k),
                _fmt(row.delta_aod_deg),
                _fmt(row.threshold),
                _fmt(row.p_fa_emp),
                _fmt(row.p_md_emp),
                _fmt(row.p_fa_analytic),
                _fmt(row.p_md_analytic),
                str(row.trials),
                _fmt(row.wall_time_s),
            ]
            fh.write(",".join(fields) + "\n")
    manifest = path.with_name(path.name + ".manifest.txt")
    with open(manifest, "w", encoding="utf-8") as fh:
        fh.write(f"artifact=covchange {_ARTIFACT_VERSION}\n")
        fh.write(f"rows={len(rows)}\n")
        if config is not None:
            fh.write(f"seed={config.seed}\n")
            for key, value in sorted(config.flattened().items()):
                fh.write(f"config.{key}={value}\n")
    return path


def read_results(path) -> list[ResultRow]:
    """Parse a results CSV back into rows (inverse of :func:`emit_results`)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(
                ResultRow(
                    detector=rec["detector"],
                    k=int(rec["K"]),
                    delta_aod_deg=float(rec["delta_aod_deg"]),
                    threshold=float(rec["threshold"]),
                    p_fa_emp=float(rec["p_fa_emp"]),
                    p_md_emp=float(rec["p_md_emp"]),
                    p_fa_analytic=float(rec["p_fa_analytic"]) if rec["p_fa_analytic"] else None,
                    p_md_analytic=float(rec["p_md_analytic"]) if rec["p_md_analytic"] else None,
                    trials=int(rec["trials"]),
                    wall_time_s=float(rec["wall_time_s"]),
                )
            )
    return rows


def emit_frame_log(records, path) -> Path:
    """Write a frame walk log as CSV."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(FRAME_CSV_HEADER + "\n")
        for rec in records:
            fh.write(
                f"{rec.frame},{rec.hypothesis},{rec.statistic!r},{rec.threshold!r},"
                f"{int(rec.reference_updated)},{int(rec.degenerate)}\n"
            )
    return path


# =============================================================================
# Batched statistic simulation
# =============================================================================

def _substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _complex_normal_batch(rng: np.random.Generator, shape) -> np.ndarray:
    return math.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _psd_factor(eff: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(eff)
    return v * np.sqrt(np.maximum(w, 0.0))


class _GenieStatistic:
    """Vectorized genie LLR: k * R + sum_k h^H M h."""

    def __init__(self, c0, c1, noise_var_eff, k):
        disc = discrimination(c0, c1, noise_var_eff)
        self._m_matrix = disc.m_matrix
        self._offset = k * disc.log_det_ratio

    def __call__(self, estimates: np.ndarray) -> np.ndarray:
        quad = np.einsum(
            "tmk,mn,tnk->t", estimates.conj(), self._m_matrix, estimates, optimize=True
        )
        return self._offset + np.real(quad)


class _PluginStatistic:
    """Vectorized plug-in LLR with the post-change covariance estimated.

    Works in the sample-covariance eigenbasis, where both estimators keep the
    sample eigenvectors and the effective covariance reduces to elementwise
    eigenvalue maps.
    """

    def __init__(self, c0, detector: DetectorSpec, noise_var_eff, k):
        eff0 = c0 + noise_var_eff * np.eye(c0.shape[0])
        sign, logdet = np.linalg.slogdet(eff0)
        if sign.real <= 0:
            raise NumericalDomainError("reference effective covariance is singular")
        self._logdet0 = float(logdet)
        self._inv0 = np.linalg.inv(eff0)
        self._noise = noise_var_eff
        self._k = k
        self._detector = detector

    def __call__(self, estimates: np.ndarray) -> np.ndarray:
        k = self._k
        noise = self._noise
        m = estimates.shape[1]
        s_batch = np.einsum("tmk,tnk->tmn", estimates, estimates.conj()) / k
        s_batch = 0.5 * (s_batch + s_batch.conj().transpose(0, 2, 1))
        lam = np.linalg.eigvalsh(s_batch)
        tr0 = np.real(np.einsum("mn,tnm->t", self._inv0, s_batch))

        det = self._detector
        if det.kind == "ml":
            if det.beta is None:
                beta = np.maximum(
                    (lam.sum(axis=1) / m - noise) / math.sqrt(det.kappa), 1e-6
                )
            else:
                beta = np.full(lam.shape[0], det.beta)
            lower = 1.0 / (det.kappa * beta + noise)
            upper = 1.0 / (beta + noise)
            with np.errstate(divide="ignore"):
                inv = np.where(lam > 0.0, 1.0 / np.where(lam > 0.0, lam, 1.0), np.inf)
            inv_eff = np.minimum(np.maximum(lower[:, None], inv), upper[:, None])
            logdet1 = -np.log(inv_eff).sum(axis=1)
            tr1 = (inv_eff * lam).sum(axis=1)
        elif det.kind == "shrinkage":
            if k < 2:
                raise ConfigurationError("shrinkage detector requires k >= 2")
            tr_s = lam.sum(axis=1)
            tr_s2 = (lam**2).sum(axis=1)
            numerator = -tr_s2 / m + tr_s**2
            denominator = (k - 1) / m * (tr_s2 - tr_s**2 / m)
            with np.errstate(divide="ignore", invalid="ignore"):
                rho = np.where(
                    denominator <= 1e-12 * tr_s**2,
                    1.0,
                    np.clip(numerator / denominator, 0.0, 1.0),
                )
            mu = tr_s / m
            floored = np.maximum((1.0 - rho[:, None]) * lam + (rho * mu)[:, None] - noise, 0.0)
            eff_eigs = floored + noise
            if np.any(eff_eigs <= 0.0):
                raise NumericalDomainError(
                    "singular effective covariance in shrinkage statistic"
                )
            logdet1 = np.log(eff_eigs).sum(axis=1)
            tr1 = (lam / eff_eigs).sum(axis=1)
        else:
            raise ConfigurationError(f"no plug-in statistic for detector {det.kind!r}")
        return k * (self._logdet0 + tr0 - logdet1 - tr1)


def _make_statistic(detector: DetectorSpec, c0, c1, noise_var_eff, k):
    if detector.kind == "genie":
        return _GenieStatistic(c0, c1, noise_var_eff, k)
    return _PluginStatistic(c0, detector, noise_var_eff, k)


def paired_statistics(
    detector: DetectorSpec,
    c0: np.ndarray,
    c1: np.ndarray,
    noise_var_eff: float,
    k: int,
    trials: int,
    seed: int,
    *,
    stream: int = _STREAM_EXPERIMENT,
    scenario: int = 0,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial detector statistics under H0 and H1, paired on common draws.

    The same standard-normal draws are colored by the H0 and H1 effective
    covariance factors, so the two returned arrays are positively coupled.
    """
    statistic = _make_statistic(detector, c0, c1, noise_var_eff, k)
    m = c0.shape[0]
    factor0 = _psd_factor(c0 + noise_var_eff * np.eye(m))
    factor1 = _psd_factor(c1 + noise_var_eff * np.eye(m))

    n_chunks = (trials + CHUNK_TRIALS - 1) // CHUNK_TRIALS

    def run_chunk(idx: int) -> tuple[np.ndarray, np.ndarray]:
        count = min(CHUNK_TRIALS, trials - idx * CHUNK_TRIALS)
        rng = _substream(seed, stream, scenario, idx)
        z = _complex_normal_batch(rng, (count, m, k))
        est0 = np.einsum("ij,tjk->tik", factor0, z)
        est1 = np.einsum("ij,tjk->tik", factor1, z)
        return statistic(est0), statistic(est1)

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_chunk, range(n_chunks)))
    else:
        parts = [run_chunk(i) for i in range(n_chunks)]
    stats0 = np.concatenate([p[0] for p in parts])
    stats1 = np.concatenate([p[1] for p in parts])
    return stats0, stats1


def empirical_rates(stats_h0: np.ndarray, stats_h1: np.ndarray, threshold: float) -> tuple[float, float]:
    """(P_FA, P_MD) observed at a threshold: strict exceedance declares H1."""
    p_fa = float(np.mean(stats_h0 > threshold))
    p_md = float(np.mean(stats_h1 <= threshold))
    return p_fa, p_md


def pmd_at_pfa(stats_h0: np.ndarray, stats_h1: np.ndarray, pfa_target: float) -> float:
    """Missed-detection rate at a matched false-alarm operating point.

    The threshold is the empirical (1 - pfa_target) quantile of the H0
    statistics; returns the H1 fraction at or below it.
    """
    if not 0.0 < pfa_target < 1.0:
        raise ConfigurationError("pfa_target must lie in (0, 1)")
    threshold = float(np.quantile(stats_h0, 1.0 - pfa_target))
    return float(np.mean(stats_h1 <= threshold))


def calibrate_empirical_threshold(
    detector: DetectorSpec,
    c0: np.ndarray,
    c1: np.ndarray,
    noise_var_eff: float,
    k: int,
    trials: int,
    seed: int,
    *,
    threads: int = 1,
) -> float:
    """Equal-error threshold from a pilot Monte Carlo run.

    Bisection on the empirical P_MD - P_FA gap, which is a nondecreasing step
    function of the threshold.
    """
    stats0, stats1 = paired_statistics(
        detector,
        c0,
        c1,
        noise_var_eff,
        k,
        trials,
        seed,
        stream=_STREAM_CALIBRATION,
        threads=threads,
    )
    lo = float(min(stats0.min(), stats1.min())) - 1.0
    hi = float(max(stats0.max(), stats1.max())) + 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        p_fa, p_md = empirical_rates(stats0, stats1, mid)
        if p_md - p_fa > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# =============================================================================
# Experiments
# =============================================================================

def _covariance_pair(cfg: ExperimentConfig, delta_deg: float) -> tuple[np.ndarray, np.ndarray]:
    c0 = one_ring_covariance(cfg.ring, cfg.system.m)
    c1 = one_ring_covariance(cfg.ring.with_aod_offset(math.radians(delta_deg)), cfg.system.m)
    if matrices_coincide(c0, c1):
        raise ConfigurationError(
            f"delta_aod_deg={delta_deg} produces identical covariances (degenerate test)"
        )
    return c0, c1


def run_genie_experiment(cfg: ExperimentConfig, *, threads: int = 1) -> list[ResultRow]:
    """Genie-aided detector error rates with Theorem-style analytic values.

    For every (K, delta) pair: builds the pre/post one-ring covariances,
    picks thresholds per policy, measures empirical rates over ``cfg.trials``
    trials per hypothesis, and attaches the analytic rates.
    """
    if cfg.detector.kind != "genie":
        raise ConfigurationError("run_genie_experiment requires detector kind 'genie'")
    noise = cfg.system.noise_var_eff
    rows: list[ResultRow] = []
    scenario = 0
    for k in cfg.k_values:
        for delta in cfg.delta_aod_deg:
            start = time.perf_counter()
            c0, c1 = _covariance_pair(cfg, delta)
            disc = discrimination(c0, c1, noise)
            policy = cfg.threshold_policy
            if policy.kind == "equal_error":
                thresholds = [calibrate_equal_error_threshold(c0, c1, noise, k)]
            elif policy.kind == "explicit":
                thresholds = [float(policy.value)]
            else:
                thresholds = [float(t) for t in policy.sweep_thresholds()]
            stats0, stats1 = paired_statistics(
                cfg.detector,
                c0,
                c1,
                noise,
                k,
                cfg.trials,
                cfg.seed,
                scenario=scenario,
                threads=threads,
            )
            elapsed = time.perf_counter() - start
            for theta in thresholds:
                p_fa, p_md = empirical_rates(stats0, stats1, theta)
                p_md_an, p_fa_an = error_probabilities_from_discrimination(disc, k, theta)
                rows.append(
                    ResultRow(
                        detector=cfg.detector.label,
                        k=k,
                        delta_aod_deg=delta,
                        threshold=theta,
                        p_fa_emp=p_fa,
                        p_md_emp=p_md,
                        p_fa_analytic=p_fa_an,
                        p_md_analytic=p_md_an,
                        trials=cfg.trials,
                        wall_time_s=elapsed,
                    )
                )
            scenario += 1
    return rows


def run_roc_experiment(cfg: ExperimentConfig, *, threads: int = 1) -> list[ResultRow]:
    """ROC sweep for the plug-in detectors (threshold policy must be sweep).

    Each threshold row reports (P_FA, P_MD) from the same paired trial batch,
    tracing the full error trade-off curve.
    """
    if cfg.detector.kind not in ("ml", "shrinkage"):
        raise ConfigurationError("run_roc_experiment requires an ml or shrinkage detector")
    if cfg.threshold_policy.kind != "sweep":
        raise ConfigurationError("run_roc_experiment requires a sweep threshold policy")
    noise = cfg.system.noise_var_eff
    rows: list[ResultRow] = []
    scenario = 0
    for k in cfg.k_values:
        for delta in cfg.delta_aod_deg:
            start = time.perf_counter()
            c0, c1 = _covariance_pair(cfg, delta)
            stats0, stats1 = paired_statistics(
                cfg.detector,
                c0,
                c1,
                noise,
                k,
                cfg.trials,
                cfg.seed,
                scenario=scenario,
                threads=threads,
            )
            elapsed = time.perf_counter() - start
            for theta in cfg.threshold_policy.sweep_thresholds():
                p_fa, p_md = empirical_rates(stats0, stats1, float(theta))
                rows.append(
                    ResultRow(
                        detector=cfg.detector.label,
                        k=k,
                        delta_aod_deg=delta,
                        threshold=float(theta),
                        p_fa_emp=p_fa,
                        p_md_emp=p_md,
                        p_fa_analytic=None,
                        p_md_analytic=None,
                        trials=cfg.trials,
                        wall_time_s=elapsed,
                    )
                )
            scenario += 1
    return rows


def simulate_frames(
    cfg: ExperimentConfig,
    num_frames: int,
    change_frame: int,
    *,
    threads: int = 1,
) -> list[FrameRecord]:
    """Walk frames of the detection protocol with a single injected change.

    Frames before ``change_frame`` draw from the pre-change covariance, later
    frames from the post-change one (first entry of ``delta_aod_deg``).  Each
    frame tests its first K blocks against the running reference covariance;
    a declared change updates the reference to the current estimate (the
    hypothesized post-change matrix for the genie, the data-driven estimate
    for plug-in detectors).

    The hypothesized alternative and threshold are fixed from the configured
    scenario pair at walk start; once the reference equals the alternative,
    genie frames are degenerate and resolve to H0.
    """
    if num_frames < 1:
        raise ConfigurationError("num_frames must be >= 1")
    if not 1 <= change_frame <= num_frames:
        raise ConfigurationError(
            f"change_frame must lie in [1, {num_frames}], got {change_frame}"
        )
    delta = cfg.delta_aod_deg[0]
    c_pre, c_post = _covariance_pair(cfg, delta)
    noise = cfg.system.noise_var_eff
    k = cfg.k_values[0]
    params = cfg.system.with_k(k)

    policy = cfg.threshold_policy
    if policy.kind == "explicit":
        threshold = float(policy.value)
    elif policy.kind == "equal_error":
        if cfg.detector.kind == "genie":
            threshold = calibrate_equal_error_threshold(c_pre, c_post, noise, k)
        else:
            pilot = max(cfg.trials // 10, 100)
            threshold = calibrate_empirical_threshold(
                cfg.detector, c_pre, c_post, noise, k, pilot, cfg.seed, threads=threads
            )
    else:
        raise ConfigurationError("frame simulation accepts equal_error or explicit policies")

    reference = c_pre
    records: list[FrameRecord] = []
    for frame in range(1, num_frames + 1):
        truth = c_post if frame >= change_frame else c_pre
        obs = sample_observations(
            truth,
            params,
            np.random.SeedSequence(cfg.seed, spawn_key=(_STREAM_FRAMES, frame)),
            k=k,
        )
        if cfg.detector.kind == "genie":
            if matrices_coincide(reference, c_post):
                records.append(
                    FrameRecord(
                        frame=frame,
                        hypothesis="H0",
                        statistic=0.0,
                        threshold=threshold,
                        reference_updated=False,
                        degenerate=True,
                    )
                )
                continue
            stat = llr_statistic_from_observations(obs, reference, c_post)
            decision = decide(stat.value, threshold)
            updated = decision.change_detected
            if updated:
                reference = c_post
        else:
            decision = detect_unknown(
                obs,
                reference,
                method=cfg.detector.kind,
                config=cfg.detector.estimator_config(),
                threshold=threshold,
            )
            updated = decision.change_detected
            if updated:
                reference = estimate_covariance(
                    obs, cfg.detector.kind, cfg.detector.estimator_config()
                )
        records.append(
            FrameRecord(
                frame=frame,
                hypothesis=decision.hypothesis,
                statistic=decision.statistic,
                threshold=threshold,
                reference_updated=updated,
                degenerate=decision.degenerate,
            )
        )
    return records
