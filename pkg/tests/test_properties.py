"""Randomized property suites, runnable standalone.

Each `run_*` helper executes a batch of randomized cases and returns the
number of failures, so the acceptance suite can reuse them verbatim.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covchange import (
    GchiSqSpec,
    OneRingParams,
    ResultRow,
    SystemParams,
    decide,
    discrimination,
    emit_results,
    gchi2_cdf,
    llr_statistic,
    one_ring_covariance,
    read_results,
    sample_channels,
    sample_observations,
)

N_CASES = 1000


def _random_psd(rng, m, rank=None):
    rank = m if rank is None else rank
    a = rng.normal(size=(m, rank)) + 1j * rng.normal(size=(m, rank))
    return (a @ a.conj().T) / rank


def run_llr_antisymmetry(n_cases: int, seed: int) -> int:
    """llr(s; c0, c1) must equal -llr(s; c1, c0)."""
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(n_cases):
        m = int(rng.integers(1, 7))
        c0, c1 = _random_psd(rng, m), _random_psd(rng, m)
        s = _random_psd(rng, m)
        k = int(rng.integers(1, 40))
        noise = float(rng.uniform(0.01, 0.5))
        fwd = llr_statistic(s, k, c0, c1, noise).value
        bwd = llr_statistic(s, k, c1, c0, noise).value
        scale = max(abs(fwd), abs(bwd), 1e-12)
        if abs(fwd + bwd) > 1e-9 * scale:
            failures += 1
    return failures


def run_route_equivalence(n_cases: int, seed: int) -> int:
    """Likelihood-difference route equals k * (R + tr(M S)) to 1e-8 relative."""
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(n_cases):
        m = int(rng.integers(1, 7))
        c0, c1 = _random_psd(rng, m), _random_psd(rng, m)
        s = _random_psd(rng, m)
        k = int(rng.integers(1, 40))
        noise = float(rng.uniform(0.01, 0.5))
        direct = llr_statistic(s, k, c0, c1, noise).value
        disc = discrimination(c0, c1, noise)
        closed = k * (disc.log_det_ratio + float(np.real(np.trace(disc.m_matrix @ s))))
        scale = max(abs(direct), abs(closed), 1e-12)
        if abs(direct - closed) > 1e-8 * scale:
            failures += 1
    return failures


def run_threshold_monotonicity(n_cases: int, seed: int) -> int:
    """Raising the threshold never flips a decision from H0 to H1."""
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(n_cases):
        stat = float(rng.normal(scale=10.0))
        lo, hi = np.sort(rng.normal(scale=10.0, size=2))
        low_decision = decide(stat, float(lo))
        high_decision = decide(stat, float(hi))
        if high_decision.change_detected and not low_decision.change_detected:
            failures += 1
    return failures


def run_one_ring_invariants(n_cases: int, seed: int) -> int:
    """Hermitian, unit-diagonal, PSD-after-projection one-ring output.

    The angle of departure stays one degree away from the endfire angles,
    where the printed integrand's real exponent is known to break positive
    semidefiniteness beyond the repairable window.
    """
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(n_cases):
        aod = float(rng.uniform(np.deg2rad(1.0), np.deg2rad(179.0)))
        if rng.integers(0, 2):
            aod += np.pi
        spread = float(rng.uniform(0.0, np.deg2rad(45.0)))
        m = int(rng.integers(2, 17))
        ring = OneRingParams(
            aod_rad=aod, spread_rad=spread, quadrature_points=256
        )
        cov = one_ring_covariance(ring, m)
        eigs = np.linalg.eigvalsh(cov)
        # The PSD repair may move the diagonal by up to its eigenvalue
        # budget (1e-6 of the largest eigenvalue); the raw quadrature
        # itself has an exactly unit diagonal.
        diag_tol = 1e-10 + 1.1e-6 * eigs[-1]
        ok = (
            np.abs(cov - cov.conj().T).max() < 1e-12
            and np.abs(np.diag(cov) - 1.0).max() < diag_tol
            and eigs[0] >= -1e-10 * max(eigs[-1], 1e-300)
        )
        if not ok:
            failures += 1
    return failures


def run_csv_round_trip(n_cases: int, seed: int, tmpdir) -> int:
    """emit -> read returns the same rows (sorted by key)."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_cases):
        genie = bool(rng.integers(0, 2))
        rows.append(
            ResultRow(
                detector="genie" if genie else ("shrinkage" if rng.integers(0, 2) else "ml[beta=auto;kappa=4]"),
                k=int(rng.integers(1, 500)),
                delta_aod_deg=float(rng.uniform(0.01, 5.0)),
                threshold=float(rng.normal(scale=100.0)),
                p_fa_emp=float(rng.uniform()),
                p_md_emp=float(rng.uniform()),
                p_fa_analytic=float(rng.uniform()) if genie else None,
                p_md_analytic=float(rng.uniform()) if genie else None,
                trials=int(rng.integers(1, 10**7)),
                wall_time_s=float(rng.uniform(0.0, 1e4)),
            )
        )
    path = emit_results(rows, tmpdir / "roundtrip.csv")
    back = read_results(path)
    key = lambda r: (r.detector, r.k, r.delta_aod_deg, r.threshold)
    expected = sorted(rows, key=key)
    return sum(a != b for a, b in zip(expected, back)) + abs(len(back) - len(rows))


def run_seed_reproducibility(n_cases: int, seed: int) -> int:
    """Identical seeds reproduce sampling output bit for bit."""
    rng = np.random.default_rng(seed)
    failures = 0
    params = SystemParams(m=3, t=4, k=6, rho=1.0, sigma2=0.7)
    cov = np.diag([1.5, 1.0, 0.25])
    for _ in range(n_cases):
        s = int(rng.integers(0, 2**62))
        a = sample_channels(cov, 5, seed=s)
        b = sample_channels(cov, 5, seed=s)
        obs_a = sample_observations(cov, params, seed=s)
        obs_b = sample_observations(cov, params, seed=s)
        if not (np.array_equal(a, b) and np.array_equal(obs_a.estimates, obs_b.estimates)):
            failures += 1
    return failures


class TestPropertySuites:
    def test_llr_antisymmetry(self):
        assert run_llr_antisymmetry(N_CASES, seed=101) == 0

    def test_route_equivalence(self):
        assert run_route_equivalence(N_CASES, seed=202) == 0

    def test_threshold_monotonicity(self):
        assert run_threshold_monotonicity(N_CASES, seed=303) == 0

    def test_one_ring_invariants(self):
        assert run_one_ring_invariants(N_CASES, seed=404) == 0

    def test_csv_round_trip(self, tmp_path):
        assert run_csv_round_trip(N_CASES, seed=505, tmpdir=tmp_path) == 0

    def test_seed_reproducibility(self):
        assert run_seed_reproducibility(N_CASES, seed=606) == 0


class TestHypothesisProperties:
    @given(
        statistic=st.floats(-1e12, 1e12),
        threshold=st.floats(-1e12, 1e12),
        bump=st.floats(0.0, 1e12),
    )
    @settings(max_examples=200, deadline=None)
    def test_decide_monotone_and_tie_rule(self, statistic, threshold, bump):
        base = decide(statistic, threshold)
        raised = decide(statistic, threshold + bump)
        if raised.change_detected:
            assert base.change_detected
        if statistic == threshold:
            assert base.hypothesis == "H0"

    @given(
        scale=st.floats(0.05, 50.0),
        x=st.floats(0.1, 60.0),
        dof=st.sampled_from([2, 4, 10]),
    )
    @settings(max_examples=60, deadline=None)
    def test_gchi2_scale_equivariance(self, scale, x, dof):
        spec_scaled = GchiSqSpec.from_weights([scale], dof)
        spec_unit = GchiSqSpec.from_weights([1.0], dof)
        assert gchi2_cdf(spec_scaled, scale * x) == pytest.approx(
            gchi2_cdf(spec_unit, x), abs=1e-9
        )
