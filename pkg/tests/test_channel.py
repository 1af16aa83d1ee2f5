import numpy as np
import pytest

from covchange import (
    ConfigurationError,
    ModelFidelityError,
    NumericalDomainError,
    OneRingParams,
    PilotSet,
    SystemParams,
    make_dft_pilots,
    observe_and_estimate,
    one_ring_covariance,
    sample_channels,
    sample_observations,
)

from conftest import make_ring


class TestSystemParams:
    def test_pilot_energy_exact(self):
        p = SystemParams(m=32, t=32, k=30, rho=2.5, sigma2=1.0)
        assert p.e0 == 2.5 * 32
        assert p.noise_var_eff == 1.0 / 80.0

    def test_snr_db(self):
        p = SystemParams(m=4, t=4, k=2, rho=1.0, sigma2=1.0)
        assert p.snr_db == pytest.approx(0.0)
        p = SystemParams(m=4, t=4, k=2, rho=10.0, sigma2=1.0)
        assert p.snr_db == pytest.approx(10.0)

    def test_frame_defaults_to_detection_window(self):
        p = SystemParams(m=4, t=4, k=7)
        assert p.n == 7

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(m=0, t=4, k=2),
            dict(m=4, t=4, k=0),
            dict(m=4, t=4, k=5, n=3),
            dict(m=4, t=4, k=2, rho=0.0),
            dict(m=4, t=4, k=2, sigma2=-1.0),
        ],
    )
    def test_invalid_parameters(self, kwargs):
        with pytest.raises(ConfigurationError):
            SystemParams(**kwargs)


class TestOneRingCovariance:
    # Independent adaptive-quadrature oracle values (scipy.integrate.quad on
    # real/imag parts, epsabs 1e-13) for aod=30 deg, spread=20 deg,
    # wavelength 3.76 mm, spacing 2 wavelengths: first row C[0, j].
    ORACLE_ROW = [
        1.0 + 0.0j,
        0.972770334770075 - 0.18849252915980433j,
        0.8939576098479383 - 0.35995803296256734j,
        0.7718471053635789 - 0.49930890176998555j,
    ]

    def test_unit_diagonal(self):
        cov = one_ring_covariance(make_ring(), 8)
        assert np.abs(np.diag(cov) - 1.0).max() < 1e-10

    def test_unit_diagonal_before_projection(self):
        # The lag-0 ring integral is the mean of exp(0): exactly one.
        from covchange.channel import _one_ring_lag_integrals

        vals = _one_ring_lag_integrals(make_ring(aod_deg=163.0, spread_deg=41.0), np.array([0]))
        assert vals[0] == 1.0 + 0.0j

    def test_zero_lag_entry_is_exactly_one(self):
        cov = one_ring_covariance(make_ring(aod_deg=13.0, spread_deg=33.0), 3)
        assert cov[1, 1] == pytest.approx(1.0, abs=1e-14)

    def test_zero_spread_rank_one(self):
        ring = make_ring(aod_deg=25.0, spread_deg=0.0)
        cov = one_ring_covariance(ring, 5)
        m1, m2 = np.meshgrid(np.arange(5), np.arange(5), indexing="ij")
        d = ring.pair_distance_m(m1, m2)
        expected = np.exp(-1j * (2 * np.pi / ring.wavelength_m) * d * np.sin(ring.aod_rad))
        assert np.abs(cov - expected).max() < 1e-12
        eigs = np.linalg.eigvalsh(cov)
        assert eigs[-1] == pytest.approx(5.0, rel=1e-10)
        assert np.abs(eigs[:-1]).max() < 1e-10

    def test_matches_adaptive_quadrature_oracle(self):
        cov = one_ring_covariance(make_ring(aod_deg=30.0), 4)
        for j, expected in enumerate(self.ORACLE_ROW):
            assert cov[0, j] == pytest.approx(expected, abs=1e-8)

    def test_full_table_matches_tenfold_resolution(self):
        ring = make_ring(aod_deg=30.0)
        coarse = one_ring_covariance(ring, 4)
        fine = one_ring_covariance(
            OneRingParams(
                aod_rad=ring.aod_rad,
                spread_rad=ring.spread_rad,
                quadrature_points=10 * ring.quadrature_points,
            ),
            4,
        )
        assert np.abs(coarse - fine).max() < 1e-8

    def test_hermitian_and_psd_after_projection(self):
        for aod in (5.0, 40.0, 70.0, 88.0, 170.0):
            cov = one_ring_covariance(make_ring(aod_deg=aod, spread_deg=35.0), 12)
            assert np.abs(cov - cov.conj().T).max() < 1e-12
            eigs = np.linalg.eigvalsh(cov)
            assert eigs[0] >= -1e-10 * eigs[-1]

    def test_toeplitz_structure(self):
        cov = one_ring_covariance(make_ring(), 6)
        for d in range(1, 6):
            lags = np.diagonal(cov, offset=d)
            assert np.abs(lags - lags[0]).max() < 1e-12

    def test_model_fidelity_error_at_endfire(self):
        # At sin(aod) = 0 the oscillatory term vanishes and the bare real
        # exponent pushes off-diagonal magnitudes beyond the diagonal: the
        # defect exceeds the repairable window and must be reported.
        with pytest.raises(ModelFidelityError):
            one_ring_covariance(make_ring(aod_deg=0.0, spread_deg=20.0), 12)

    def test_model_fidelity_error_on_nonphysical_parameters(self):
        ring = make_ring(spread_deg=80.0, spacing_factor=150.0)
        with pytest.raises(ModelFidelityError):
            one_ring_covariance(ring, 16)

    def test_quadrature_resolution_floor(self):
        with pytest.raises(ConfigurationError):
            OneRingParams(aod_rad=0.5, spread_rad=0.1, quadrature_points=32)

    def test_dimension_validation(self):
        with pytest.raises(ConfigurationError):
            one_ring_covariance(make_ring(), 0)


class TestDftPilots:
    @pytest.mark.parametrize("t,m", [(2, 2), (4, 2), (32, 32)])
    def test_orthogonality(self, t, m):
        pilots = make_dft_pilots(t, m)
        gram = pilots.downlink_pilot.conj().T @ pilots.downlink_pilot
        assert np.abs(gram - t * np.eye(m)).max() < 1e-10 * t
        assert np.vdot(pilots.uplink_pilot, pilots.uplink_pilot).real == pytest.approx(t)

    def test_requires_enough_pilot_length(self):
        with pytest.raises(ConfigurationError):
            make_dft_pilots(2, 4)

    def test_pilot_set_validates_normalization(self):
        with pytest.raises(ConfigurationError):
            PilotSet(uplink_pilot=np.ones(4) * 2.0, downlink_pilot=np.eye(4) * 2.0)


class TestSampleChannels:
    def test_zero_covariance_gives_zero_samples(self):
        h = sample_channels(np.zeros((3, 3)), 10, seed=1)
        assert np.all(h == 0)

    def test_zero_variance_coordinate(self):
        h = sample_channels(np.diag([2.0, 0.0]), 50, seed=2)
        assert np.all(h[1] == 0)
        assert np.any(h[0] != 0)

    def test_law_of_large_numbers(self):
        k = 100_000
        h = sample_channels(np.eye(2), k, seed=3)
        emp = h @ h.conj().T / k
        assert np.linalg.norm(emp - np.eye(2)) < 0.05 * np.linalg.norm(np.eye(2))

    def test_deterministic_for_fixed_seed(self):
        a = sample_channels(np.eye(4), 16, seed=42)
        b = sample_channels(np.eye(4), 16, seed=42)
        assert np.array_equal(a, b)

    def test_rejects_non_psd(self):
        with pytest.raises(NumericalDomainError):
            sample_channels(np.diag([1.0, -0.5]), 4, seed=0)


class TestObserveAndEstimate:
    def _params(self, **kwargs):
        defaults = dict(m=4, t=4, k=64, rho=1.0, sigma2=1.0)
        defaults.update(kwargs)
        return SystemParams(**defaults)

    def test_noiseless_estimates_recover_channels_exactly(self):
        params = self._params(sigma2=0.0)
        pilots = make_dft_pilots(params.t, params.m)
        cov = one_ring_covariance(make_ring(), params.m)
        channels = sample_channels(cov, params.k, seed=7)
        for link in ("uplink", "downlink"):
            obs = observe_and_estimate(cov, params, pilots, link, seed=7)
            # Channel substream is shared with sample_channels for equal seeds.
            assert np.abs(obs.estimates - channels).max() < 1e-10

    def test_uplink_downlink_share_channel_draws(self):
        params = self._params(sigma2=0.0)
        pilots = make_dft_pilots(params.t, params.m)
        cov = one_ring_covariance(make_ring(), params.m)
        up = observe_and_estimate(cov, params, pilots, "uplink", seed=11)
        dl = observe_and_estimate(cov, params, pilots, "downlink", seed=11)
        assert np.abs(up.estimates - dl.estimates).max() < 1e-10

    def test_scalar_passthrough(self):
        params = SystemParams(m=1, t=1, k=8, rho=1.0, sigma2=0.0)
        pilots = make_dft_pilots(1, 1)
        obs = observe_and_estimate(np.eye(1), params, pilots, "uplink", seed=5)
        channels = sample_channels(np.eye(1), 8, seed=5)
        assert np.abs(obs.estimates - channels).max() < 1e-12

    def test_estimate_covariance_is_signal_plus_noise_floor(self):
        params = self._params(k=100_000)
        pilots = make_dft_pilots(params.t, params.m)
        obs = observe_and_estimate(np.eye(4), params, pilots, "downlink", seed=9)
        emp = obs.estimates @ obs.estimates.conj().T / obs.k
        target = (1.0 + 0.25) * np.eye(4)
        assert np.linalg.norm(emp - target) < 0.05 * np.linalg.norm(target)

    def test_estimation_noise_covariance(self):
        params = self._params(k=100_000, sigma2=2.0)
        pilots = make_dft_pilots(params.t, params.m)
        cov = one_ring_covariance(make_ring(), params.m)
        obs = observe_and_estimate(cov, params, pilots, "uplink", seed=13)
        noise = obs.estimates - sample_channels(cov, params.k, seed=13)
        emp = noise @ noise.conj().T / params.k
        target = params.noise_var_eff * np.eye(4)
        assert np.linalg.norm(emp - target) < 0.05 * np.linalg.norm(target)

    def test_dimension_mismatch_rejected(self):
        params = self._params()
        pilots = make_dft_pilots(params.t, params.m)
        with pytest.raises(ConfigurationError):
            observe_and_estimate(np.eye(3), params, pilots, "uplink", seed=1)

    def test_unknown_link_rejected(self):
        params = self._params()
        pilots = make_dft_pilots(params.t, params.m)
        with pytest.raises(ConfigurationError):
            observe_and_estimate(np.eye(4), params, pilots, "sidelink", seed=1)

    def test_fast_path_matches_model(self):
        params = self._params(k=100_000)
        obs = sample_observations(np.eye(4), params, seed=21)
        assert obs.noise_var_eff == params.noise_var_eff
        emp = obs.estimates @ obs.estimates.conj().T / obs.k
        target = 1.25 * np.eye(4)
        assert np.linalg.norm(emp - target) < 0.05 * np.linalg.norm(target)
