import numpy as np
import pytest

from covchange import OneRingParams


@pytest.fixture
def rng():
    return np.random.default_rng(0xA5EED)


def random_psd(rng, m, rank=None, scale=1.0):
    """Random Hermitian PSD matrix of the given size (and optional rank)."""
    rank = m if rank is None else rank
    a = rng.normal(size=(m, rank)) + 1j * rng.normal(size=(m, rank))
    return scale * (a @ a.conj().T) / rank


def make_ring(aod_deg=70.0, spread_deg=20.0, **kwargs):
    return OneRingParams(
        aod_rad=np.deg2rad(aod_deg), spread_rad=np.deg2rad(spread_deg), **kwargs
    )
