import pytest

from osnmasim.gst import Gst
from osnmasim.scenario import generate_synthetic_constellation

GST0 = Gst(1251, 277200)


@pytest.fixture(scope="session")
def small_bundle():
    """4 satellites, 12 subframes: enough for root acquisition plus a few
    authenticated rounds."""
    return generate_synthetic_constellation(seed=7, n_sats=4, n_subframes=12,
                                            gst0=GST0)


@pytest.fixture(scope="session")
def wide_bundle():
    """8 satellites, 16 subframes: used by attack and positioning tests."""
    return generate_synthetic_constellation(seed=11, n_sats=8, n_subframes=16,
                                            gst0=GST0)
