import pytest

from mirig.cdpgen import CdpDataset, make_dataset


@pytest.fixture(scope="session")
def small_dataset() -> CdpDataset:
    """
    A 16x16 CDP dataset big enough that every joint class has several members.
    """
    return make_dataset(n=1024, seed=0, size=16, mix=0.3)


@pytest.fixture(scope="session")
def clean_dataset() -> CdpDataset:
    """Background-free images, so labels are read off pixels exactly."""
    return make_dataset(n=256, seed=1, size=16, mix=0.0)
