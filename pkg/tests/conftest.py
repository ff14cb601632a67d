import pytest

from adlink.corpus import SyntheticSpec, generate_synthetic
from adlink.extract import extract_fields


@pytest.fixture(scope="session")
def small_spec():
    return SyntheticSpec(n_sources=12, ads_per_source=(8, 16), rng_seed=42)


@pytest.fixture(scope="session")
def small_corpus(small_spec):
    return generate_synthetic(small_spec)


@pytest.fixture(scope="session")
def small_fieldsets(small_corpus):
    return {ad.id: extract_fields(ad.text) for ad in small_corpus}


@pytest.fixture(scope="session")
def default_corpus():
    """The benchmark corpus: 50 sources, ~2,000 ads, seed 7."""
    return generate_synthetic(SyntheticSpec())


@pytest.fixture(scope="session")
def default_fieldsets(default_corpus):
    return {ad.id: extract_fields(ad.text) for ad in default_corpus}
