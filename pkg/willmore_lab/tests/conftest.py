import os

# Keep test runs from writing event logs or traces; must precede package imports.
os.environ.setdefault("WILLMORE_LAB_LOG_DIR", "")
os.environ.pop("LOGFIRE_API_KEY", None)

import numpy as np
import pytest

from willmore_lab.config import get_settings
from willmore_lab.services.surface_catalog import zoo


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sphere():
    return zoo("sphere")


@pytest.fixture
def clifford():
    return zoo("clifford-torus-projected")


@pytest.fixture
def inverted_catenoid():
    return zoo("inverted-catenoid")


@pytest.fixture
def inverted_enneper():
    return zoo("inverted-enneper")


@pytest.fixture
def single_thread(monkeypatch):
    """Settings with one worker thread; cache cleared on both sides."""
    monkeypatch.setenv("WILLMORE_LAB_THREADS", "1")
    get_settings.cache_clear()
    yield get_settings()
    get_settings.cache_clear()
