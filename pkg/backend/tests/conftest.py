import numpy as np
import pytest


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    """Keep a developer's MUDKIT_SEED from leaking into tests"""
    monkeypatch.delenv("MUDKIT_SEED", raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
