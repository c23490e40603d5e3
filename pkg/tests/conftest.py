"""
Shared fixtures for the volsr test suite.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from volsr.core import runtime  # noqa: E402
from volsr.io.synth import synth_field  # noqa: E402


# =============================================================================
# Random state
# =============================================================================

@pytest.fixture
def rng():
    """Seeded generator, fresh for every test."""
    return np.random.default_rng(1234)


# =============================================================================
# Runtime switches
# =============================================================================

@pytest.fixture
def float64():
    """64-bit tensors for numerical oracles."""
    with runtime.using(dtype='float64'):
        yield


@pytest.fixture
def strict():
    """Strict deterministic mode with 64-bit tensors."""
    with runtime.using(dtype='float64', strict=True, threads=1):
        yield


@pytest.fixture(autouse=True)
def _isolated_registry(tmp_path, monkeypatch):
    """Keep run-registry databases and config lookup inside the test's tmp dir."""
    monkeypatch.setenv('VOLSR_DATABASE_URL', f"sqlite:///{tmp_path / 'registry.sqlite'}")
    monkeypatch.delenv('VOLSR_CONFIG', raising=False)
    monkeypatch.setenv('HOME', str(tmp_path / 'home'))


# =============================================================================
# Fields
# =============================================================================

@pytest.fixture
def workdir(tmp_path):
    path = tmp_path / 'work'
    path.mkdir()
    return path


@pytest.fixture
def small_field():
    """32^3 synthetic u/v/w field in float64."""
    return synth_field((32, 32, 32), seed=7, num_modes=24, dtype=np.float64)
