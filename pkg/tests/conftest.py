import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def small_dims(min_parties=2, max_parties=4, max_dim=4, max_total=400):
    """Strategy for heterogeneous local dimensions with a bounded total."""
    return (
        st.lists(st.integers(2, max_dim), min_size=min_parties, max_size=max_parties)
        .map(tuple)
        .filter(lambda d: int(np.prod(d)) <= max_total)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _no_capacity_override(monkeypatch):
    monkeypatch.delenv("FORGE_CAPACITY", raising=False)
    monkeypatch.delenv("FORGE_DATA_DIR", raising=False)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
