"""Shared fixtures: the three reference runs reused across the suite."""

import pytest

from nldyn import AtomField, IntegratorConfig, builtin_model, integrate


@pytest.fixture(scope="session")
def logistic():
    return builtin_model("logistic-identity")


@pytest.fixture(scope="session")
def h1_run(logistic):
    """All-above-one initial data; settles onto the constant 1.75."""
    u0 = AtomField([2.0, 1.5], [0.5, 0.5], 1.0)
    cfg = IntegratorConfig(t_max=200.0, rtol=1e-8, record_every=0.01)
    return integrate(u0, logistic, cfg)


@pytest.fixture(scope="session")
def h2_run(logistic):
    """Initial data in (0, 1); the atoms separate toward 0 and 1."""
    u0 = AtomField([0.7, 0.3], [0.5, 0.5], 1.0)
    cfg = IntegratorConfig(t_max=200.0, rtol=1e-8, record_every=0.01)
    return integrate(u0, logistic, cfg)


@pytest.fixture(scope="session")
def h3_run(logistic):
    """All-below-zero initial data; settles onto the constant -0.6."""
    u0 = AtomField([-0.2, -1.0], [0.5, 0.5], 1.0)
    cfg = IntegratorConfig(t_max=200.0, rtol=1e-8, record_every=0.01)
    return integrate(u0, logistic, cfg)
