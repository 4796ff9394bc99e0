import os
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lrxxz import master, model, observables

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=300,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record the verdict line of one acceptance criterion; returns ``ok``."""
    def report(k: int, ok: bool, detail: str) -> bool:
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[k] = line
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])


def pytest_collection_modifyitems(config, items):
    if os.environ.get("LRXXZ_FLAGSHIP") == "1":
        return
    skip = pytest.mark.skip(reason="flagship run; set LRXXZ_FLAGSHIP=1")
    for item in items:
        if "flagship" in item.keywords:
            item.add_marker(skip)


@lru_cache(maxsize=None)
def _exact(N, alpha, gamma):
    cfg = model.ChainConfig(N=N, alpha=alpha, gamma=gamma)
    rho = master.steady_state(cfg, dt=0.1 if N <= 9 else 0.2)
    rho.flags.writeable = False
    return rho


@pytest.fixture(scope="session")
def exact_ness():
    """Cached exact steady state for ``(N, alpha, gamma)``."""
    return _exact


@pytest.fixture(scope="session")
def exact_current():
    def f(N, alpha, gamma=2.0):
        return float(observables.bond_currents(_exact(N, float(alpha), float(gamma))).mean())
    return f


def random_state(rng, n):
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


def random_density(rng, n, rank=None):
    d = 1 << n
    a = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
