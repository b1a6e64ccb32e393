import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.integrate import IntegrationWarning

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        warnings.simplefilter("ignore", IntegrationWarning)
        yield


def cauchy(x, s=1.0):
    """Density of the unit-kernel alpha = 1 process at time s: scale pi s."""
    c = np.pi * s
    return c / (np.pi * (c ** 2 + np.asarray(x) ** 2))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
