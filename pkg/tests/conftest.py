import numpy as np
import pytest

from permbo import accel


@pytest.fixture(scope="session", autouse=True)
def warm_accel():
    # Trigger numba compilation once so timed tests measure steady-state cost.
    a = np.array([0, 1, 2, 3], dtype=np.int64)
    b = np.array([3, 2, 1, 0], dtype=np.int64)
    x = np.stack([a, b])
    accel.discordant_count(a, b)
    accel.discordance_matrix(x)
    accel.cross_discordance_matrix(x, x)
    W = np.zeros((4, 4))
    accel.ts_trace(W, a)
    accel.ts_trace_batch(W, x)
    accel.qap_cost(W, W, a)
    accel.qap_cost_batch(W, W, x)
    accel.tsp_length(np.zeros((4, 2)), a)


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if name.startswith("test_criterion"):
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {status}")
