import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "nordwave",
    deadline=None,
    max_examples=int(os.environ.get("NORDWAVE_HYPOTHESIS_EXAMPLES", "25")),
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("nordwave")

# criterion number -> (passed, detail, seconds)
ACCEPTANCE: dict[int, tuple[bool, str, float]] = {}


@pytest.fixture
def acceptance():
    """Recorder used by the acceptance gate: ``acceptance(n, passed, detail, seconds)``."""
    def record(n, passed, detail, seconds):
        ACCEPTANCE[n] = (bool(passed), detail, seconds)
        print(f"criterion {n}: {'PASS' if passed else 'FAIL'} ({seconds:.1f} s) {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail, sec = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({sec:.1f} s) {detail}")


def direct_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full (untruncated) convolution of two centred coefficient cubes by direct summation."""
    na = (a.shape[0] - 1) // 2
    nb = (b.shape[0] - 1) // 2
    n = na + nb
    out = np.zeros((2 * n + 1,) * 3, dtype=complex)
    sb = b.shape[0]
    for idx in zip(*np.nonzero(a)):
        i, j, k = idx
        out[i:i + sb, j:j + sb, k:k + sb] += a[idx] * b
    return out


def crop(c: np.ndarray, N: int) -> np.ndarray:
    n = (c.shape[0] - 1) // 2
    if N > n:
        out = np.zeros((2 * N + 1,) * 3, dtype=complex)
        out[N - n:N + n + 1, N - n:N + n + 1, N - n:N + n + 1] = c
        return out
    s = slice(n - N, n + N + 1)
    return c[s, s, s]


def rel_err(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def finite(x):
    return x is not None and math.isfinite(x)
