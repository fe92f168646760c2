import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def conv_oracle(img, weights):
    """Nested-loop valid cross-correlation, independent of the library code."""
    img = np.asarray(img, dtype=np.float64)
    w = len(weights)
    h, wd = img.shape
    out = np.zeros((h - w + 1, wd - w + 1))
    for i in range(h - w + 1):
        for j in range(wd - w + 1):
            acc = 0.0
            for a in range(w):
                for b in range(w):
                    acc += weights[a][b] * img[i + a][j + b]
            out[i, j] = acc
    return out


def reflect_oracle(img, m):
    """Mirror padding by explicit index arithmetic."""
    img = np.asarray(img)
    h, w = img.shape

    def idx(k, n):
        if n == 1:
            return 0
        period = 2 * (n - 1)
        k = k % period
        return k if k < n else period - k

    return np.array([[img[idx(i - m, h), idx(j - m, w)] for j in range(w + 2 * m)] for i in range(h + 2 * m)])


# Acceptance criteria register one line each here; printed after the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
