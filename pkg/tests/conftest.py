import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from subclust.linalg import Subspace, random_subspace

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rand_sub(seed, n, l):
    return random_subspace(np.random.default_rng(seed), n, l)


def gram_schmidt(A):
    """Modified Gram-Schmidt, columns in order; independent of the QR path."""
    A = np.array(A, dtype=float)
    Q = np.zeros_like(A)
    for j in range(A.shape[1]):
        v = A[:, j].copy()
        for _ in range(2):
            for i in range(j):
                v -= (Q[:, i] @ v) * Q[:, i]
        Q[:, j] = v / np.linalg.norm(v)
    return Q


def span(*cols):
    return Subspace(np.column_stack(cols))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, desc in mod.CRITERIA.items():
        status, detail = mod.RESULTS.get(num, ("NOT RUN", ""))
        line = f"[{status:4s}] criterion {num}: {desc}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
