import numpy as np
import pytest

from ghostsim.lattice import make_grid
from ghostsim.source import SourceParams, sigma_from_coherence_length

L_C = 75.0
SIGMA = sigma_from_coherence_length(L_C)


def brute_dft(t: np.ndarray, x: np.ndarray, k: np.ndarray, pitch: float) -> np.ndarray:
    """Direct O(N^2) evaluation of sum_x t(x) exp(-i k x) pitch."""
    return np.exp(-1j * np.outer(k, x)) @ t * pitch


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def source():
    return SourceParams.from_coherence_length(L_C)


@pytest.fixture
def grid256():
    return make_grid(256, 1, 10.0)


# Acceptance verdicts, printed as one line per criterion at the end of the session.
ACCEPTANCE = {}


def record(number: int, title: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    print(ACCEPTANCE[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
