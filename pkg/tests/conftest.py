from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def gen() -> np.random.Generator:
    return np.random.default_rng(20240601)


def random_pd(g: np.random.Generator, dim: int) -> np.ndarray:
    a = g.standard_normal((dim, dim))
    return a @ a.T + 0.1 * np.eye(dim)


def brute_schur(joint: np.ndarray, n: int, p: int, idx0: list[int]) -> np.ndarray:
    """Conditional covariance of the block sum by explicit selection matrices and dense inversion."""
    dim = n * p
    s = np.zeros((p, dim))
    for i in idx0:
        s[:, i * p : (i + 1) * p] = np.eye(p)
    comp = [i for i in range(n) if i not in idx0]
    var_s = s @ joint @ s.T
    if not comp:
        return var_s
    sel = np.zeros((len(comp) * p, dim))
    for r, i in enumerate(comp):
        sel[r * p : (r + 1) * p, i * p : (i + 1) * p] = np.eye(p)
    cross = s @ joint @ sel.T
    return var_s - cross @ np.linalg.inv(sel @ joint @ sel.T) @ cross.T


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def add(number: int, name: str, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {name}: {detail}")
        return passed

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
