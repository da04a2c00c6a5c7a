from __future__ import annotations

import numpy as np
import pytest

from haarbellman import BellmanPoint, ExponentPair

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_point(rng, p: float, dim: int = 2, interior: bool = True) -> BellmanPoint:
    e = ExponentPair.from_p(p)
    zeta = rng.normal(size=dim)
    eta = rng.normal(size=dim)
    u, v = 9 * rng.random() ** 2, 9 * rng.random() ** 2
    if interior:
        u, v = u + 1e-3, v + 1e-3
    return BellmanPoint(zeta, eta, np.linalg.norm(zeta) ** p * (1 + u), np.linalg.norm(eta) ** e.q * (1 + v))
